#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "str/augmenter.h"

namespace str {

// Composition manifest: one JSON object per line,
// {"id", "segments": [{"utt", "t0", "t1"}], "src_text", "tgt_text", "provenance"}.
// tgt_text is null until a translation has been filled in.
std::string example_to_json(const AugmentedExample& example);
AugmentedExample example_from_json(std::string_view line);

std::string examples_to_jsonl(const std::vector<AugmentedExample>& examples);
std::vector<AugmentedExample> examples_from_jsonl(std::string_view text);

void save_examples(const std::vector<AugmentedExample>& examples,
                   const std::filesystem::path& path);
std::vector<AugmentedExample> load_examples(const std::filesystem::path& path);

std::string stats_to_json(const RunStats& stats);
RunStats stats_from_json(std::string_view text);

} // namespace str
