#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "str/alignment.h"
#include "str/audio.h"
#include "str/augmenter.h"
#include "str/features.h"
#include "str/mt_client.h"

namespace str::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path alignments;
  std::filesystem::path conllu;
  std::filesystem::path memory;
  std::filesystem::path input;
  std::filesystem::path out;
  std::optional<std::filesystem::path> stats;
  std::vector<std::filesystem::path> stats_files;

  std::string source_lang = "en";
  std::string target_lang = "de";
  AlignmentOptions alignment;
  AugmentOptions augment;

  std::string backend; // empty: no translation step in `augment`
  std::string endpoint;
  std::filesystem::path table;
  HttpBackend http;

  MaterializeOptions audio;
  FeatureOptions features;
  bool apply_cmvn = true;

  bool json = false;
  bool verbose = false;
};

/// Builds the backend named by config.backend ("http", "file" or "identity").
TranslatorBackend backend_from_config(const RunConfig& config);

int cmd_build_memory(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_augment(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_translate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_materialize(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_featurize(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_stats(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Merged report over stats files: totals, per-reason percentages and a
/// one-line summary of original vs augmented counts.
std::string stats_report(const RunStats& merged);

/// Parses argv and dispatches. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace str::cli
