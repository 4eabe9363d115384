#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "str/corpus.h"

namespace str {

struct TaggedToken {
  std::string form;
  std::string upos;

  bool operator==(const TaggedToken&) const = default;
};

struct TaggedSentence {
  std::string utterance_id;
  std::vector<TaggedToken> tokens;

  bool operator==(const TaggedSentence&) const = default;
};

/// Half-open token range [begin, end).
using TokenRange = std::pair<std::size_t, std::size_t>;

struct PivotPoint {
  std::string utterance_id;
  std::size_t pivot_index = 0;
  std::string pivot_surface;
  TokenRange prefix_range;
  TokenRange suffix_range;

  bool operator==(const PivotPoint&) const = default;
};

inline constexpr std::string_view kPivotUpos = "VERB";

/// Reads ID, FORM and UPOS from CoNLL-U; every sentence block must carry a
/// `# sent_id = <utterance id>` comment. Multiword ranges and empty nodes are
/// skipped.
std::vector<TaggedSentence> parse_conllu(const std::filesystem::path& path);
std::vector<TaggedSentence> parse_conllu_text(std::string_view text);

std::vector<PivotPoint> find_pivots(const TaggedSentence& sentence);

/// Pivot points for every utterance whose tag count matches its transcript.
/// Forms are replaced positionally by transcript tokens before pivoting, so
/// pivot surfaces are always normalized.
struct PivotTable {
  std::map<std::string, std::vector<PivotPoint>, std::less<>> pivots;
  std::set<std::string, std::less<>> tag_mismatch;
};

PivotTable collect_pivots(const Corpus& corpus, const std::vector<TaggedSentence>& sentences);

} // namespace str
