#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "str/corpus.h"

namespace str {

struct AlignedToken {
  std::size_t index = 0;
  std::string surface;
  double t_start = 0.0; // seconds
  double t_end = 0.0;

  bool operator==(const AlignedToken&) const = default;
};

struct UtteranceAlignment {
  std::string utterance_id;
  std::vector<AlignedToken> tokens;
  bool has_unknown = false;

  bool operator==(const UtteranceAlignment&) const = default;
};

struct AlignmentOptions {
  std::string tier_name = "words";
  // Surfaces the aligner emits for out-of-vocabulary words and spoken noise.
  std::vector<std::string> unknown_markers = {"<unk>", "spn"};
};

enum class DiscardReason { NoAlignment, CountMismatch };

std::string_view to_string(DiscardReason reason);

class ValidationVerdict {
 public:
  static ValidationVerdict keep(UtteranceAlignment alignment);
  static ValidationVerdict discard(DiscardReason reason);

  bool kept() const noexcept { return alignment_.has_value(); }
  const UtteranceAlignment& alignment() const { return alignment_.value(); }
  DiscardReason reason() const noexcept { return reason_; }

 private:
  std::optional<UtteranceAlignment> alignment_;
  DiscardReason reason_ = DiscardReason::NoAlignment;
};

using AlignmentMap = std::map<std::string, UtteranceAlignment, std::less<>>;

/// Reads the interval tier `options.tier_name` from a long- or short-format
/// TextGrid (UTF-8, or UTF-16 with a byte-order mark). Empty intervals are
/// silence and are dropped. The utterance id is the file stem.
UtteranceAlignment parse_textgrid(const std::filesystem::path& path,
                                  const AlignmentOptions& options = {});
UtteranceAlignment parse_textgrid_text(std::string_view text, std::string utterance_id,
                                       const AlignmentOptions& options = {});

/// `utt channel begin duration word [confidence]` per line. Lines starting
/// with ";;" are comments.
AlignmentMap parse_ctm(const std::filesystem::path& path, const AlignmentOptions& options = {});
AlignmentMap parse_ctm_text(std::string_view text, const AlignmentOptions& options = {});

/// Loads every `*.TextGrid` below `dir` (keyed by file stem), or a single
/// `.ctm` file.
AlignmentMap load_alignments(const std::filesystem::path& path,
                             const AlignmentOptions& options = {});

ValidationVerdict validate_alignment(const Utterance& utt,
                                     const UtteranceAlignment* alignment);

} // namespace str
