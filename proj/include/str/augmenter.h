#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "str/alignment.h"
#include "str/corpus.h"
#include "str/suffix_memory.h"
#include "str/tagging.h"

namespace str {

using Rng = std::mt19937_64;

/// Stable across platforms and runs: FNV-1a over (seed, id, slot) finished
/// with a splitmix64 mix.
std::uint64_t utterance_seed(std::uint64_t seed, std::string_view utterance_id,
                             std::uint64_t slot = 0);

/// Unbiased draw from [0, n) by rejection. n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

struct Segment {
  std::string utterance_id;
  double t_start = 0.0;
  double t_end = 0.0;

  bool operator==(const Segment&) const = default;
};

struct Provenance {
  std::string src_a;
  std::string src_b;
  std::string pivot;
  std::size_t pivot_index = 0;
  // Pivot position inside src_b; a donor can contain the same verb twice.
  std::size_t donor_pivot_index = 0;

  bool operator==(const Provenance&) const = default;
};

struct AugmentedExample {
  std::string id;
  std::vector<Segment> segments;
  Tokens transcript;
  std::optional<std::string> translation;
  Provenance provenance;

  bool operator==(const AugmentedExample&) const = default;
};

struct RunStats {
  std::uint64_t total = 0;
  std::uint64_t discarded_no_alignment = 0;
  std::uint64_t discarded_count_mismatch = 0;
  std::uint64_t skipped_tag_mismatch = 0;
  std::uint64_t skipped_no_pivot = 0;
  std::uint64_t skipped_no_candidate = 0;
  std::uint64_t skipped_translation = 0;
  std::uint64_t cut_by_fraction = 0;
  std::uint64_t emitted = 0;

  std::uint64_t discarded() const { return discarded_no_alignment + discarded_count_mismatch; }
  std::uint64_t not_emitted() const {
    return discarded() + skipped_tag_mismatch + skipped_no_pivot + skipped_no_candidate +
           skipped_translation + cut_by_fraction;
  }
  bool balanced() const { return total == emitted + not_emitted(); }

  RunStats& operator+=(const RunStats& other);
  bool operator==(const RunStats&) const = default;
};

struct AugmentOptions {
  std::uint64_t seed = 0;
  double fraction = 1.0;
  std::size_t per_utterance = 1;
  bool allow_identical_suffix = false;
  std::size_t workers = 1;
};

using VerdictMap = std::map<std::string, ValidationVerdict, std::less<>>;

PivotPoint choose_pivot(std::span<const PivotPoint> pivots, Rng& rng);

/// Uniform draw among the entries under the pivot's surface, excluding the
/// pivot's own utterance and (unless allowed) suffixes identical to
/// `original_suffix`.
std::optional<SuffixEntry> sample_suffix(const SuffixMemory& memory, const PivotPoint& pivot,
                                         const Tokens& original_suffix, Rng& rng,
                                         bool allow_identical_suffix = false);

AugmentedExample recombine(const Utterance& utt_a, const UtteranceAlignment& alignment_a,
                           const PivotPoint& pivot, const SuffixEntry& entry,
                           std::size_t slot = 0);

/// ceil(fraction * emitted), robust to binary rounding of the fraction.
std::size_t fraction_keep_count(double fraction, std::size_t emitted);

/// Runs validation, pivot choice, sampling and recombination over the corpus
/// in manifest order. Output depends only on (inputs, seed, fraction,
/// per_utterance, allow_identical_suffix), never on `workers`.
std::pair<std::vector<AugmentedExample>, RunStats> augment_corpus(
    const Corpus& corpus, const SuffixMemory& memory, const VerdictMap& verdicts,
    const PivotTable& pivots, const AugmentOptions& options);

VerdictMap validate_all(const Corpus& corpus, const AlignmentMap& raw);
AlignmentMap kept_alignments(const VerdictMap& verdicts);

// Pivots of utterances that have a kept alignment; the input to build_memory.
std::map<std::string, std::vector<PivotPoint>, std::less<>> kept_pivots(const PivotTable& pivots,
                                                                       const AlignmentMap& kept);

} // namespace str
