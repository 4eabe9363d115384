#include "str/augmenter.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "str/error.h"

namespace str {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffU;
    h *= kFnvPrime;
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

std::uint64_t utterance_seed(std::uint64_t seed, std::string_view utterance_id,
                             std::uint64_t slot) {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, seed);
  for (unsigned char c : utterance_id) {
    h ^= c;
    h *= kFnvPrime;
  }
  fnv_mix(h, slot);
  return splitmix64(h);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t range = n;
  // 2^64 mod n; draws below it would bias the low residues.
  const std::uint64_t threshold = (0 - range) % range;
  while (true) {
    const std::uint64_t r = rng();
    if (r >= threshold) {
      return static_cast<std::size_t>(r % range);
    }
  }
}

RunStats& RunStats::operator+=(const RunStats& other) {
  total += other.total;
  discarded_no_alignment += other.discarded_no_alignment;
  discarded_count_mismatch += other.discarded_count_mismatch;
  skipped_tag_mismatch += other.skipped_tag_mismatch;
  skipped_no_pivot += other.skipped_no_pivot;
  skipped_no_candidate += other.skipped_no_candidate;
  skipped_translation += other.skipped_translation;
  cut_by_fraction += other.cut_by_fraction;
  emitted += other.emitted;
  return *this;
}

PivotPoint choose_pivot(std::span<const PivotPoint> pivots, Rng& rng) {
  if (pivots.empty()) {
    throw Error(ErrorCode::InconsistentInputs, "choose_pivot on an empty list");
  }
  return pivots[uniform_index(rng, pivots.size())];
}

std::optional<SuffixEntry> sample_suffix(const SuffixMemory& memory, const PivotPoint& pivot,
                                         const Tokens& original_suffix, Rng& rng,
                                         bool allow_identical_suffix) {
  std::vector<const SuffixEntry*> candidates;
  for (const auto& entry : memory.lookup(pivot.pivot_surface)) {
    if (entry.utterance_id == pivot.utterance_id) {
      continue;
    }
    if (!allow_identical_suffix && entry.text_suffix == original_suffix) {
      continue;
    }
    candidates.push_back(&entry);
  }
  if (candidates.empty()) {
    return std::nullopt;
  }
  return *candidates[uniform_index(rng, candidates.size())];
}

AugmentedExample recombine(const Utterance& utt_a, const UtteranceAlignment& alignment_a,
                           const PivotPoint& pivot, const SuffixEntry& entry, std::size_t slot) {
  if (pivot.pivot_index >= utt_a.transcript.size() ||
      pivot.pivot_index >= alignment_a.tokens.size()) {
    throw Error(ErrorCode::InconsistentInputs, "pivot index outside " + utt_a.id);
  }
  AugmentedExample ex;
  ex.id = utt_a.id + "-str-" + std::to_string(slot);
  const auto prefix_end = utt_a.transcript.begin() + static_cast<std::ptrdiff_t>(pivot.pivot_index) + 1;
  ex.transcript.assign(utt_a.transcript.begin(), prefix_end);
  ex.transcript.insert(ex.transcript.end(), entry.text_suffix.begin(), entry.text_suffix.end());
  ex.segments = {
      {utt_a.id, 0.0, alignment_a.tokens[pivot.pivot_index].t_end},
      {entry.utterance_id, entry.t_start, entry.t_end},
  };
  ex.provenance = {utt_a.id, entry.utterance_id, pivot.pivot_surface, pivot.pivot_index,
                   entry.pivot_index};
  return ex;
}

std::size_t fraction_keep_count(double fraction, std::size_t emitted) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw Error(ErrorCode::InvalidConfig, "fraction must lie in (0, 1]");
  }
  // 1/3 * 255 evaluates a hair above 85; shave a relative epsilon before ceil.
  const double exact = fraction * static_cast<double>(emitted);
  const auto keep = static_cast<std::size_t>(std::ceil(exact * (1.0 - 1e-12)));
  return std::min(keep, emitted);
}

VerdictMap validate_all(const Corpus& corpus, const AlignmentMap& raw) {
  VerdictMap verdicts;
  for (const auto& utt : corpus.utterances()) {
    auto it = raw.find(utt.id);
    verdicts.emplace(utt.id, validate_alignment(utt, it == raw.end() ? nullptr : &it->second));
  }
  return verdicts;
}

AlignmentMap kept_alignments(const VerdictMap& verdicts) {
  AlignmentMap kept;
  for (const auto& [id, verdict] : verdicts) {
    if (verdict.kept()) {
      kept.emplace(id, verdict.alignment());
    }
  }
  return kept;
}

std::map<std::string, std::vector<PivotPoint>, std::less<>> kept_pivots(const PivotTable& pivots,
                                                                       const AlignmentMap& kept) {
  std::map<std::string, std::vector<PivotPoint>, std::less<>> out;
  for (const auto& [id, points] : pivots.pivots) {
    if (kept.contains(id)) {
      out.emplace(id, points);
    }
  }
  return out;
}

namespace {

struct UtteranceResult {
  std::vector<AugmentedExample> examples;
  RunStats stats;
};

UtteranceResult augment_one(const Utterance& utt, const SuffixMemory& memory,
                            const VerdictMap& verdicts, const PivotTable& pivots,
                            const AugmentOptions& options) {
  UtteranceResult out;
  const std::uint64_t slots = options.per_utterance;
  out.stats.total = slots;

  auto vit = verdicts.find(utt.id);
  if (vit == verdicts.end()) {
    throw Error(ErrorCode::InconsistentInputs, "no alignment verdict for " + utt.id);
  }
  const ValidationVerdict& verdict = vit->second;
  if (!verdict.kept()) {
    if (verdict.reason() == DiscardReason::NoAlignment) {
      out.stats.discarded_no_alignment = slots;
    } else {
      out.stats.discarded_count_mismatch = slots;
    }
    return out;
  }
  if (pivots.tag_mismatch.contains(utt.id)) {
    out.stats.skipped_tag_mismatch = slots;
    return out;
  }
  auto pit = pivots.pivots.find(utt.id);
  if (pit == pivots.pivots.end()) {
    throw Error(ErrorCode::InconsistentInputs, "no tagging result for " + utt.id);
  }
  if (pit->second.empty()) {
    out.stats.skipped_no_pivot = slots;
    return out;
  }

  Rng rng(utterance_seed(options.seed, utt.id));
  for (std::size_t slot = 0; slot < options.per_utterance; ++slot) {
    const PivotPoint pivot = choose_pivot(pit->second, rng);
    const Tokens original_suffix(
        utt.transcript.begin() + static_cast<std::ptrdiff_t>(pivot.suffix_range.first),
        utt.transcript.begin() + static_cast<std::ptrdiff_t>(pivot.suffix_range.second));
    auto entry = sample_suffix(memory, pivot, original_suffix, rng, options.allow_identical_suffix);
    if (!entry) {
      ++out.stats.skipped_no_candidate;
      continue;
    }
    out.examples.push_back(recombine(utt, verdict.alignment(), pivot, *entry, slot));
    ++out.stats.emitted;
  }
  return out;
}

} // namespace

std::pair<std::vector<AugmentedExample>, RunStats> augment_corpus(
    const Corpus& corpus, const SuffixMemory& memory, const VerdictMap& verdicts,
    const PivotTable& pivots, const AugmentOptions& options) {
  if (options.per_utterance == 0) {
    throw Error(ErrorCode::InvalidConfig, "per_utterance must be at least 1");
  }
  fraction_keep_count(options.fraction, 0); // validates the fraction up front

  const auto& utts = corpus.utterances();
  std::vector<UtteranceResult> results(utts.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, utts.size()));

  if (workers == 1) {
    for (std::size_t i = 0; i < utts.size(); ++i) {
      results[i] = augment_one(utts[i], memory, verdicts, pivots, options);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < utts.size(); i = next++) {
          try {
            results[i] = augment_one(utts[i], memory, verdicts, pivots, options);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) {
              failure = std::current_exception();
            }
          }
        }
      });
    }
    pool.clear();
    if (failure) {
      std::rethrow_exception(failure);
    }
  }

  std::vector<AugmentedExample> examples;
  RunStats stats;
  for (auto& r : results) {
    stats += r.stats;
    for (auto& ex : r.examples) {
      examples.push_back(std::move(ex));
    }
  }
  const std::size_t keep = fraction_keep_count(options.fraction, examples.size());
  stats.cut_by_fraction = examples.size() - keep;
  stats.emitted = keep;
  examples.resize(keep);
  return {std::move(examples), stats};
}

} // namespace str
