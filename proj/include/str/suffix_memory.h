#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "str/alignment.h"
#include "str/corpus.h"
#include "str/tagging.h"

namespace str {

/// A text suffix and the time span of its audio. Audio is held by reference
/// (utterance id + seconds), never as samples.
struct SuffixEntry {
  std::string utterance_id;
  std::size_t pivot_index = 0;
  Tokens text_suffix;
  double t_start = 0.0;
  double t_end = 0.0;
  std::string speaker;

  bool operator==(const SuffixEntry&) const = default;
};

struct MemoryBuildConfig {
  std::string pivot_upos = std::string(kPivotUpos);
  std::vector<std::string> unknown_markers;

  bool operator==(const MemoryBuildConfig&) const = default;
};

struct MemoryStats {
  std::size_t n_keys = 0;
  std::size_t n_entries = 0;
  std::size_t bytes_estimate = 0;

  bool operator==(const MemoryStats&) const = default;
};

class SuffixMemory {
 public:
  using Table = std::map<std::string, std::vector<SuffixEntry>, std::less<>>;

  SuffixMemory() = default;
  explicit SuffixMemory(Table table, MemoryBuildConfig config = {})
      : table_(std::move(table)), config_(std::move(config)) {}

  /// Entries for `pivot_surface` in insertion (corpus) order; empty when the
  /// key is absent.
  std::span<const SuffixEntry> lookup(std::string_view pivot_surface) const;

  void add(const std::string& pivot_surface, SuffixEntry entry);

  const Table& table() const noexcept { return table_; }
  const MemoryBuildConfig& build_config() const noexcept { return config_; }
  bool empty() const noexcept { return table_.empty(); }

  bool operator==(const SuffixMemory&) const = default;

 private:
  Table table_;
  MemoryBuildConfig config_;
};

/// One entry per (utterance, pivot) for utterances in corpus order. `alignments`
/// must hold validated alignments only.
SuffixMemory build_memory(const Corpus& corpus, const AlignmentMap& alignments,
                          const std::map<std::string, std::vector<PivotPoint>, std::less<>>& pivots,
                          MemoryBuildConfig config = {});

inline std::span<const SuffixEntry> lookup(const SuffixMemory& memory,
                                           std::string_view pivot_surface) {
  return memory.lookup(pivot_surface);
}

MemoryStats memory_stats(const SuffixMemory& memory);

// JSONL, one key per line:
// {"pivot": "...", "entries": [{"utt": "...", "pivot_index": n, "suffix": [...],
//   "t0": ..., "t1": ..., "speaker": "..."}]}
std::string memory_to_jsonl(const SuffixMemory& memory);
SuffixMemory memory_from_jsonl(std::string_view text);
void save_memory(const SuffixMemory& memory, const std::filesystem::path& path);
SuffixMemory load_memory(const std::filesystem::path& path);

} // namespace str
