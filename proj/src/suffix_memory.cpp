#include "str/suffix_memory.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "str/error.h"

namespace str {

using nlohmann::json;

std::span<const SuffixEntry> SuffixMemory::lookup(std::string_view pivot_surface) const {
  auto it = table_.find(pivot_surface);
  if (it == table_.end()) {
    return {};
  }
  return it->second;
}

void SuffixMemory::add(const std::string& pivot_surface, SuffixEntry entry) {
  table_[pivot_surface].push_back(std::move(entry));
}

SuffixMemory build_memory(const Corpus& corpus, const AlignmentMap& alignments,
                          const std::map<std::string, std::vector<PivotPoint>, std::less<>>& pivots,
                          MemoryBuildConfig config) {
  for (const auto& [id, _] : pivots) {
    if (corpus.find(id) == nullptr) {
      throw Error(ErrorCode::InconsistentInputs, "pivots for unknown utterance " + id);
    }
  }
  SuffixMemory memory({}, std::move(config));
  for (const auto& utt : corpus.utterances()) {
    auto pit = pivots.find(utt.id);
    if (pit == pivots.end() || pit->second.empty()) {
      continue;
    }
    auto ait = alignments.find(utt.id);
    if (ait == alignments.end()) {
      throw Error(ErrorCode::InconsistentInputs, "no validated alignment for " + utt.id);
    }
    const auto& tokens = ait->second.tokens;
    if (tokens.size() != utt.transcript.size()) {
      throw Error(ErrorCode::InconsistentInputs, "alignment of " + utt.id +
                                                     " does not match its transcript");
    }
    for (const auto& pivot : pit->second) {
      const auto [begin, end] = pivot.suffix_range;
      if (begin >= end || end > tokens.size() || pivot.pivot_index + 1 != begin) {
        throw Error(ErrorCode::InconsistentInputs, "bad pivot range in " + utt.id);
      }
      SuffixEntry entry;
      entry.utterance_id = utt.id;
      entry.pivot_index = pivot.pivot_index;
      entry.text_suffix.assign(utt.transcript.begin() + static_cast<std::ptrdiff_t>(begin),
                               utt.transcript.begin() + static_cast<std::ptrdiff_t>(end));
      entry.t_start = tokens[begin].t_start;
      entry.t_end = tokens[end - 1].t_end;
      entry.speaker = utt.speaker;
      memory.add(pivot.pivot_surface, std::move(entry));
    }
  }
  return memory;
}

MemoryStats memory_stats(const SuffixMemory& memory) {
  MemoryStats stats;
  for (const auto& [key, entries] : memory.table()) {
    ++stats.n_keys;
    stats.bytes_estimate += key.size();
    for (const auto& e : entries) {
      ++stats.n_entries;
      stats.bytes_estimate += e.utterance_id.size() + e.speaker.size() + sizeof(e.pivot_index) +
                              sizeof(e.t_start) + sizeof(e.t_end);
      for (const auto& tok : e.text_suffix) {
        stats.bytes_estimate += tok.size();
      }
    }
  }
  return stats;
}

std::string memory_to_jsonl(const SuffixMemory& memory) {
  std::string out;
  for (const auto& [key, entries] : memory.table()) {
    json row;
    row["pivot"] = key;
    json list = json::array();
    for (const auto& e : entries) {
      list.push_back({{"utt", e.utterance_id},
                      {"pivot_index", e.pivot_index},
                      {"suffix", e.text_suffix},
                      {"t0", e.t_start},
                      {"t1", e.t_end},
                      {"speaker", e.speaker}});
    }
    row["entries"] = std::move(list);
    out += row.dump();
    out += '\n';
  }
  return out;
}

SuffixMemory memory_from_jsonl(std::string_view text) {
  SuffixMemory memory;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      const json row = json::parse(line);
      const auto key = row.at("pivot").get<std::string>();
      if (!memory.lookup(key).empty()) {
        throw Error(ErrorCode::MalformedMemory, "duplicate pivot key " + key, line_no);
      }
      for (const auto& e : row.at("entries")) {
        SuffixEntry entry;
        entry.utterance_id = e.at("utt").get<std::string>();
        entry.pivot_index = e.value("pivot_index", std::size_t{0});
        entry.text_suffix = e.at("suffix").get<Tokens>();
        entry.t_start = e.at("t0").get<double>();
        entry.t_end = e.at("t1").get<double>();
        entry.speaker = e.value("speaker", std::string());
        if (entry.text_suffix.empty() || !(entry.t_start < entry.t_end)) {
          throw Error(ErrorCode::MalformedMemory, "invalid entry under " + key, line_no);
        }
        memory.add(key, std::move(entry));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedMemory, e.what(), line_no);
    }
  }
  return memory;
}

void save_memory(const SuffixMemory& memory, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << memory_to_jsonl(memory);
}

SuffixMemory load_memory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return memory_from_jsonl(buffer.str());
}

} // namespace str
