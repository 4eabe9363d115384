#include "str/composition.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "str/error.h"

namespace str {

using ojson = nlohmann::ordered_json;

std::string example_to_json(const AugmentedExample& example) {
  ojson segments = ojson::array();
  for (const auto& s : example.segments) {
    ojson seg;
    seg["utt"] = s.utterance_id;
    seg["t0"] = s.t_start;
    seg["t1"] = s.t_end;
    segments.push_back(std::move(seg));
  }
  ojson row;
  row["id"] = example.id;
  row["segments"] = std::move(segments);
  row["src_text"] = join_tokens(example.transcript);
  row["tgt_text"] = example.translation ? ojson(*example.translation) : ojson(nullptr);
  const auto& p = example.provenance;
  ojson prov;
  prov["src_a"] = p.src_a;
  prov["src_b"] = p.src_b;
  prov["pivot"] = p.pivot;
  prov["pivot_index"] = p.pivot_index;
  prov["donor_pivot_index"] = p.donor_pivot_index;
  row["provenance"] = std::move(prov);
  return row.dump();
}

AugmentedExample example_from_json(std::string_view line) {
  const ojson row = ojson::parse(line);
  AugmentedExample ex;
  ex.id = row.at("id").get<std::string>();
  for (const auto& s : row.at("segments")) {
    ex.segments.push_back(
        {s.at("utt").get<std::string>(), s.at("t0").get<double>(), s.at("t1").get<double>()});
  }
  ex.transcript = normalize_transcript(row.at("src_text").get<std::string>());
  if (const auto& tgt = row.at("tgt_text"); !tgt.is_null()) {
    ex.translation = tgt.get<std::string>();
  }
  const auto& p = row.at("provenance");
  ex.provenance.src_a = p.at("src_a").get<std::string>();
  ex.provenance.src_b = p.at("src_b").get<std::string>();
  ex.provenance.pivot = p.at("pivot").get<std::string>();
  ex.provenance.pivot_index = p.at("pivot_index").get<std::size_t>();
  ex.provenance.donor_pivot_index = p.value("donor_pivot_index", std::size_t{0});
  return ex;
}

std::string examples_to_jsonl(const std::vector<AugmentedExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += example_to_json(ex);
    out += '\n';
  }
  return out;
}

std::vector<AugmentedExample> examples_from_jsonl(std::string_view text) {
  std::vector<AugmentedExample> examples;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      examples.push_back(example_from_json(line));
    } catch (const ojson::exception& e) {
      throw Error(ErrorCode::MalformedLine, e.what(), line_no);
    }
  }
  return examples;
}

void save_examples(const std::vector<AugmentedExample>& examples,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << examples_to_jsonl(examples);
}

std::vector<AugmentedExample> load_examples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return examples_from_jsonl(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.line());
  }
}

namespace {

struct Field {
  const char* name;
  std::uint64_t RunStats::*member;
};

constexpr Field kStatsFields[] = {
    {"total", &RunStats::total},
    {"discarded_no_alignment", &RunStats::discarded_no_alignment},
    {"discarded_count_mismatch", &RunStats::discarded_count_mismatch},
    {"skipped_tag_mismatch", &RunStats::skipped_tag_mismatch},
    {"skipped_no_pivot", &RunStats::skipped_no_pivot},
    {"skipped_no_candidate", &RunStats::skipped_no_candidate},
    {"skipped_translation", &RunStats::skipped_translation},
    {"cut_by_fraction", &RunStats::cut_by_fraction},
    {"emitted", &RunStats::emitted},
};

} // namespace

std::string stats_to_json(const RunStats& stats) {
  ojson row;
  for (const auto& f : kStatsFields) {
    row[f.name] = stats.*f.member;
  }
  return row.dump();
}

RunStats stats_from_json(std::string_view text) {
  RunStats stats;
  try {
    const ojson row = ojson::parse(text);
    if (!row.is_object()) {
      throw Error(ErrorCode::MalformedStats, "stats must be a JSON object");
    }
    for (const auto& f : kStatsFields) {
      if (!row.contains(f.name) || !row[f.name].is_number_unsigned()) {
        throw Error(ErrorCode::MalformedStats, std::string("missing counter ") + f.name);
      }
      stats.*f.member = row[f.name].get<std::uint64_t>();
    }
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::MalformedStats, e.what());
  }
  if (!stats.balanced()) {
    throw Error(ErrorCode::MalformedStats, "counters do not add up to total");
  }
  return stats;
}

} // namespace str
