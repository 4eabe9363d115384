#include "str/tagging.h"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "str/error.h"

namespace str {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (auto pos = line.find('\t'); pos != std::string_view::npos; pos = line.find('\t', start)) {
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  fields.push_back(line.substr(start));
  return fields;
}

bool all_digits(std::string_view s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos;
}

} // namespace

std::vector<TaggedSentence> parse_conllu_text(std::string_view text) {
  std::vector<TaggedSentence> sentences;
  TaggedSentence current;
  bool in_block = false;
  bool has_id = false;
  std::size_t block_line = 0;

  auto finish = [&] {
    if (!in_block) {
      return;
    }
    if (!has_id) {
      throw Error(ErrorCode::MissingSentId, "sentence block without '# sent_id'", block_line);
    }
    sentences.push_back(std::move(current));
    current = TaggedSentence{};
    in_block = false;
    has_id = false;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      finish();
      continue;
    }
    if (!in_block) {
      in_block = true;
      block_line = line_no;
    }
    if (line.front() == '#') {
      std::string_view body = line.substr(1);
      body.remove_prefix(std::min(body.find_first_not_of(' '), body.size()));
      constexpr std::string_view key = "sent_id";
      if (body.substr(0, key.size()) == key) {
        body.remove_prefix(key.size());
        body.remove_prefix(std::min(body.find_first_not_of(" ="), body.size()));
        while (!body.empty() && body.back() == ' ') {
          body.remove_suffix(1);
        }
        if (!body.empty()) {
          current.utterance_id = std::string(body);
          has_id = true;
        }
      }
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() < 4) {
      throw Error(ErrorCode::MalformedRow,
                  "expected at least 4 columns, got " + std::to_string(fields.size()), line_no);
    }
    const std::string_view id = fields[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      continue; // multiword token range or empty node
    }
    if (!all_digits(id) || fields[1].empty() || fields[3].empty()) {
      throw Error(ErrorCode::MalformedRow, "bad ID, FORM or UPOS column", line_no);
    }
    current.tokens.push_back({std::string(fields[1]), std::string(fields[3])});
  }
  finish();
  return sentences;
}

std::vector<TaggedSentence> parse_conllu(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_conllu_text(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.line());
  }
}

std::vector<PivotPoint> find_pivots(const TaggedSentence& sentence) {
  std::vector<PivotPoint> pivots;
  const std::size_t n = sentence.tokens.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (sentence.tokens[i].upos != kPivotUpos) {
      continue;
    }
    pivots.push_back({sentence.utterance_id, i, sentence.tokens[i].form, {0, i}, {i + 1, n}});
  }
  return pivots;
}

PivotTable collect_pivots(const Corpus& corpus, const std::vector<TaggedSentence>& sentences) {
  std::unordered_map<std::string_view, const TaggedSentence*> by_id;
  for (const auto& s : sentences) {
    if (!by_id.emplace(s.utterance_id, &s).second) {
      throw Error(ErrorCode::InconsistentInputs, "duplicate sent_id " + s.utterance_id);
    }
  }
  PivotTable table;
  for (const auto& utt : corpus.utterances()) {
    auto it = by_id.find(utt.id);
    if (it == by_id.end() || it->second->tokens.size() != utt.transcript.size()) {
      table.tag_mismatch.insert(utt.id);
      continue;
    }
    TaggedSentence merged = *it->second;
    for (std::size_t i = 0; i < merged.tokens.size(); ++i) {
      merged.tokens[i].form = utt.transcript[i];
    }
    table.pivots.emplace(utt.id, find_pivots(merged));
  }
  return table;
}

} // namespace str
