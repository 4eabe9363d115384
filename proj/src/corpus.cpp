#include "str/corpus.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "str/error.h"

namespace str {

namespace fs = std::filesystem;

Corpus::Corpus(std::vector<Utterance> utterances, std::string source_language,
               std::string target_language)
    : utterances_(std::move(utterances)),
      source_language_(std::move(source_language)),
      target_language_(std::move(target_language)) {
  index_.reserve(utterances_.size());
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const auto& id = utterances_[i].id;
    if (id.empty()) {
      throw Error(ErrorCode::MissingColumn, "empty utterance id");
    }
    if (!index_.emplace(id, i).second) {
      throw Error(ErrorCode::DuplicateId, id);
    }
  }
}

const Utterance* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &utterances_[it->second];
}

fs::path Corpus::resolve_audio(const Utterance& utt) const {
  if (utt.audio_path.is_absolute() || root_.empty()) {
    return utt.audio_path;
  }
  return root_ / utt.audio_path;
}

void Corpus::set_languages(std::string source, std::string target) {
  source_language_ = std::move(source);
  target_language_ = std::move(target);
}

Tokens normalize_transcript(std::string_view text) {
  icu::UnicodeString ustr = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  ustr.toLower(icu::Locale::getRoot());

  Tokens tokens;
  icu::UnicodeString current;
  auto flush = [&] {
    if (!current.isEmpty()) {
      std::string out;
      current.toUTF8String(out);
      tokens.push_back(std::move(out));
      current.remove();
    }
  };
  for (int32_t i = 0; i < ustr.length();) {
    UChar32 c = ustr.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      flush();
    } else if (!u_ispunct(c)) {
      current.append(c);
    }
  }
  flush();
  return tokens;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) {
      out += ' ';
    }
    out += t;
  }
  return out;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

void check_field(std::string_view field, std::string_view name, std::string_view id) {
  if (field.find_first_of("\t\n\r") != std::string_view::npos) {
    throw Error(ErrorCode::WriteError,
                "field '" + std::string(name) + "' of '" + std::string(id) +
                    "' contains a tab or newline");
  }
}

} // namespace

Corpus parse_manifest_text(std::string_view text, fs::path root) {
  std::vector<Utterance> rows;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
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
    if (!saw_header) {
      if (line != kManifestHeader) {
        throw Error(ErrorCode::MissingColumn, "unexpected manifest header", line_no);
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 6) {
      throw Error(ErrorCode::MissingColumn,
                  "expected 6 fields, got " + std::to_string(fields.size()), line_no);
    }
    Utterance utt;
    utt.id = std::string(fields[0]);
    if (utt.id.empty()) {
      throw Error(ErrorCode::MissingColumn, "empty id", line_no);
    }
    utt.audio_path = fs::path(std::string(fields[1]));
    if (!fields[2].empty()) {
      std::int64_t n = 0;
      auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), n);
      if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size() || n < 0) {
        throw Error(ErrorCode::MissingColumn, "invalid n_frames", line_no);
      }
      utt.n_frames = n;
    }
    utt.src_text = std::string(fields[3]);
    utt.transcript = normalize_transcript(utt.src_text);
    if (!fields[4].empty()) {
      utt.translation = std::string(fields[4]);
    }
    utt.speaker = std::string(fields[5]);
    rows.push_back(std::move(utt));
  }
  if (!saw_header || rows.empty()) {
    throw Error(ErrorCode::EmptyManifest, "no data rows");
  }
  Corpus corpus(std::move(rows));
  corpus.set_root(std::move(root));
  return corpus;
}

Corpus parse_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest_text(buffer.str(), path.parent_path());
}

std::string manifest_text(const Corpus& corpus) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& utt : corpus.utterances()) {
    const std::string audio = utt.audio_path.string();
    const std::string& tgt = utt.translation ? *utt.translation : std::string();
    check_field(utt.id, "id", utt.id);
    check_field(audio, "audio", utt.id);
    check_field(utt.src_text, "src_text", utt.id);
    check_field(tgt, "tgt_text", utt.id);
    check_field(utt.speaker, "speaker", utt.id);
    out += utt.id;
    out += '\t';
    out += audio;
    out += '\t';
    if (utt.n_frames) {
      out += std::to_string(*utt.n_frames);
    }
    out += '\t';
    out += utt.src_text;
    out += '\t';
    out += tgt;
    out += '\t';
    out += utt.speaker;
    out += '\n';
  }
  return out;
}

void write_manifest(const Corpus& corpus, const fs::path& path) {
  const std::string text = manifest_text(corpus);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw Error(ErrorCode::IoError, "write failed for " + path.string());
  }
}

} // namespace str
