#include "str/alignment.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <unicode/unistr.h>

#include "str/error.h"

namespace str {

namespace fs = std::filesystem;

std::string_view to_string(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::NoAlignment: return "NoAlignment";
    case DiscardReason::CountMismatch: return "CountMismatch";
  }
  return "Unknown";
}

ValidationVerdict ValidationVerdict::keep(UtteranceAlignment alignment) {
  ValidationVerdict v;
  v.alignment_ = std::move(alignment);
  return v;
}

ValidationVerdict ValidationVerdict::discard(DiscardReason reason) {
  ValidationVerdict v;
  v.reason_ = reason;
  return v;
}

namespace {

constexpr double kTimeEps = 1e-9;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Returns UTF-8 text, converting from UTF-16 when a byte-order mark is present.
std::string decode_text(std::string raw) {
  auto starts_with = [&](std::string_view bom) {
    return raw.size() >= bom.size() && std::string_view(raw).substr(0, bom.size()) == bom;
  };
  const char* codepage = nullptr;
  if (starts_with("\xFF\xFE")) {
    codepage = "UTF-16LE";
  } else if (starts_with("\xFE\xFF")) {
    codepage = "UTF-16BE";
  } else if (starts_with("\xEF\xBB\xBF")) {
    return raw.substr(3);
  } else {
    return raw;
  }
  icu::UnicodeString ustr(raw.data() + 2, static_cast<int32_t>(raw.size() - 2), codepage);
  std::string out;
  ustr.toUTF8String(out);
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) {
    return false;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool is_unknown(const std::string& surface, const AlignmentOptions& options) {
  return std::find(options.unknown_markers.begin(), options.unknown_markers.end(), surface) !=
         options.unknown_markers.end();
}

struct TgValue {
  enum Kind { String, Number, Flag } kind;
  std::string text;
  double number = 0.0;
  std::size_t line = 0;
};

// Both TextGrid layouts reduce to the same ordered stream of values once the
// long format's `key =` labels and `item [n]:` headers are dropped.
std::vector<TgValue> tokenize_textgrid(std::string_view text) {
  std::vector<TgValue> values;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '=') {
      ++i;
      continue;
    }
    if (c == '!') { // comment to end of line
      while (i < n && text[i] != '\n') {
        ++i;
      }
      continue;
    }
    if (c == '"') {
      const std::size_t start_line = line;
      std::string s;
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            s += '"';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        if (text[i] == '\n') {
          ++line;
        }
        s += text[i++];
      }
      if (!closed) {
        throw Error(ErrorCode::MalformedTextGrid, "unterminated string", start_line);
      }
      values.push_back({TgValue::String, std::move(s), 0.0, start_line});
      continue;
    }
    std::size_t start = i;
    while (i < n && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' && text[i] != '\n' &&
           text[i] != '=' && text[i] != '"') {
      ++i;
    }
    std::string_view word = text.substr(start, i - start);
    double number = 0.0;
    if (parse_double(word, number)) {
      values.push_back({TgValue::Number, std::string(word), number, line});
    } else if (word.front() == '<') {
      values.push_back({TgValue::Flag, std::string(word), 0.0, line});
    }
    // Anything else is a label such as `xmin`, `item`, `[1]:` or `intervals:`.
  }
  return values;
}

class ValueReader {
 public:
  explicit ValueReader(std::vector<TgValue> values) : values_(std::move(values)) {}

  bool done() const { return pos_ >= values_.size(); }

  const TgValue& next(TgValue::Kind kind, std::string_view what) {
    if (done()) {
      throw Error(ErrorCode::MalformedTextGrid,
                  "unexpected end of file while reading " + std::string(what), last_line());
    }
    const TgValue& v = values_[pos_++];
    if (v.kind != kind) {
      throw Error(ErrorCode::MalformedTextGrid,
                  "expected " + std::string(what) + ", found '" + v.text + "'", v.line);
    }
    return v;
  }

  double number(std::string_view what) { return next(TgValue::Number, what).number; }
  const std::string& string(std::string_view what) { return next(TgValue::String, what).text; }

  std::size_t count(std::string_view what) {
    const TgValue& v = next(TgValue::Number, what);
    if (v.number < 0 || v.number != static_cast<double>(static_cast<std::size_t>(v.number))) {
      throw Error(ErrorCode::MalformedTextGrid, "invalid " + std::string(what), v.line);
    }
    return static_cast<std::size_t>(v.number);
  }

  std::size_t last_line() const { return values_.empty() ? 0 : values_.back().line; }
  std::size_t current_line() const { return done() ? last_line() : values_[pos_].line; }

 private:
  std::vector<TgValue> values_;
  std::size_t pos_ = 0;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

} // namespace

UtteranceAlignment parse_textgrid_text(std::string_view text, std::string utterance_id,
                                       const AlignmentOptions& options) {
  const std::string decoded = decode_text(std::string(text));
  ValueReader reader(tokenize_textgrid(decoded));
  if (reader.done()) {
    throw Error(ErrorCode::MalformedTextGrid, "empty file", 1);
  }
  const TgValue& file_type = reader.next(TgValue::String, "file type");
  if (file_type.text.rfind("ooTextFile", 0) != 0) {
    throw Error(ErrorCode::MalformedTextGrid, "not an ooTextFile", file_type.line);
  }
  const TgValue& object_class = reader.next(TgValue::String, "object class");
  if (object_class.text != "TextGrid") {
    throw Error(ErrorCode::MalformedTextGrid, "object class is not TextGrid", object_class.line);
  }
  reader.number("xmin");
  reader.number("xmax");
  const TgValue& tiers_flag = reader.next(TgValue::Flag, "tiers flag");
  if (tiers_flag.text != "<exists>") {
    throw Error(ErrorCode::MissingTier, "file has no tiers");
  }
  const std::size_t n_tiers = reader.count("tier count");

  UtteranceAlignment result;
  result.utterance_id = std::move(utterance_id);
  bool found = false;
  for (std::size_t t = 0; t < n_tiers; ++t) {
    const std::string tier_class = reader.string("tier class");
    const std::string tier_name = reader.string("tier name");
    reader.number("tier xmin");
    reader.number("tier xmax");
    const std::size_t n_items = reader.count("item count");
    const bool interval_tier = tier_class == "IntervalTier";
    if (!interval_tier && tier_class != "TextTier") {
      throw Error(ErrorCode::MalformedTextGrid, "unknown tier class " + tier_class,
                  reader.current_line());
    }
    const bool wanted = interval_tier && !found && tier_name == options.tier_name;
    double prev_end = 0.0;
    for (std::size_t k = 0; k < n_items; ++k) {
      if (!interval_tier) {
        reader.number("point time");
        reader.string("point mark");
        continue;
      }
      const std::size_t line = reader.current_line();
      const double xmin = reader.number("interval xmin");
      const double xmax = reader.number("interval xmax");
      std::string label = trim(reader.string("interval text"));
      if (!wanted) {
        continue;
      }
      if (xmin < 0.0) {
        throw Error(ErrorCode::MalformedTextGrid, "negative interval start", line);
      }
      if (xmax <= xmin) {
        throw Error(ErrorCode::MalformedTextGrid, "zero-length or inverted interval", line);
      }
      if (k > 0 && xmin < prev_end - kTimeEps) {
        throw Error(ErrorCode::NonMonotonicIntervals, "interval starts before previous end",
                    line);
      }
      prev_end = xmax;
      if (label.empty()) {
        continue;
      }
      if (is_unknown(label, options)) {
        result.has_unknown = true;
      }
      result.tokens.push_back({result.tokens.size(), std::move(label), xmin, xmax});
    }
    found = found || wanted;
  }
  if (!found) {
    throw Error(ErrorCode::MissingTier, "no interval tier named '" + options.tier_name + "'");
  }
  return result;
}

UtteranceAlignment parse_textgrid(const fs::path& path, const AlignmentOptions& options) {
  const std::string text = read_file(path);
  try {
    return parse_textgrid_text(text, path.stem().string(), options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.line());
  }
}

AlignmentMap parse_ctm_text(std::string_view text, const AlignmentOptions& options) {
  AlignmentMap result;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields_in(line);
    std::vector<std::string> fields;
    for (std::string f; fields_in >> f;) {
      fields.push_back(std::move(f));
    }
    if (fields.empty() || fields[0].rfind(";;", 0) == 0) {
      continue;
    }
    if (fields.size() != 5 && fields.size() != 6) {
      throw Error(ErrorCode::MalformedLine,
                  "expected 5 fields, got " + std::to_string(fields.size()), line_no);
    }
    double begin = 0.0;
    double duration = 0.0;
    if (!parse_double(fields[2], begin) || !parse_double(fields[3], duration)) {
      throw Error(ErrorCode::MalformedLine, "non-numeric time", line_no);
    }
    if (duration < 0.0) {
      throw Error(ErrorCode::NegativeDuration, fields[3], line_no);
    }
    if (duration == 0.0 || begin < 0.0) {
      throw Error(ErrorCode::MalformedLine, "zero duration or negative start", line_no);
    }
    auto& alignment = result[fields[0]];
    alignment.utterance_id = fields[0];
    if (is_unknown(fields[4], options)) {
      alignment.has_unknown = true;
    }
    alignment.tokens.push_back({line_no, fields[4], begin, begin + duration});
  }
  for (auto& [id, alignment] : result) {
    auto& tokens = alignment.tokens;
    std::stable_sort(tokens.begin(), tokens.end(),
                     [](const AlignedToken& a, const AlignedToken& b) { return a.t_start < b.t_start; });
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0 && tokens[i].t_start < tokens[i - 1].t_end - kTimeEps) {
        // index still holds the source line number here
        throw Error(ErrorCode::NonMonotonicIntervals, "overlapping words in " + id,
                    tokens[i].index);
      }
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      tokens[i].index = i;
    }
  }
  return result;
}

AlignmentMap parse_ctm(const fs::path& path, const AlignmentOptions& options) {
  const std::string text = read_file(path);
  try {
    return parse_ctm_text(text, options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.line());
  }
}

AlignmentMap load_alignments(const fs::path& path, const AlignmentOptions& options) {
  auto is_textgrid = [](const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".textgrid";
  };
  if (fs::is_regular_file(path)) {
    if (is_textgrid(path)) {
      AlignmentMap map;
      auto alignment = parse_textgrid(path, options);
      map.emplace(alignment.utterance_id, std::move(alignment));
      return map;
    }
    return parse_ctm(path, options);
  }
  if (!fs::is_directory(path)) {
    throw Error(ErrorCode::IoError, "no alignments at " + path.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file() && is_textgrid(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  AlignmentMap map;
  for (const auto& file : files) {
    auto alignment = parse_textgrid(file, options);
    std::string id = alignment.utterance_id;
    if (!map.emplace(id, std::move(alignment)).second) {
      throw Error(ErrorCode::DuplicateId, "two TextGrids for utterance " + id);
    }
  }
  return map;
}

ValidationVerdict validate_alignment(const Utterance& utt, const UtteranceAlignment* alignment) {
  if (alignment == nullptr || alignment->tokens.empty()) {
    return ValidationVerdict::discard(DiscardReason::NoAlignment);
  }
  if (alignment->tokens.size() != utt.transcript.size()) {
    return ValidationVerdict::discard(DiscardReason::CountMismatch);
  }
  UtteranceAlignment kept = *alignment;
  kept.utterance_id = utt.id;
  for (std::size_t i = 0; i < kept.tokens.size(); ++i) {
    kept.tokens[i].index = i;
    kept.tokens[i].surface = utt.transcript[i];
  }
  return ValidationVerdict::keep(std::move(kept));
}

} // namespace str
