#include "support.h"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "str/cli.h"

namespace str::test {

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

struct Interval {
  double t0;
  double t1;
  std::string text;
};

std::vector<Interval> with_silence(const std::vector<Word>& words, double xmax) {
  std::vector<Interval> out;
  double t = 0.0;
  for (const auto& w : words) {
    if (w.t0 > t) {
      out.push_back({t, w.t0, ""});
    }
    out.push_back({w.t0, w.t1, w.text});
    t = w.t1;
  }
  if (xmax > t) {
    out.push_back({t, xmax, ""});
  }
  return out;
}

} // namespace

TempDir::TempDir(std::string_view tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (std::string(tag) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  if (std::getenv("STR_KEEP_TMP") == nullptr) {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
}

void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string s = read_file(path);
  return {s.begin(), s.end()};
}

fs::path data_dir() { return STR_TEST_DATA_DIR; }

std::string textgrid_long(const std::vector<Word>& words, double xmax, const std::string& tier) {
  const auto intervals = with_silence(words, xmax);
  std::ostringstream o;
  o << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
  o << "xmin = 0 \nxmax = " << num(xmax) << " \ntiers? <exists> \nsize = 1 \nitem []: \n";
  o << "    item [1]:\n        class = \"IntervalTier\" \n        name = \"" << tier << "\" \n";
  o << "        xmin = 0 \n        xmax = " << num(xmax) << " \n";
  o << "        intervals: size = " << intervals.size() << " \n";
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    o << "        intervals [" << i + 1 << "]:\n";
    o << "            xmin = " << num(intervals[i].t0) << " \n";
    o << "            xmax = " << num(intervals[i].t1) << " \n";
    o << "            text = \"" << intervals[i].text << "\" \n";
  }
  return o.str();
}

std::string textgrid_short(const std::vector<Word>& words, double xmax, const std::string& tier) {
  const auto intervals = with_silence(words, xmax);
  std::ostringstream o;
  o << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
  o << "0\n" << num(xmax) << "\n<exists>\n1\n\"IntervalTier\"\n\"" << tier << "\"\n";
  o << "0\n" << num(xmax) << "\n" << intervals.size() << "\n";
  for (const auto& iv : intervals) {
    o << num(iv.t0) << "\n" << num(iv.t1) << "\n\"" << iv.text << "\"\n";
  }
  return o.str();
}

std::string conllu_block(const std::string& sent_id,
                         const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ostringstream o;
  o << "# sent_id = " << sent_id << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    o << i + 1 << '\t' << rows[i].first << "\t_\t" << rows[i].second
      << "\t_\t_\t_\t_\t_\t_\n";
  }
  o << "\n";
  return o.str();
}

std::vector<Word> spaced_words(const Tokens& tokens, double start, double step, double gap) {
  std::vector<Word> words;
  double t = start;
  for (const auto& tok : tokens) {
    words.push_back({tok, t, t + step});
    t += step + gap;
  }
  return words;
}

UtteranceAlignment alignment_of(const std::string& id, const std::vector<Word>& words) {
  UtteranceAlignment a;
  a.utterance_id = id;
  for (std::size_t i = 0; i < words.size(); ++i) {
    a.tokens.push_back({i, words[i].text, words[i].t0, words[i].t1});
  }
  return a;
}

Utterance make_utterance(const std::string& id, const std::string& text,
                         const std::string& speaker) {
  Utterance u;
  u.id = id;
  u.audio_path = id + ".wav";
  u.src_text = text;
  u.transcript = normalize_transcript(text);
  u.speaker = speaker;
  return u;
}

Waveform ramp(std::size_t n, int sample_rate, int offset) {
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long v = (offset + 37L * static_cast<long>(i)) % 65536L;
    w.samples[i] = static_cast<std::int16_t>(v >= 32768 ? v - 65536 : v);
  }
  return w;
}

void stage_playground(const fs::path& dir) {
  fs::create_directories(dir);
  fs::copy(data_dir() / "playground", dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  write_wav(ramp(41600, 16000, 11), dir / "utt_a.wav");
  write_wav(ramp(48000, 16000, 20000), dir / "utt_b.wav");
}

int run_cli(const std::vector<std::string>& args, std::string* out, std::string* err) {
  std::vector<const char*> argv{"straug"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream o;
  std::ostringstream e;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) {
    *out = o.str();
  }
  if (err) {
    *err = e.str();
  }
  return code;
}

SuffixMemory::Table oracle_memory(const std::vector<OracleUtterance>& corpus) {
  SuffixMemory::Table table;
  for (const auto& u : corpus) {
    if (u.words.empty() || u.words.size() != u.tokens.size() ||
        u.upos.size() != u.tokens.size()) {
      continue;
    }
    const std::size_t n = u.tokens.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (u.upos[i] != "VERB") {
        continue;
      }
      SuffixEntry e;
      e.utterance_id = u.id;
      e.pivot_index = i;
      e.text_suffix.assign(u.tokens.begin() + static_cast<std::ptrdiff_t>(i + 1), u.tokens.end());
      e.t_start = u.words[i + 1].t0;
      e.t_end = u.words[n - 1].t1;
      e.speaker = u.speaker;
      table[u.tokens[i]].push_back(std::move(e));
    }
  }
  return table;
}

std::int64_t decimal_seconds_to_samples(std::int64_t numerator, int digits, int rate) {
  std::int64_t denom = 1;
  for (int i = 0; i < digits; ++i) {
    denom *= 10;
  }
  const std::int64_t scaled = numerator * rate;
  const std::int64_t q = scaled / denom;
  const std::int64_t r = scaled % denom;
  return 2 * r >= denom ? q + 1 : q;
}

} // namespace str::test
