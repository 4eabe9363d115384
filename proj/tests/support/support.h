#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "str/alignment.h"
#include "str/audio.h"
#include "str/corpus.h"
#include "str/suffix_memory.h"

namespace str::test {

namespace fs = std::filesystem;

// Removed on destruction unless STR_KEEP_TMP is set.
class TempDir {
 public:
  explicit TempDir(std::string_view tag = "str");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const fs::path& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

void write_file(const fs::path& path, std::string_view text);
std::string read_file(const fs::path& path);
std::vector<std::uint8_t> read_bytes(const fs::path& path);

fs::path data_dir();

struct Word {
  std::string text;
  double t0 = 0.0;
  double t1 = 0.0;
};

// Gaps between words become empty (silence) intervals.
std::string textgrid_long(const std::vector<Word>& words, double xmax,
                          const std::string& tier = "words");
std::string textgrid_short(const std::vector<Word>& words, double xmax,
                           const std::string& tier = "words");

std::string conllu_block(const std::string& sent_id,
                         const std::vector<std::pair<std::string, std::string>>& rows);

// Evenly spaced words with a short gap after each.
std::vector<Word> spaced_words(const Tokens& tokens, double start = 0.1, double step = 0.3,
                               double gap = 0.05);

UtteranceAlignment alignment_of(const std::string& id, const std::vector<Word>& words);

Utterance make_utterance(const std::string& id, const std::string& text,
                         const std::string& speaker = "spk");

// Sample i is (offset + 37 * i) wrapped into int16.
Waveform ramp(std::size_t n, int sample_rate, int offset);

// Copies the two-utterance playground fixture into `dir` and renders ramp
// WAVs for it (utt_a: 2.6 s, utt_b: 3.0 s at 16 kHz).
void stage_playground(const fs::path& dir);

// Runs the CLI in-process; stdout/stderr are captured into the given strings.
int run_cli(const std::vector<std::string>& args, std::string* out = nullptr,
            std::string* err = nullptr);

// Independent enumeration: every VERB token that is not last in a kept
// utterance, keyed by its transcript surface, in corpus order.
struct OracleUtterance {
  std::string id;
  std::string speaker;
  Tokens tokens;
  std::vector<std::string> upos;
  std::vector<Word> words; // empty: no alignment
};
SuffixMemory::Table oracle_memory(const std::vector<OracleUtterance>& corpus);

// Round-half-away-from-zero of (numerator / 10^digits) * rate in integers.
std::int64_t decimal_seconds_to_samples(std::int64_t numerator, int digits, int rate);

} // namespace str::test
