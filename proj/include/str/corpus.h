#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace str {

using Tokens = std::vector<std::string>;

/// One manifest row. `src_text` keeps the raw transcript so that a manifest
/// survives a parse/write round trip; `transcript` is its normalized form.
struct Utterance {
  std::string id;
  std::filesystem::path audio_path;
  std::optional<std::int64_t> n_frames;
  std::string src_text;
  Tokens transcript;
  std::optional<std::string> translation;
  std::string speaker;

  // Filled once the audio header has been read; 0 means unknown.
  int sample_rate = 0;

  bool operator==(const Utterance&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Utterance> utterances, std::string source_language = "en",
         std::string target_language = "de");

  const std::vector<Utterance>& utterances() const noexcept { return utterances_; }
  std::size_t size() const noexcept { return utterances_.size(); }
  bool empty() const noexcept { return utterances_.empty(); }

  const Utterance* find(std::string_view id) const;

  /// Audio paths in a manifest are relative to the manifest directory.
  std::filesystem::path resolve_audio(const Utterance& utt) const;

  const std::string& source_language() const noexcept { return source_language_; }
  const std::string& target_language() const noexcept { return target_language_; }
  const std::filesystem::path& root() const noexcept { return root_; }

  void set_languages(std::string source, std::string target);
  void set_root(std::filesystem::path root) { root_ = std::move(root); }

 private:
  std::vector<Utterance> utterances_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string source_language_ = "en";
  std::string target_language_ = "de";
  std::filesystem::path root_;
};

inline constexpr std::string_view kManifestHeader =
    "id\taudio\tn_frames\tsrc_text\ttgt_text\tspeaker";

/// Lowercases, deletes every Unicode punctuation character (apostrophes
/// included) and splits on whitespace runs.
Tokens normalize_transcript(std::string_view text);

std::string join_tokens(const Tokens& tokens);

Corpus parse_manifest(const std::filesystem::path& path);
Corpus parse_manifest_text(std::string_view text,
                           std::filesystem::path root = {});

void write_manifest(const Corpus& corpus, const std::filesystem::path& path);
std::string manifest_text(const Corpus& corpus);

} // namespace str
