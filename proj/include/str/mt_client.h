#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "str/augmenter.h"
#include "str/error.h"

namespace str {

struct TranslationRequest {
  std::vector<std::string> texts;
  std::string source_lang = "en";
  std::string target_lang = "de";
};

/// Validates the request invariants: at least one text, none empty.
void check_request(const TranslationRequest& request);

// Wire format: POST <endpoint> with {"src": ..., "tgt": ..., "texts": [...]},
// answered by {"translations": [...]}. An endpoint without a path posts to
// /translate.
struct HttpBackend {
  std::string endpoint;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_batch = 64;
  int retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::size_t max_inflight = 4;
};

// TSV `source\ttarget`; lookups match on the normalized source.
struct FileTableBackend {
  std::filesystem::path path;
};

struct IdentityBackend {};

using TranslatorBackend = std::variant<HttpBackend, FileTableBackend, IdentityBackend>;

inline constexpr const char* kEndpointEnv = "STR_MT_ENDPOINT";

class Translator {
 public:
  virtual ~Translator() = default;

  /// Translates one chunk of at most max_batch() texts, or throws Error.
  /// Must be safe to call concurrently.
  virtual std::vector<std::string> translate_chunk(std::span<const std::string> texts,
                                                   const std::string& source_lang,
                                                   const std::string& target_lang) const = 0;

  virtual std::size_t max_batch() const { return 0; } // 0: unbounded
  virtual std::size_t max_inflight() const { return 1; }
};

class IdentityTranslator final : public Translator {
 public:
  std::vector<std::string> translate_chunk(std::span<const std::string> texts,
                                           const std::string&, const std::string&) const override;
};

class FileTableTranslator final : public Translator {
 public:
  explicit FileTableTranslator(const std::filesystem::path& path);
  static FileTableTranslator from_text(std::string_view tsv);

  std::vector<std::string> translate_chunk(std::span<const std::string> texts,
                                           const std::string&, const std::string&) const override;

  std::size_t size() const noexcept { return table_.size(); }

 private:
  FileTableTranslator() = default;
  void load(std::string_view tsv);

  std::unordered_map<std::string, std::string> table_;
};

class HttpTranslator final : public Translator {
 public:
  explicit HttpTranslator(HttpBackend config);

  std::vector<std::string> translate_chunk(std::span<const std::string> texts,
                                           const std::string& source_lang,
                                           const std::string& target_lang) const override;

  std::size_t max_batch() const override { return config_.max_batch; }
  std::size_t max_inflight() const override { return config_.max_inflight; }

 private:
  HttpBackend config_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Resolves an empty Http endpoint from STR_MT_ENDPOINT.
std::unique_ptr<Translator> make_translator(const TranslatorBackend& backend);

struct ChunkOutcome {
  std::size_t begin = 0; // offset of the chunk in the request
  std::size_t size = 0;
  std::vector<std::string> translations;
  std::optional<Error> error;
};

/// Splits into chunks of at most max_batch() and runs up to max_inflight()
/// of them at once. Outcomes are ordered by chunk position.
std::vector<ChunkOutcome> translate_chunks(const Translator& translator,
                                           const TranslationRequest& request);

/// All-or-nothing: output has the input's length and order, or the first
/// failing chunk's error is thrown.
std::vector<std::string> translate_batch(const Translator& translator,
                                         const TranslationRequest& request);
std::vector<std::string> translate_batch(const TranslatorBackend& backend,
                                         const TranslationRequest& request);

/// Sets every example's translation. Examples that cannot be translated are
/// dropped and moved from stats.emitted to stats.skipped_translation.
std::vector<AugmentedExample> fill_translations(std::vector<AugmentedExample> examples,
                                                const Translator& translator,
                                                const std::string& source_lang,
                                                const std::string& target_lang,
                                                RunStats& stats);

} // namespace str
