#include "str/mt_client.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "str/corpus.h"

namespace str {

using nlohmann::json;

void check_request(const TranslationRequest& request) {
  if (request.texts.empty()) {
    throw Error(ErrorCode::InvalidRequest, "no texts to translate");
  }
  for (const auto& t : request.texts) {
    if (t.empty()) {
      throw Error(ErrorCode::InvalidRequest, "empty text in request");
    }
  }
}

std::vector<std::string> IdentityTranslator::translate_chunk(std::span<const std::string> texts,
                                                             const std::string&,
                                                             const std::string&) const {
  return {texts.begin(), texts.end()};
}

FileTableTranslator::FileTableTranslator(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open translation table " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    load(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.line());
  }
}

FileTableTranslator FileTableTranslator::from_text(std::string_view tsv) {
  FileTableTranslator t;
  t.load(tsv);
  return t;
}

void FileTableTranslator::load(std::string_view tsv) {
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::MalformedLine, "expected 'source<TAB>target'", line_no);
    }
    const std::string key = join_tokens(normalize_transcript(std::string_view(line).substr(0, tab)));
    table_.emplace(key, line.substr(tab + 1));
  }
}

std::vector<std::string> FileTableTranslator::translate_chunk(std::span<const std::string> texts,
                                                              const std::string&,
                                                              const std::string&) const {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    auto it = table_.find(join_tokens(normalize_transcript(text)));
    if (it == table_.end()) {
      throw Error(ErrorCode::MissingTranslation, text);
    }
    out.push_back(it->second);
  }
  return out;
}

HttpTranslator::HttpTranslator(HttpBackend config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint must look like http://host:port[/path]");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = url;
    path_ = "/translate";
  } else {
    scheme_host_port_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
  if (config_.max_batch == 0 || config_.max_inflight == 0 || config_.retries < 0) {
    throw Error(ErrorCode::InvalidConfig, "max_batch and max_inflight must be positive");
  }
}

std::vector<std::string> HttpTranslator::translate_chunk(std::span<const std::string> texts,
                                                         const std::string& source_lang,
                                                         const std::string& target_lang) const {
  const json body = {{"src", source_lang},
                     {"tgt", target_lang},
                     {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  const std::string payload = body.dump();

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config_.backoff_base * (1LL << (attempt - 1)));
    }
    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception& e) {
      last_failure = std::string("unparseable reply: ") + e.what();
      continue;
    }
    if (!reply.is_object() || !reply.contains("translations") ||
        !reply["translations"].is_array()) {
      last_failure = "reply has no 'translations' array";
      continue;
    }
    const auto& list = reply["translations"];
    if (list.size() != texts.size()) {
      throw Error(ErrorCode::LengthMismatch, "sent " + std::to_string(texts.size()) +
                                                 " texts, received " +
                                                 std::to_string(list.size()));
    }
    std::vector<std::string> out;
    out.reserve(list.size());
    for (const auto& item : list) {
      if (!item.is_string()) {
        throw Error(ErrorCode::LengthMismatch, "non-string translation in reply");
      }
      out.push_back(item.get<std::string>());
    }
    return out;
  }
  throw Error(ErrorCode::BackendUnavailable,
              config_.endpoint + " after " + std::to_string(config_.retries + 1) +
                  " attempts: " + last_failure);
}

std::unique_ptr<Translator> make_translator(const TranslatorBackend& backend) {
  return std::visit(
      [](const auto& b) -> std::unique_ptr<Translator> {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, HttpBackend>) {
          HttpBackend config = b;
          if (config.endpoint.empty()) {
            if (const char* env = std::getenv(kEndpointEnv)) {
              config.endpoint = env;
            }
          }
          return std::make_unique<HttpTranslator>(std::move(config));
        } else if constexpr (std::is_same_v<T, FileTableBackend>) {
          return std::make_unique<FileTableTranslator>(b.path);
        } else {
          return std::make_unique<IdentityTranslator>();
        }
      },
      backend);
}

std::vector<ChunkOutcome> translate_chunks(const Translator& translator,
                                           const TranslationRequest& request) {
  check_request(request);
  const std::size_t n = request.texts.size();
  const std::size_t batch = translator.max_batch() == 0 ? n : translator.max_batch();
  std::vector<ChunkOutcome> outcomes;
  for (std::size_t begin = 0; begin < n; begin += batch) {
    ChunkOutcome c;
    c.begin = begin;
    c.size = std::min(batch, n - begin);
    outcomes.push_back(std::move(c));
  }

  auto run = [&](ChunkOutcome& c) {
    std::span<const std::string> texts(request.texts.data() + c.begin, c.size);
    try {
      c.translations =
          translator.translate_chunk(texts, request.source_lang, request.target_lang);
      if (c.translations.size() != c.size) {
        throw Error(ErrorCode::LengthMismatch, "backend returned " +
                                                   std::to_string(c.translations.size()) +
                                                   " of " + std::to_string(c.size));
      }
    } catch (const Error& e) {
      c.translations.clear();
      c.error = e;
    }
  };

  const std::size_t inflight = std::max<std::size_t>(
      1, std::min(translator.max_inflight(), outcomes.size()));
  if (inflight == 1) {
    for (auto& c : outcomes) {
      run(c);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < inflight; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < outcomes.size(); i = next++) {
          run(outcomes[i]);
        }
      });
    }
  }
  return outcomes;
}

std::vector<std::string> translate_batch(const Translator& translator,
                                         const TranslationRequest& request) {
  auto outcomes = translate_chunks(translator, request);
  std::vector<std::string> out;
  out.reserve(request.texts.size());
  for (auto& c : outcomes) {
    if (c.error) {
      throw *c.error;
    }
    for (auto& t : c.translations) {
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<std::string> translate_batch(const TranslatorBackend& backend,
                                         const TranslationRequest& request) {
  return translate_batch(*make_translator(backend), request);
}

std::vector<AugmentedExample> fill_translations(std::vector<AugmentedExample> examples,
                                                const Translator& translator,
                                                const std::string& source_lang,
                                                const std::string& target_lang,
                                                RunStats& stats) {
  if (examples.empty()) {
    return examples;
  }
  TranslationRequest request;
  request.source_lang = source_lang;
  request.target_lang = target_lang;
  request.texts.reserve(examples.size());
  for (const auto& ex : examples) {
    request.texts.push_back(join_tokens(ex.transcript));
  }

  std::vector<std::optional<std::string>> results(examples.size());
  for (auto& c : translate_chunks(translator, request)) {
    if (!c.error) {
      for (std::size_t i = 0; i < c.size; ++i) {
        results[c.begin + i] = std::move(c.translations[i]);
      }
      continue;
    }
    // A table miss poisons only its own text; isolate it item by item.
    if (c.error->code() == ErrorCode::MissingTranslation && c.size > 1) {
      for (std::size_t i = c.begin; i < c.begin + c.size; ++i) {
        try {
          auto one = translator.translate_chunk(std::span(&request.texts[i], 1), source_lang,
                                                target_lang);
          if (one.size() == 1) {
            results[i] = std::move(one.front());
          }
        } catch (const Error&) {
        }
      }
    }
  }

  std::vector<AugmentedExample> kept;
  kept.reserve(examples.size());
  std::uint64_t dropped = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (results[i]) {
      examples[i].translation = std::move(*results[i]);
      kept.push_back(std::move(examples[i]));
    } else {
      ++dropped;
    }
  }
  stats.skipped_translation += dropped;
  stats.emitted -= std::min(stats.emitted, dropped);
  return kept;
}

} // namespace str
