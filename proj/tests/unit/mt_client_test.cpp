#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "str/error.h"
#include "str/mt_client.h"
#include "mock_server.h"
#include "support.h"

using namespace str;
using nlohmann::json;

namespace {

using test::MockServer;
using test::reply;

HttpBackend fast(const std::string& endpoint) {
  HttpBackend b;
  b.endpoint = endpoint;
  b.backoff_base = std::chrono::milliseconds(1);
  b.timeout = std::chrono::milliseconds(2000);
  return b;
}

TranslationRequest request(std::size_t n) {
  TranslationRequest r;
  for (std::size_t i = 0; i < n; ++i) r.texts.push_back("text " + std::to_string(i));
  return r;
}

AugmentedExample example(const std::string& id, const std::string& text) {
  AugmentedExample ex;
  ex.id = id;
  ex.transcript = normalize_transcript(text);
  return ex;
}

// Records chunk sizes; echoes uppercase.
class CountingTranslator : public Translator {
 public:
  explicit CountingTranslator(std::size_t batch, std::size_t inflight)
      : batch_(batch), inflight_(inflight) {}
  std::vector<std::string> translate_chunk(std::span<const std::string> texts, const std::string&,
                                           const std::string&) const override {
    std::lock_guard lock(mutex_);
    sizes_.push_back(texts.size());
    std::vector<std::string> out;
    for (const auto& t : texts) out.push_back("<" + t + ">");
    return out;
  }
  std::size_t max_batch() const override { return batch_; }
  std::size_t max_inflight() const override { return inflight_; }
  std::vector<std::size_t> sizes() const { return sizes_; }

 private:
  std::size_t batch_;
  std::size_t inflight_;
  mutable std::mutex mutex_;
  mutable std::vector<std::size_t> sizes_;
};

} // namespace

TEST(Request, Invariants) {
  EXPECT_THROW(check_request({}), Error);
  TranslationRequest r;
  r.texts = {"a", ""};
  EXPECT_THROW(check_request(r), Error);
}

TEST(Identity, Echo) {
  TranslationRequest r;
  r.texts = {"two children are playing volleyball in a park"};
  EXPECT_EQ(translate_batch(IdentityBackend{}, r), r.texts);
}

TEST(FileTable, PinnedPair) {
  test::TempDir dir;
  test::write_file(dir / "t.tsv", "two children are playing volleyball in a park\t"
                                  "Zwei Kinder spielen Volleyball in einem Park\n");
  TranslationRequest r;
  r.texts = {"Two children are playing volleyball in a park."};
  EXPECT_EQ(translate_batch(FileTableBackend{dir / "t.tsv"}, r),
            std::vector<std::string>{"Zwei Kinder spielen Volleyball in einem Park"});
}

TEST(FileTable, MissReportsText) {
  const auto t = FileTableTranslator::from_text("a\tA\n");
  TranslationRequest r;
  r.texts = {"a", "zzz"};
  try {
    translate_batch(t, r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingTranslation);
    EXPECT_NE(std::string(e.what()).find("zzz"), std::string::npos);
  }
}

TEST(Chunking, ThousandIntoSixteen) {
  const CountingTranslator t(64, 4);
  const auto r = request(1000);
  const auto chunks = translate_chunks(t, r);
  ASSERT_EQ(chunks.size(), (1000 + 63) / 64);
  EXPECT_EQ(chunks.size(), 16u);
  EXPECT_EQ(chunks.back().size, 1000u - 15u * 64u);
  const auto out = translate_batch(t, r);
  ASSERT_EQ(out.size(), 1000u);
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(out[i], "<text " + std::to_string(i) + ">");
}

TEST(Http, RoundTripAndWireFormat) {
  json seen;
  std::mutex m;
  MockServer server([&](const json& body, httplib::Response& res) {
    {
      std::lock_guard lock(m);
      seen = body;
    }
    reply(res, test::shout_all(body));
  });
  TranslationRequest r = request(3);
  r.source_lang = "en";
  r.target_lang = "fr";
  const auto out = translate_batch(fast(server.endpoint()), r);
  EXPECT_EQ(out, (std::vector<std::string>{"TEXT 0", "TEXT 1", "TEXT 2"}));
  EXPECT_EQ(seen["src"], "en");
  EXPECT_EQ(seen["tgt"], "fr");
  EXPECT_EQ(seen["texts"].size(), 3u);
}

TEST(Http, ChunksRespectMaxBatch) {
  std::atomic<std::size_t> largest{0};
  MockServer server([&](const json& body, httplib::Response& res) {
    std::size_t n = body["texts"].size();
    std::size_t cur = largest.load();
    while (n > cur && !largest.compare_exchange_weak(cur, n)) {
    }
    reply(res, test::shout_all(body));
  });
  auto b = fast(server.endpoint());
  b.max_batch = 7;
  const auto out = translate_batch(b, request(50));
  ASSERT_EQ(out.size(), 50u);
  EXPECT_EQ(out[49], "TEXT 49");
  EXPECT_EQ(largest.load(), 7u);
  EXPECT_EQ(server.requests(), 8);
}

TEST(Http, LengthMismatchNotRetried) {
  MockServer server([](const json&, httplib::Response& res) { reply(res, {"a", "b"}); });
  try {
    translate_batch(fast(server.endpoint()), request(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  EXPECT_EQ(server.requests(), 1);
}

TEST(Http, RetriesThenSucceeds) {
  std::atomic<int> calls{0};
  MockServer server([&](const json& body, httplib::Response& res) {
    if (++calls <= 3) {
      res.status = 503;
      return;
    }
    reply(res, test::shout_all(body));
  });
  EXPECT_EQ(translate_batch(fast(server.endpoint()), request(2)).size(), 2u);
  EXPECT_EQ(calls.load(), 4);
}

TEST(Http, GivesUpAfterRetries) {
  MockServer server([](const json&, httplib::Response& res) { res.status = 500; });
  try {
    translate_batch(fast(server.endpoint()), request(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendUnavailable);
  }
  EXPECT_EQ(server.requests(), 4);
}

TEST(Http, GarbageReplyIsRetried) {
  std::atomic<int> calls{0};
  MockServer server([&](const json& body, httplib::Response& res) {
    if (++calls == 1) {
      res.set_content("<html>", "text/html");
      return;
    }
    reply(res, test::shout_all(body));
  });
  EXPECT_EQ(translate_batch(fast(server.endpoint()), request(1))[0], "TEXT 0");
}

TEST(Http, UnreachableEndpoint) {
  auto b = fast("http://127.0.0.1:1");
  b.retries = 1;
  try {
    translate_batch(b, request(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendUnavailable);
  }
}

TEST(Http, EndpointFromEnvironment) {
  MockServer server([](const json& body, httplib::Response& res) { reply(res, test::shout_all(body)); });
  ::setenv(kEndpointEnv, server.endpoint().c_str(), 1);
  HttpBackend b = fast("");
  EXPECT_EQ(translate_batch(b, request(1))[0], "TEXT 0");
  ::unsetenv(kEndpointEnv);
}

TEST(Fill, IdentityFillsAll) {
  std::vector<AugmentedExample> exs{example("a", "cats like music"), example("b", "dogs run")};
  RunStats stats;
  stats.total = stats.emitted = 2;
  const auto out = fill_translations(exs, IdentityTranslator{}, "en", "de", stats);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].translation, "cats like music");
  EXPECT_EQ(out[1].translation, "dogs run");
  EXPECT_EQ(stats.skipped_translation, 0u);
}

TEST(Fill, TableMissDropsOneAndCounts) {
  const auto table = FileTableTranslator::from_text("a b\tA B\nc d\tC D\n");
  std::vector<AugmentedExample> exs{example("1", "a b"), example("2", "x y"), example("3", "c d")};
  RunStats stats;
  stats.total = stats.emitted = 3;
  const auto out = fill_translations(exs, table, "en", "de", stats);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].id, "1");
  EXPECT_EQ(out[1].translation, "C D");
  EXPECT_EQ(stats.skipped_translation, 1u);
  EXPECT_EQ(stats.emitted, 2u);
  EXPECT_TRUE(stats.balanced());
  RunStats again;
  again.total = again.emitted = 3;
  EXPECT_EQ(fill_translations(exs, table, "en", "de", again), out);
}
