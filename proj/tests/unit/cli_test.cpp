#include <gtest/gtest.h>

#include <json.hpp>

#include "str/cli.h"
#include "str/composition.h"
#include "str/features.h"
#include "str/suffix_memory.h"
#include "support.h"

using namespace str;
using nlohmann::json;

namespace {

struct Staged {
  test::TempDir dir{"cli"};
  Staged() { test::stage_playground(dir.path()); }
  std::string p(const std::string& leaf) const { return (dir / leaf).string(); }
  std::vector<std::string> inputs() const {
    return {"--manifest", p("manifest.tsv"), "--alignments", p("alignments"), "--conllu",
            p("tags.conllu")};
  }
};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

} // namespace

TEST(Cli, BuildMemoryReportsToStderr) {
  Staged s;
  std::string out, err;
  ASSERT_EQ(test::run_cli(cat({"build-memory"}, cat(s.inputs(), {"--out", s.p("mem.jsonl")})),
                          &out, &err),
            0)
      << err;
  const auto report = json::parse(err);
  EXPECT_EQ(report["n_keys"], 1);
  EXPECT_EQ(report["n_entries"], 2);
  EXPECT_EQ(report["total"], 2);
  const auto memory = load_memory(s.dir / "mem.jsonl");
  EXPECT_EQ(memory.lookup("playing")[1].text_suffix,
            (Tokens{"volleyball", "in", "a", "park"}));
}

TEST(Cli, MissingConlluIsUsageError) {
  Staged s;
  std::string err;
  EXPECT_EQ(test::run_cli({"build-memory", "--manifest", s.p("manifest.tsv"), "--alignments",
                           s.p("alignments"), "--conllu", s.p("nope.conllu"), "--out",
                           s.p("m.jsonl")},
                          nullptr, &err),
            2);
  EXPECT_NE(err.find("nope.conllu"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(test::run_cli({"augment", "--bogus"}), 2);
  EXPECT_EQ(test::run_cli({}), 2);
}

TEST(Cli, AllAlignmentsMissing) {
  Staged s;
  std::filesystem::remove_all(s.dir / "alignments");
  std::filesystem::create_directories(s.dir / "alignments");
  ASSERT_EQ(test::run_cli(cat({"build-memory"}, cat(s.inputs(), {"--out", s.p("mem.jsonl"),
                                                                 "--stats", s.p("b.json")}))),
            0);
  const auto report = json::parse(test::read_file(s.dir / "b.json"));
  EXPECT_EQ(report["discarded_no_alignment"], report["total"]);
  EXPECT_TRUE(load_memory(s.dir / "mem.jsonl").empty());
}

TEST(Cli, AugmentIdentityBackend) {
  Staged s;
  ASSERT_EQ(test::run_cli(cat({"build-memory"}, cat(s.inputs(), {"--out", s.p("mem.jsonl")}))), 0);
  std::string err;
  ASSERT_EQ(test::run_cli(cat({"augment"}, cat(s.inputs(), {"--memory", s.p("mem.jsonl"), "--out",
                                                            s.p("aug.jsonl"), "--seed", "0",
                                                            "--backend", "identity"})),
                          nullptr, &err),
            0)
      << err;
  const auto examples = load_examples(s.dir / "aug.jsonl");
  ASSERT_EQ(examples.size(), 2u);
  EXPECT_EQ(join_tokens(examples[0].transcript), "two children are playing volleyball in a park");
  EXPECT_EQ(examples[0].translation, "two children are playing volleyball in a park");
  const auto stats = stats_from_json(test::read_file(s.dir / "aug.jsonl.stats.json"));
  EXPECT_EQ(stats.emitted, 2u);
}

TEST(Cli, AugmentFractionZeroRejected) {
  Staged s;
  EXPECT_EQ(test::run_cli(cat({"augment"}, cat(s.inputs(), {"--memory", s.p("mem.jsonl"), "--out",
                                                           s.p("aug.jsonl"), "--fraction", "0"}))),
            2);
}

TEST(Cli, StatsMergeAndReport) {
  test::TempDir dir;
  RunStats a;
  a.total = 100;
  a.discarded_no_alignment = 7;
  a.discarded_count_mismatch = 5;
  a.emitted = 88;
  RunStats b;
  b.total = 10;
  b.skipped_no_pivot = 4;
  b.emitted = 6;
  test::write_file(dir / "a.json", stats_to_json(a));
  test::write_file(dir / "b.json", stats_to_json(b));
  std::string out;
  ASSERT_EQ(test::run_cli({"stats", (dir / "a.json").string()}, &out), 0);
  EXPECT_NE(out.find("discarded: 12 (12.0%)"), std::string::npos) << out;
  ASSERT_EQ(test::run_cli({"stats", "--json", (dir / "a.json").string(), (dir / "b.json").string()},
                          &out),
            0);
  EXPECT_NE(out.find("\"total\":110"), std::string::npos) << out;
  EXPECT_NE(out.find("\"emitted\":94"), std::string::npos) << out;
}

TEST(Cli, StatsEmptyFileIsMalformed) {
  test::TempDir dir;
  test::write_file(dir / "e.json", "");
  std::string err;
  EXPECT_EQ(test::run_cli({"stats", (dir / "e.json").string()}, nullptr, &err), 1);
  EXPECT_NE(err.find("MalformedStats"), std::string::npos) << err;
}

TEST(Cli, ValidateReportsCounts) {
  Staged s;
  std::string out;
  ASSERT_EQ(test::run_cli(cat({"validate"}, s.inputs()), &out), 0);
  EXPECT_EQ(json::parse(out)["kept"], 2);
}

TEST(Cli, TranslateThenMaterializeThenFeaturize) {
  Staged s;
  ASSERT_EQ(test::run_cli(cat({"build-memory"}, cat(s.inputs(), {"--out", s.p("mem.jsonl")}))), 0);
  ASSERT_EQ(test::run_cli(cat({"augment"}, cat(s.inputs(), {"--memory", s.p("mem.jsonl"), "--out",
                                                            s.p("aug.jsonl")}))),
            0);
  std::string err;
  ASSERT_EQ(test::run_cli({"translate", "--in", s.p("aug.jsonl"), "--out", s.p("tr.jsonl"),
                           "--backend", "file", "--table", s.p("translations.tsv")},
                          nullptr, &err),
            0)
      << err;
  ASSERT_EQ(test::run_cli({"materialize", "--manifest", s.p("manifest.tsv"), "--in",
                           s.p("tr.jsonl"), "--out", s.p("audio")},
                          nullptr, &err),
            0)
      << err;
  const Corpus augmented = parse_manifest(s.dir / "audio/manifest.tsv");
  ASSERT_EQ(augmented.size(), 2u);
  EXPECT_EQ(augmented.utterances()[0].translation, "Zwei Kinder spielen Volleyball in einem Park");
  EXPECT_TRUE(std::filesystem::exists(s.dir / "audio/utt_a-str-0.wav"));

  ASSERT_EQ(test::run_cli({"featurize", "--manifest", s.p("audio/manifest.tsv"), "--out",
                           s.p("feats")},
                          nullptr, &err),
            0)
      << err;
  const auto index = test::read_file(s.dir / "feats/features.tsv");
  EXPECT_EQ(index.rfind("id\tpath\tn_frames\n", 0), 0u) << index;
  const auto feats = read_features(s.dir / "feats/utt_a-str-0.feat");
  EXPECT_EQ(feats.cols(), 80u);
  const auto wav = read_wav(s.dir / "audio/utt_a-str-0.wav");
  EXPECT_EQ(feats.rows(), num_frames(wav.samples.size(), FeatureOptions{}));
  EXPECT_EQ(parse_manifest(s.dir / "feats/manifest.tsv").utterances()[0].n_frames,
            static_cast<std::int64_t>(feats.rows()));
}

TEST(Cli, TomlConfigWithOverride) {
  Staged s;
  ASSERT_EQ(test::run_cli(cat({"build-memory"}, cat(s.inputs(), {"--out", s.p("mem.jsonl")}))), 0);
  test::write_file(s.dir / "run.toml", "[augment]\nseed = 5\nfraction = 0.5\nmemory = \"" +
                                           s.p("mem.jsonl") + "\"\n");
  std::string err;
  ASSERT_EQ(test::run_cli(cat({"--config", s.p("run.toml"), "-v", "augment"},
                              cat(s.inputs(), {"--out", s.p("aug.jsonl"), "--fraction", "1"})),
                          nullptr, &err),
            0)
      << err;
  EXPECT_NE(err.find("seed=5"), std::string::npos) << err;
  EXPECT_EQ(load_examples(s.dir / "aug.jsonl").size(), 2u);
}
