#include "str/cli.h"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "str/composition.h"
#include "str/corpus.h"
#include "str/error.h"
#include "str/suffix_memory.h"
#include "str/tagging.h"

namespace str::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& path, std::string_view flag) {
  if (path.empty()) {
    throw UsageError(std::string(flag) + " is required");
  }
  if (!fs::exists(path)) {
    throw UsageError(std::string(flag) + ": " + path.string() + " does not exist");
  }
}

void require_out(const fs::path& path) {
  if (path.empty()) {
    throw UsageError("--out is required");
  }
}

int guarded(std::ostream& err, const std::function<void()>& body) {
  try {
    body();
    return kSuccess;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidConfig ? kUsageError : kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

fs::path stats_path_for(const RunConfig& config) {
  return config.stats ? *config.stats : fs::path(config.out.string() + ".stats.json");
}

struct Inputs {
  Corpus corpus;
  VerdictMap verdicts;
  PivotTable pivots;
};

Inputs load_inputs(const RunConfig& config) {
  require_file(config.manifest, "--manifest");
  require_file(config.alignments, "--alignments");
  require_file(config.conllu, "--conllu");
  Inputs in;
  in.corpus = parse_manifest(config.manifest);
  in.corpus.set_languages(config.source_lang, config.target_lang);
  in.verdicts = validate_all(in.corpus, load_alignments(config.alignments, config.alignment));
  in.pivots = collect_pivots(in.corpus, parse_conllu(config.conllu));
  return in;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i, 0);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i, w);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) {
              failure = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

std::string percent(std::uint64_t part, std::uint64_t whole) {
  char buf[32];
  const double p = whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
  std::snprintf(buf, sizeof(buf), "%.1f%%", p);
  return buf;
}

} // namespace

TranslatorBackend backend_from_config(const RunConfig& config) {
  if (config.backend == "identity") {
    return IdentityBackend{};
  }
  if (config.backend == "file") {
    if (config.table.empty()) {
      throw UsageError("--backend file needs --table");
    }
    require_file(config.table, "--table");
    return FileTableBackend{config.table};
  }
  if (config.backend == "http") {
    HttpBackend http = config.http;
    if (!config.endpoint.empty()) {
      http.endpoint = config.endpoint;
    }
    return http;
  }
  throw UsageError("unknown backend '" + config.backend + "'");
}

int cmd_build_memory(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_out(config.out);
    const Inputs in = load_inputs(config);
    const AlignmentMap kept = kept_alignments(in.verdicts);

    const auto eligible = kept_pivots(in.pivots, kept);
    std::uint64_t no_pivot = 0;
    for (const auto& [id, pivots] : eligible) {
      no_pivot += pivots.empty() ? 1 : 0;
    }
    MemoryBuildConfig build_config;
    build_config.unknown_markers = config.alignment.unknown_markers;
    const SuffixMemory memory = build_memory(in.corpus, kept, eligible, build_config);
    if (config.out.has_parent_path()) {
      fs::create_directories(config.out.parent_path());
    }
    save_memory(memory, config.out);

    std::uint64_t no_alignment = 0;
    std::uint64_t count_mismatch = 0;
    std::uint64_t tag_mismatch = 0;
    for (const auto& [id, verdict] : in.verdicts) {
      if (!verdict.kept()) {
        (verdict.reason() == DiscardReason::NoAlignment ? no_alignment : count_mismatch) += 1;
      } else if (in.pivots.tag_mismatch.contains(id)) {
        ++tag_mismatch;
      }
    }
    const MemoryStats ms = memory_stats(memory);
    ojson report;
    report["total"] = in.corpus.size();
    report["kept"] = kept.size();
    report["discarded_no_alignment"] = no_alignment;
    report["discarded_count_mismatch"] = count_mismatch;
    report["skipped_tag_mismatch"] = tag_mismatch;
    report["skipped_no_pivot"] = no_pivot;
    report["n_keys"] = ms.n_keys;
    report["n_entries"] = ms.n_entries;
    report["bytes_estimate"] = ms.bytes_estimate;
    if (config.stats) {
      write_text(*config.stats, report.dump() + "\n");
    } else {
      err << report.dump() << '\n';
    }
    if (config.verbose) {
      out << "wrote " << ms.n_keys << " keys, " << ms.n_entries << " entries to "
          << config.out.string() << '\n';
    }
  });
}

int cmd_augment(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_out(config.out);
    require_file(config.memory, "--memory");
    const Inputs in = load_inputs(config);
    const SuffixMemory memory = load_memory(config.memory);
    auto [examples, stats] =
        augment_corpus(in.corpus, memory, in.verdicts, in.pivots, config.augment);
    if (!config.backend.empty()) {
      const auto translator = make_translator(backend_from_config(config));
      examples = fill_translations(std::move(examples), *translator, config.source_lang,
                                   config.target_lang, stats);
    }
    write_text(config.out, examples_to_jsonl(examples));
    write_text(stats_path_for(config), stats_to_json(stats) + "\n");
    if (config.verbose) {
      out << "emitted " << stats.emitted << " of " << stats.total << '\n';
    }
  });
}

int cmd_translate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_out(config.out);
    require_file(config.input, "--in");
    if (config.backend.empty()) {
      throw UsageError("--backend is required");
    }
    auto examples = load_examples(config.input);
    RunStats stats;
    const fs::path in_stats(config.input.string() + ".stats.json");
    if (fs::exists(in_stats)) {
      stats = stats_from_json(read_text(in_stats));
    } else {
      stats.total = stats.emitted = examples.size();
    }
    const auto translator = make_translator(backend_from_config(config));
    examples = fill_translations(std::move(examples), *translator, config.source_lang,
                                 config.target_lang, stats);
    write_text(config.out, examples_to_jsonl(examples));
    write_text(stats_path_for(config), stats_to_json(stats) + "\n");
    if (config.verbose) {
      out << "translated " << examples.size() << ", dropped " << stats.skipped_translation
          << '\n';
    }
  });
}

int cmd_materialize(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_out(config.out);
    require_file(config.manifest, "--manifest");
    require_file(config.input, "--in");
    const Corpus corpus = parse_manifest(config.manifest);
    const auto examples = load_examples(config.input);
    fs::create_directories(config.out);

    std::vector<Utterance> rows(examples.size());
    parallel_for(examples.size(), config.augment.workers, [&](std::size_t i, std::size_t) {
      const AugmentedExample& ex = examples[i];
      const Waveform wave = materialize(ex, corpus, config.audio);
      const fs::path wav_name = ex.id + ".wav";
      write_wav(wave, config.out / wav_name);
      Utterance& row = rows[i];
      row.id = ex.id;
      row.audio_path = wav_name;
      row.src_text = join_tokens(ex.transcript);
      row.transcript = ex.transcript;
      row.translation = ex.translation;
      const Utterance* src = corpus.find(ex.provenance.src_a);
      row.speaker = src ? src->speaker : std::string();
    });
    if (!rows.empty()) {
      write_manifest(Corpus(std::move(rows)), config.out / "manifest.tsv");
    }
    if (config.verbose) {
      out << "materialized " << examples.size() << " examples into " << config.out.string()
          << '\n';
    }
  });
}

int cmd_featurize(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_out(config.out);
    require_file(config.manifest, "--manifest");
    const Corpus corpus = parse_manifest(config.manifest);
    fs::create_directories(config.out);

    const std::size_t workers =
        std::max<std::size_t>(1, std::min(config.augment.workers, corpus.size()));
    std::vector<std::unique_ptr<LogMelExtractor>> extractors(workers);
    std::vector<std::int64_t> n_frames(corpus.size());
    parallel_for(corpus.size(), workers, [&](std::size_t i, std::size_t w) {
      const Utterance& utt = corpus.utterances()[i];
      const Waveform wave = read_wav(corpus.resolve_audio(utt));
      auto& extractor = extractors[w];
      if (!extractor || extractor->options().sample_rate != wave.sample_rate) {
        FeatureOptions opts = config.features;
        opts.sample_rate = wave.sample_rate;
        extractor = std::make_unique<LogMelExtractor>(opts);
      }
      FeatureMatrix feats = extractor->compute(wave);
      if (config.apply_cmvn) {
        feats = cmvn(feats);
      }
      write_features(feats, config.out / (utt.id + ".feat"));
      n_frames[i] = static_cast<std::int64_t>(feats.rows());
    });

    std::string index = "id\tpath\tn_frames\n";
    std::vector<Utterance> updated = corpus.utterances();
    for (std::size_t i = 0; i < updated.size(); ++i) {
      index += updated[i].id + "\t" + updated[i].id + ".feat\t" + std::to_string(n_frames[i]) + "\n";
      updated[i].n_frames = n_frames[i];
      updated[i].audio_path =
          fs::proximate(fs::absolute(corpus.resolve_audio(corpus.utterances()[i])),
                        fs::absolute(config.out));
    }
    write_text(config.out / "features.tsv", index);
    write_manifest(Corpus(std::move(updated)), config.out / "manifest.tsv");
    if (config.verbose) {
      out << "featurized " << corpus.size() << " utterances\n";
    }
  });
}

std::string stats_report(const RunStats& s) {
  std::ostringstream os;
  os << "total: " << s.total << '\n';
  os << "emitted: " << s.emitted << " (" << percent(s.emitted, s.total) << ")\n";
  os << "discarded: " << s.discarded() << " (" << percent(s.discarded(), s.total) << ")\n";
  const std::pair<const char*, std::uint64_t> reasons[] = {
      {"discarded_no_alignment", s.discarded_no_alignment},
      {"discarded_count_mismatch", s.discarded_count_mismatch},
      {"skipped_tag_mismatch", s.skipped_tag_mismatch},
      {"skipped_no_pivot", s.skipped_no_pivot},
      {"skipped_no_candidate", s.skipped_no_candidate},
      {"skipped_translation", s.skipped_translation},
      {"cut_by_fraction", s.cut_by_fraction},
  };
  for (const auto& [name, count] : reasons) {
    os << "  " << name << ": " << count << " (" << percent(count, s.total) << ")\n";
  }
  os << "examples: original " << s.total << " | augmented +" << s.emitted << '\n';
  return os.str();
}

int cmd_stats(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.stats_files.empty()) {
      throw UsageError("at least one stats file is required");
    }
    RunStats merged;
    for (const auto& path : config.stats_files) {
      require_file(path, "stats file");
      try {
        merged += stats_from_json(read_text(path));
      } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
      }
    }
    out << stats_report(merged);
    if (config.json) {
      out << stats_to_json(merged) << '\n';
    }
  });
}

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_file(config.manifest, "--manifest");
    require_file(config.alignments, "--alignments");
    Corpus corpus = parse_manifest(config.manifest);
    const VerdictMap verdicts =
        validate_all(corpus, load_alignments(config.alignments, config.alignment));
    std::uint64_t kept = 0;
    std::uint64_t with_unknown = 0;
    std::uint64_t no_alignment = 0;
    std::uint64_t count_mismatch = 0;
    for (const auto& utt : corpus.utterances()) {
      const auto& v = verdicts.at(utt.id);
      if (v.kept()) {
        ++kept;
        with_unknown += v.alignment().has_unknown ? 1 : 0;
      } else {
        (v.reason() == DiscardReason::NoAlignment ? no_alignment : count_mismatch) += 1;
        if (config.verbose) {
          out << utt.id << '\t' << to_string(v.reason()) << '\n';
        }
      }
    }
    std::uint64_t tag_mismatch = 0;
    if (!config.conllu.empty()) {
      require_file(config.conllu, "--conllu");
      tag_mismatch = collect_pivots(corpus, parse_conllu(config.conllu)).tag_mismatch.size();
    }
    ojson report;
    report["total"] = corpus.size();
    report["kept"] = kept;
    report["kept_with_unknown"] = with_unknown;
    report["discarded_no_alignment"] = no_alignment;
    report["discarded_count_mismatch"] = count_mismatch;
    if (!config.conllu.empty()) {
      report["tag_mismatch"] = tag_mismatch;
    }
    out << report.dump() << '\n';
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Sample-translate-recombine augmentation for speech translation corpora", "straug"};
  app.set_config("--config", "", "TOML configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.add_flag("-v,--verbose", config.verbose, "Print the effective configuration and progress");

  auto add_corpus_inputs = [&](CLI::App* cmd, bool need_conllu) {
    cmd->add_option("--manifest", config.manifest, "TSV manifest");
    cmd->add_option("--alignments", config.alignments, "TextGrid directory or CTM file");
    auto* c = cmd->add_option("--conllu", config.conllu, "POS tags in CoNLL-U");
    if (!need_conllu) {
      c->description("Optional POS tags; reports tag/transcript mismatches");
    }
    cmd->add_option("--tier", config.alignment.tier_name, "TextGrid word tier")
        ->capture_default_str();
    cmd->add_option("--unknown-marker", config.alignment.unknown_markers,
                    "Aligner labels for unknown words")
        ->capture_default_str();
    cmd->add_option("--src-lang", config.source_lang)->capture_default_str();
    cmd->add_option("--tgt-lang", config.target_lang)->capture_default_str();
  };
  auto add_backend = [&](CLI::App* cmd) {
    cmd->add_option("--backend", config.backend, "Translation backend")
        ->check(CLI::IsMember({"http", "file", "identity"}));
    cmd->add_option("--endpoint", config.endpoint,
                    std::string("MT service URL (falls back to $") + kEndpointEnv + ")");
    cmd->add_option("--table", config.table, "source<TAB>target translation table");
    cmd->add_option("--max-batch", config.http.max_batch)->capture_default_str();
    cmd->add_option("--retries", config.http.retries)->capture_default_str();
    cmd->add_option("--max-inflight", config.http.max_inflight)->capture_default_str();
    cmd->add_option_function<std::int64_t>(
           "--timeout-ms", [&](std::int64_t ms) { config.http.timeout = std::chrono::milliseconds(ms); },
           "HTTP timeout")
        ->default_str("30000");
    cmd->add_option_function<std::int64_t>(
           "--backoff-ms",
           [&](std::int64_t ms) { config.http.backoff_base = std::chrono::milliseconds(ms); },
           "Base of the exponential retry backoff")
        ->default_str("500");
  };
  auto add_stats_out = [&](CLI::App* cmd) {
    cmd->add_option_function<std::string>(
        "--stats", [&](const std::string& p) { config.stats = fs::path(p); },
        "Where to write the stats JSON");
  };
  auto add_workers = [&](CLI::App* cmd) {
    cmd->add_option("--workers", config.augment.workers)->capture_default_str()->check(CLI::PositiveNumber);
  };

  auto* build = app.add_subcommand("build-memory", "Build the suffix memory");
  add_corpus_inputs(build, true);
  build->add_option("--out", config.out, "Memory JSONL to write");
  add_stats_out(build);

  auto* augment = app.add_subcommand("augment", "Sample and recombine new examples");
  add_corpus_inputs(augment, true);
  augment->add_option("--memory", config.memory, "Suffix memory JSONL");
  augment->add_option("--out", config.out, "Composition manifest JSONL to write");
  augment->add_option("--seed", config.augment.seed)->capture_default_str();
  augment->add_option("--fraction", config.augment.fraction, "Keep this leading share of examples")
      ->capture_default_str()
      ->check(CLI::Validator(
          [](std::string& v) -> std::string {
            double f = 0.0;
            if (!CLI::detail::lexical_cast(v, f) || !(f > 0.0 && f <= 1.0)) {
              return "fraction must be in (0, 1]";
            }
            return {};
          },
          "(0,1]"));
  augment->add_option("--per-utterance", config.augment.per_utterance)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  augment->add_flag("--allow-identical-suffix", config.augment.allow_identical_suffix);
  add_workers(augment);
  add_backend(augment);
  add_stats_out(augment);

  auto* translate = app.add_subcommand("translate", "Fill translations of a composition manifest");
  translate->add_option("--in", config.input, "Composition manifest JSONL");
  translate->add_option("--out", config.out, "Translated composition manifest");
  translate->add_option("--src-lang", config.source_lang)->capture_default_str();
  translate->add_option("--tgt-lang", config.target_lang)->capture_default_str();
  add_backend(translate);
  add_stats_out(translate);

  auto* materialize_cmd = app.add_subcommand("materialize", "Render compositions to WAV");
  materialize_cmd->add_option("--manifest", config.manifest, "Source manifest");
  materialize_cmd->add_option("--in", config.input, "Composition manifest JSONL");
  materialize_cmd->add_option("--out", config.out, "Output directory");
  materialize_cmd->add_option("--junction-silence-ms", config.audio.junction_silence_ms)
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  add_workers(materialize_cmd);

  auto* featurize = app.add_subcommand("featurize", "Log-Mel filterbank features");
  featurize->add_option("--manifest", config.manifest);
  featurize->add_option("--out", config.out, "Output directory");
  featurize->add_option("--num-mel-bins", config.features.n_mels)->capture_default_str();
  featurize->add_option("--fft-size", config.features.fft_size)->capture_default_str();
  featurize->add_option("--low-freq", config.features.low_freq)->capture_default_str();
  featurize->add_option("--high-freq", config.features.high_freq)->capture_default_str();
  featurize->add_option("--preemphasis", config.features.preemphasis)->capture_default_str();
  featurize->add_option("--dither", config.features.dither)->capture_default_str();
  featurize->add_option("--energy-floor", config.features.energy_floor)->capture_default_str();
  featurize->add_flag("!--no-cmvn", config.apply_cmvn, "Skip per-utterance normalization");
  add_workers(featurize);

  auto* stats = app.add_subcommand("stats", "Merge and report run statistics");
  stats->add_option("files", config.stats_files, "Stats JSON files");
  stats->add_flag("--json", config.json, "Also print the merged counters as JSON");

  auto* validate = app.add_subcommand("validate", "Check alignments against transcripts");
  add_corpus_inputs(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }
  if (config.verbose) {
    err << app.config_to_str(true, false);
  }

  if (build->parsed()) return cmd_build_memory(config, out, err);
  if (augment->parsed()) return cmd_augment(config, out, err);
  if (translate->parsed()) return cmd_translate(config, out, err);
  if (materialize_cmd->parsed()) return cmd_materialize(config, out, err);
  if (featurize->parsed()) return cmd_featurize(config, out, err);
  if (stats->parsed()) return cmd_stats(config, out, err);
  if (validate->parsed()) return cmd_validate(config, out, err);
  return kUsageError;
}

} // namespace str::cli
