#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "prdesc/baselines.hpp"
#include "prdesc/checkpoint.hpp"
#include "prdesc/decode.hpp"
#include "prdesc/errors.hpp"
#include "prdesc/fetch.hpp"
#include "prdesc/ingest.hpp"
#include "prdesc/manifest.hpp"
#include "prdesc/preprocess.hpp"
#include "prdesc/rouge.hpp"
#include "prdesc/training.hpp"
#include "prdesc/vocab.hpp"

namespace prdesc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<ProcessedExample> load_examples(const fs::path& path) {
  auto in = open_in(path);
  return read_examples(in);
}

void save_examples(const fs::path& path, std::span<const ProcessedExample> examples) {
  auto out = open_out(path);
  write_examples(out, examples);
}

Vocab load_vocab(const fs::path& path) {
  auto in = open_in(path);
  return Vocab::load(in);
}

std::vector<TokenSeq> read_token_lines(const fs::path& path) {
  auto in = open_in(path);
  std::vector<TokenSeq> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    TokenSeq toks;
    std::istringstream words(line);
    for (std::string w; words >> w;) toks.push_back(w);
    out.push_back(std::move(toks));
  }
  return out;
}

fs::path manifest_path(const fs::path& artifact) { return fs::path(artifact.string() + ".manifest.json"); }

// The model reads at most max_src_len source tokens.
std::vector<EncodedExample> encode_all(std::span<const ProcessedExample> examples, const Vocab& vocab,
                                       const ModelConfig& config) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (ProcessedExample ex : examples) {
    if (ex.source.size() > static_cast<std::size_t>(config.max_src_len)) {
      ex.source.resize(static_cast<std::size_t>(config.max_src_len));
    }
    if (ex.source.empty()) throw DataError("example " + ex.pr_id + " has an empty source");
    out.push_back(encode_with_extension(ex, vocab));
  }
  return out;
}

json read_json_file(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json score_json(const RougeScore& s) {
  return json{{"recall", s.recall}, {"precision", s.precision}, {"f1", s.f1}};
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string in, out, endpoint, repo, token_env = "GITHUB_TOKEN";
  std::size_t max = 0;
  int interval_ms = 0;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "ingest";
  const bool remote = !a.repo.empty();
  if (remote == !a.in.empty()) throw CLI::ValidationError("ingest", "give either --in or --repo");

  std::vector<PullRequest> prs;
  if (remote) {
    if (a.max == 0) throw CLI::ValidationError("--max", "must be positive");
    FetchOptions options;
    if (const char* t = std::getenv(a.token_env.c_str())) options.token = t;
    options.request_interval = std::chrono::milliseconds(a.interval_ms);
    auto sink = open_out(a.out);
    prs = fetch_prs(a.endpoint, a.repo, a.max, &sink, options);
    manifest.set_config(json{{"endpoint", a.endpoint}, {"repo", a.repo}, {"max", a.max}});
  } else {
    auto in = open_in(a.in);
    prs = read_pr_corpus(in);
    auto sink = open_out(a.out);
    write_pr_corpus(sink, prs);
    manifest.add_input(a.in);
  }
  manifest.artifacts = {a.out};
  manifest.write(manifest_path(a.out));
  out << "ingested " << prs.size() << " pull requests\n";
  return kExitOk;
}

struct PreprocessArgs {
  std::string in, out, stats, stats_text;
};

int cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  auto in = open_in(a.in);
  const std::vector<PullRequest> prs = read_pr_corpus(in);
  PreprocessStats stats;
  const std::vector<ProcessedExample> examples = preprocess_corpus(prs, &stats);
  save_examples(a.out, examples);

  RunManifest manifest;
  manifest.command = "preprocess";
  manifest.add_input(a.in);
  manifest.artifacts = {a.out};
  if (!a.stats.empty()) {
    open_out(a.stats) << stats.to_json() << '\n';
    manifest.artifacts.push_back(a.stats);
  }
  if (!a.stats_text.empty()) {
    open_out(a.stats_text) << stats.to_text();
    manifest.artifacts.push_back(a.stats_text);
  }
  manifest.write(manifest_path(a.out));
  out << stats.to_text();
  return kExitOk;
}

struct SplitArgs {
  std::string in, out_dir;
  std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const std::vector<ProcessedExample> examples = load_examples(a.in);
  Splits splits;
  try {
    splits = split_dataset(examples, a.seed);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  const fs::path dir(a.out_dir);
  save_examples(dir / "train.jsonl", splits.train);
  save_examples(dir / "valid.jsonl", splits.valid);
  save_examples(dir / "test.jsonl", splits.test);

  RunManifest manifest;
  manifest.command = "split";
  manifest.seed = a.seed;
  manifest.add_input(a.in);
  manifest.artifacts = {(dir / "train.jsonl").string(), (dir / "valid.jsonl").string(),
                        (dir / "test.jsonl").string()};
  manifest.write(dir / "split.manifest.json");
  out << "train " << splits.train.size() << ", valid " << splits.valid.size() << ", test " << splits.test.size()
      << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string config, phase = "ml", init, vocab, out_dir;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const json cfg = read_json_file(a.config);
  ModelConfig model = config_from_json(cfg.value("model", json::object()));
  TrainConfig train = train_config_from_json(cfg.value("train", json::object()));
  if (a.seed) train.seed = *a.seed;
  const json paths = cfg.value("paths", json::object());
  const fs::path cfg_dir = fs::path(a.config).parent_path();
  auto resolve = [&](const std::string& key, const std::string& flag) -> fs::path {
    if (!flag.empty()) return flag;
    if (!paths.contains(key)) throw DataError("config: paths." + key + " is required");
    fs::path p = paths.at(key).get<std::string>();
    return p.is_absolute() ? p : cfg_dir / p;
  };
  const fs::path train_path = resolve("train", "");
  const fs::path valid_path = resolve("valid", "");
  const fs::path out_dir = resolve("out_dir", a.out_dir);
  fs::create_directories(out_dir);

  const std::vector<ProcessedExample> train_set = load_examples(train_path);
  const std::vector<ProcessedExample> valid_set = load_examples(valid_path);
  if (train_set.empty() || valid_set.empty()) throw DataError("training needs non-empty train and valid splits");

  const bool hybrid = a.phase == "hybrid";
  Vocab vocab;
  fs::path vocab_path = a.vocab.empty() ? out_dir / "vocab.txt" : fs::path(a.vocab);
  ModelParams init;
  if (hybrid || !a.init.empty()) {
    if (a.init.empty()) throw CLI::ValidationError("--init", "the hybrid phase needs a starting checkpoint");
    Checkpoint start = load_checkpoint(fs::path(a.init));
    vocab = load_vocab(vocab_path);
    if (static_cast<int>(vocab.size()) != start.config.vocab_size) {
      throw DataError("vocab size does not match the checkpoint");
    }
    model = start.config;
    init = std::move(start.params);
  } else {
    vocab = build_vocab(train_set, static_cast<std::size_t>(model.vocab_size));
    model.vocab_size = static_cast<int>(vocab.size());
    open_out(vocab_path) << [&] {
      std::ostringstream s;
      vocab.save(s);
      return s.str();
    }();
    init = ModelParams::initialize(model, train.seed + seed_offset::kInit);
  }

  const std::vector<EncodedExample> train_enc = encode_all(train_set, vocab, model);
  const std::vector<EncodedExample> valid_enc = encode_all(valid_set, vocab, model);
  const TrainContext ctx{model, vocab, train_enc, valid_enc};

  const fs::path log_path = out_dir / (a.phase + "_log.jsonl");
  auto log = open_out(log_path);
  const auto sink = [&](const LogEntry& e) { log << to_json(e).dump() << '\n' << std::flush; };
  const PhaseResult result = hybrid ? train_hybrid(init, ctx, train, rouge_l_reward, sink) : train_ml(init, ctx, train, sink);

  const fs::path ckpt_path = out_dir / (a.phase + "_best.ckpt");
  Checkpoint ckpt{model, result.best,
                  json{{"phase", a.phase}, {"iter", result.best_iter}, {"val_rougeL", result.best_score}}};
  save_checkpoint(ckpt_path, ckpt);

  RunManifest manifest;
  manifest.command = "train --phase " + a.phase;
  manifest.seed = train.seed;
  manifest.set_config(json{{"model", config_to_json(model)}, {"train", train_config_to_json(train)}});
  manifest.add_input(train_path);
  manifest.add_input(valid_path);
  if (!a.init.empty()) manifest.add_input(a.init);
  manifest.artifacts = {ckpt_path.string(), log_path.string(), vocab_path.string()};
  manifest.write(out_dir / (a.phase + ".manifest.json"));

  if (result.diverged) {
    err << "training diverged: " << result.divergence << "; kept the best checkpoint from iteration "
        << result.best_iter << '\n';
    return kExitDivergence;
  }
  out << "best validation ROUGE-L F1 " << result.best_score << " at iteration " << result.best_iter << '\n';
  return kExitOk;
}

// Detokenized targets, one per line, for `evaluate --ref`.
void write_references(const std::string& path, const std::vector<ProcessedExample>& examples) {
  if (path.empty()) return;
  std::ostringstream text;
  for (const ProcessedExample& ex : examples) text << detokenize(ex.target) << '\n';
  open_out(path) << text.str();
}

struct GenerateArgs {
  std::string checkpoint, vocab, input, out, ref_out, method = "beam";
  std::size_t beam_width = 4;
  int max_len = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(fs::path(a.checkpoint));
  const fs::path vocab_path = a.vocab.empty() ? fs::path(a.checkpoint).parent_path() / "vocab.txt" : fs::path(a.vocab);
  const Vocab vocab = load_vocab(vocab_path);
  if (static_cast<int>(vocab.size()) != ckpt.config.vocab_size) {
    throw DataError("vocab size does not match the checkpoint");
  }
  const std::vector<ProcessedExample> examples = load_examples(a.input);
  const std::vector<EncodedExample> encoded = encode_all(examples, vocab, ckpt.config);
  const std::size_t max_len = a.max_len > 0 ? static_cast<std::size_t>(a.max_len)
                                            : static_cast<std::size_t>(ckpt.config.max_tgt_len);

  std::ostringstream text;
  std::size_t fallbacks = 0;
  for (const EncodedExample& ex : encoded) {
    const PointerGeneratorDecoder decoder(ckpt.params, ckpt.config, ex, vocab);
    DecodeResult result;
    if (a.method == "greedy") {
      result = greedy_decode(decoder, max_len);
    } else {
      result = beam_search(decoder, BeamOptions{a.beam_width, max_len, true});
      if (result.blocked_fallback) ++fallbacks;
    }
    text << detokenize(ids_to_tokens(result.ids, vocab, ex.oov_tokens)) << '\n';
  }
  open_out(a.out) << text.str();
  write_references(a.ref_out, examples);

  RunManifest manifest;
  manifest.command = "generate";
  manifest.set_config(json{{"method", a.method}, {"beam_width", a.beam_width}, {"max_len", max_len}});
  manifest.add_input(a.checkpoint);
  manifest.add_input(vocab_path);
  manifest.add_input(a.input);
  manifest.artifacts = {a.out};
  if (!a.ref_out.empty()) manifest.artifacts.push_back(a.ref_out);
  manifest.write(manifest_path(a.out));
  out << "generated " << encoded.size() << " descriptions";
  if (fallbacks > 0) out << " (" << fallbacks << " needed a blocked-trigram fallback)";
  out << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  std::string gen, ref, out;
  bool no_stem = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const std::vector<TokenSeq> gen = read_token_lines(a.gen);
  const std::vector<TokenSeq> ref = read_token_lines(a.ref);
  if (gen.size() != ref.size()) {
    throw DataError("line counts differ: " + std::to_string(gen.size()) + " generated, " +
                    std::to_string(ref.size()) + " references");
  }
  if (gen.empty()) throw DataError("nothing to evaluate");
  std::vector<SequencePair> pairs;
  for (std::size_t k = 0; k < gen.size(); ++k) pairs.emplace_back(gen[k], ref[k]);
  const bool stem = !a.no_stem;
  const json report{{"count", pairs.size()},
                    {"stemmed", stem},
                    {"rouge1", score_json(corpus_rouge(pairs, RougeKind::Rouge1, stem))},
                    {"rouge2", score_json(corpus_rouge(pairs, RougeKind::Rouge2, stem))},
                    {"rougeL", score_json(corpus_rouge(pairs, RougeKind::RougeL, stem))}};
  if (a.out.empty()) {
    out << report.dump(2) << '\n';
    return kExitOk;
  }
  open_out(a.out) << report.dump(2) << '\n';
  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.set_config(json{{"stemmed", stem}});
  manifest.add_input(a.gen);
  manifest.add_input(a.ref);
  manifest.artifacts = {a.out};
  manifest.write(manifest_path(a.out));
  return kExitOk;
}

struct BaselineArgs {
  std::string method, input, out, ref_out;
  std::size_t limit = kBaselineLimit;
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out) {
  const std::vector<ProcessedExample> examples = load_examples(a.input);
  std::ostringstream text;
  for (const ProcessedExample& ex : examples) {
    const TokenSeq result = a.method == "leadcm" ? lead_cm(ex.source, a.limit) : lexrank(ex.source, a.limit);
    text << detokenize(result) << '\n';
  }
  open_out(a.out) << text.str();
  write_references(a.ref_out, examples);
  RunManifest manifest;
  manifest.command = "baseline";
  manifest.set_config(json{{"method", a.method}, {"limit", a.limit}});
  manifest.add_input(a.input);
  manifest.artifacts = {a.out};
  if (!a.ref_out.empty()) manifest.artifacts.push_back(a.ref_out);
  manifest.write(manifest_path(a.out));
  out << "wrote " << examples.size() << " " << a.method << " outputs\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pull-request description generation toolkit", "prdesc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Normalize a local PR corpus or fetch one from a GitHub-style API");
  s_ingest->add_option("--in", ingest.in, "Local JSONL corpus")->check(CLI::ExistingFile);
  s_ingest->add_option("--out", ingest.out, "Output JSONL")->required();
  s_ingest->add_option("--endpoint", ingest.endpoint, "API root")->default_val("https://api.github.com");
  s_ingest->add_option("--repo", ingest.repo, "owner/name");
  s_ingest->add_option("--max", ingest.max, "Maximum merged PRs to fetch");
  s_ingest->add_option("--token-env", ingest.token_env, "Environment variable holding an API token");
  s_ingest->add_option("--interval-ms", ingest.interval_ms, "Pause between requests");

  PreprocessArgs pre;
  auto* s_pre = app.add_subcommand("preprocess", "Clean, filter and build source/target pairs");
  s_pre->add_option("--in", pre.in)->required()->check(CLI::ExistingFile);
  s_pre->add_option("--out", pre.out)->required();
  s_pre->add_option("--stats", pre.stats, "Rejection counts as JSON");
  s_pre->add_option("--stats-text", pre.stats_text, "Rejection counts as a text table");

  SplitArgs split;
  auto* s_split = app.add_subcommand("split", "Seeded 80/10/10 train/valid/test split");
  s_split->add_option("--in", split.in)->required()->check(CLI::ExistingFile);
  s_split->add_option("--seed", split.seed)->required();
  s_split->add_option("--out-dir", split.out_dir)->required();

  TrainArgs train;
  auto* s_train = app.add_subcommand("train", "Train the pointer-generator model");
  s_train->add_option("--config", train.config, "JSON config")->required()->check(CLI::ExistingFile);
  s_train->add_option("--phase", train.phase)->check(CLI::IsMember({"ml", "hybrid"}));
  s_train->add_option("--init", train.init, "Starting checkpoint")->check(CLI::ExistingFile);
  s_train->add_option("--vocab", train.vocab, "Vocabulary file (default: <out_dir>/vocab.txt)");
  s_train->add_option("--out-dir", train.out_dir, "Overrides paths.out_dir");
  s_train->add_option("--seed", train.seed, "Overrides train.seed");

  GenerateArgs gen;
  auto* s_gen = app.add_subcommand("generate", "Decode descriptions for processed examples");
  s_gen->add_option("--checkpoint", gen.checkpoint)->required()->check(CLI::ExistingFile);
  s_gen->add_option("--vocab", gen.vocab, "Vocabulary file (default: next to the checkpoint)");
  s_gen->add_option("--input", gen.input)->required()->check(CLI::ExistingFile);
  s_gen->add_option("--out", gen.out)->required();
  s_gen->add_option("--ref-out", gen.ref_out, "Also write the reference descriptions, one per line");
  s_gen->add_option("--method", gen.method)->check(CLI::IsMember({"greedy", "beam"}));
  s_gen->add_option("--beam-width", gen.beam_width)->check(CLI::PositiveNumber);
  s_gen->add_option("--max-len", gen.max_len, "Default: the model's max_tgt_len")->check(CLI::NonNegativeNumber);

  EvaluateArgs eval;
  auto* s_eval = app.add_subcommand("evaluate", "ROUGE-1/2/L of generated lines against references");
  s_eval->add_option("--gen", eval.gen)->required()->check(CLI::ExistingFile);
  s_eval->add_option("--ref", eval.ref)->required()->check(CLI::ExistingFile);
  s_eval->add_option("--out", eval.out, "Write the JSON report here instead of stdout");
  s_eval->add_flag("--no-stem", eval.no_stem, "Disable Porter stemming");

  BaselineArgs base;
  auto* s_base = app.add_subcommand("baseline", "Extractive LeadCM or LexRank baseline");
  s_base->add_option("--method", base.method)->required()->check(CLI::IsMember({"leadcm", "lexrank"}));
  s_base->add_option("--input", base.input)->required()->check(CLI::ExistingFile);
  s_base->add_option("--out", base.out)->required();
  s_base->add_option("--ref-out", base.ref_out, "Also write the reference descriptions, one per line");
  s_base->add_option("--limit", base.limit)->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (s_ingest->parsed()) return cmd_ingest(ingest, out);
    if (s_pre->parsed()) return cmd_preprocess(pre, out);
    if (s_split->parsed()) return cmd_split(split, out);
    if (s_train->parsed()) return cmd_train(train, out, err);
    if (s_gen->parsed()) return cmd_generate(gen, out);
    if (s_eval->parsed()) return cmd_evaluate(eval, out);
    if (s_base->parsed()) return cmd_baseline(base, out);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::Error& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const FetchError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace prdesc
