// Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "../tools/cli.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "prdesc/baselines.hpp"
#include "prdesc/decode.hpp"
#include "prdesc/ingest.hpp"
#include "prdesc/preprocess.hpp"
#include "prdesc/rouge.hpp"
#include "prdesc/training.hpp"
#include "support.hpp"

using namespace prdesc;
namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records failed checks without stopping, so each line reports everything.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  void note(const std::string& s) {
    if (!notes_.empty()) notes_ += ", ";
    notes_ += s;
  }
  Outcome outcome() const { return {pass_, pass_ ? notes_ : failures_ + (notes_.empty() ? "" : " [" + notes_ + "]")}; }

 private:
  bool pass_ = true;
  std::string failures_, notes_;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

TokenSeq toks(std::string_view s) {
  TokenSeq out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

bool repeats_trigram(const TokenSeq& t) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (std::size_t k = 0; k + 2 < t.size(); ++k) {
    if (!seen.emplace(t[k], t[k + 1], t[k + 2]).second) return true;
  }
  return false;
}

// Every beam-search output produced anywhere in the suite.
std::vector<TokenSeq> g_beam_outputs;

std::vector<EncodedExample> encode_corpus(const std::vector<ProcessedExample>& c, const Vocab& v) {
  std::vector<EncodedExample> out;
  for (const auto& e : c) out.push_back(encode_with_extension(e, v));
  return out;
}

void collect_beam_outputs(const ModelParams& p, const ModelConfig& cfg, const Vocab& vocab,
                          const std::vector<EncodedExample>& examples) {
  for (const auto& ex : examples) {
    const PointerGeneratorDecoder dec(p, cfg, ex, vocab);
    const DecodeResult r = beam_search(dec, {4, static_cast<std::size_t>(cfg.max_tgt_len), true});
    g_beam_outputs.push_back(ids_to_tokens(r.ids, vocab, ex.oov_tokens));
  }
}

// Largest per-group relative error between `analytic` and central differences
// of `loss` with step h.
double max_group_error(const ModelParams& params, const ModelParams& analytic,
                       const std::function<double(const ModelParams&)>& loss, double h, std::string* worst) {
  ModelParams probe = params;
  std::vector<std::string> names;
  probe.visit([&](std::string_view n, const auto&) { names.emplace_back(n); });
  double max_err = 0;
  for (const std::string& name : names) {
    double* data = nullptr;
    const double* grad = nullptr;
    Eigen::Index size = 0;
    probe.visit([&](std::string_view n, auto& t) {
      if (n == name) {
        data = t.data();
        size = t.size();
      }
    });
    analytic.visit([&](std::string_view n, const auto& t) {
      if (n == name) grad = t.data();
    });
    double diff = 0, na = 0, nn = 0;
    for (Eigen::Index k = 0; k < size; ++k) {
      const double orig = data[k];
      data[k] = orig + h;
      const double up = loss(probe);
      data[k] = orig - h;
      const double down = loss(probe);
      data[k] = orig;
      const double numeric = (up - down) / (2 * h);
      diff += (grad[k] - numeric) * (grad[k] - numeric);
      na += grad[k] * grad[k];
      nn += numeric * numeric;
    }
    const double denom = std::sqrt(std::max(na, nn));
    const double err = denom < 1e-10 ? std::sqrt(diff) : std::sqrt(diff) / denom;
    if (err > max_err) {
      max_err = err;
      if (worst) *worst = name;
    }
  }
  return max_err;
}

// ---------------------------------------------------------------------------

Outcome rouge_oracle_equivalence() {
  Checker c;
  Rng rng(2024);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const TokenSeq gen = testing::random_tokens(rng, 12, 5);
    const TokenSeq ref = testing::random_tokens(rng, 12, 5);
    const std::size_t l = oracle::lcs(gen, ref);
    const RougeScore rl = rouge_l(gen, ref, false);
    bool ok = lcs_length(gen, ref) == l && rl.recall == oracle::pct(l, ref.size()) &&
              rl.precision == oracle::pct(l, gen.size());
    if (gen.size() <= 10) ok = ok && oracle::lcs_exhaustive(gen, ref) == l;
    for (int n : {1, 2}) {
      const auto un = static_cast<std::size_t>(n);
      const std::size_t m = oracle::clipped_matches(gen, ref, un);
      const RougeScore s = rouge_n(gen, ref, n, false);
      ok = ok && s.recall == oracle::pct(m, oracle::gram_count(ref, un)) &&
           s.precision == oracle::pct(m, oracle::gram_count(gen, un));
    }
    if (!ok) ++mismatches;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " of 200 pairs disagree with the oracle");
  c.note("200 pairs, 0 mismatches");
  return c.outcome();
}

Outcome rouge_word_order() {
  Checker c;
  const TokenSeq gen = toks("on the mat sat the cat");
  const TokenSeq ref = toks("the cat sat on the mat");
  const double r1 = rouge_n(gen, ref, 1, true).f1;
  const double rl = rouge_l(gen, ref, true).f1;
  const std::size_t l = oracle::lcs(gen, ref);
  c.expect(r1 == 100.0, "ROUGE-1 F1 " + fmt(r1));
  c.expect(std::abs(rl - 50.0) <= 0.01, "ROUGE-L F1 " + fmt(rl));
  c.expect(l == 3, "oracle LCS " + std::to_string(l));
  c.note("ROUGE-1 F1 " + fmt(r1) + ", ROUGE-L F1 " + fmt(rl) + ", LCS " + std::to_string(l));
  return c.outcome();
}

Outcome distribution_invariants() {
  Checker c;
  Rng rng(7);
  int steps = 0;
  double worst = 0;
  bool nonneg = true, pgen_ok = true;
  while (steps < 1000) {
    const int vocab = 5 + static_cast<int>(uniform_index(rng, 12));
    const ModelConfig cfg = testing::tiny_config(2 + static_cast<int>(uniform_index(rng, 6)),
                                                 2 + static_cast<int>(uniform_index(rng, 6)), vocab, 12);
    const ModelParams p = testing::random_params(cfg, rng(), 0.2 + 2.0 * uniform01(rng));
    const std::size_t len = 1 + uniform_index(rng, 12);
    std::vector<TokenId> src, ext;
    int oov = 0;
    for (std::size_t i = 0; i < len; ++i) {
      if (uniform_index(rng, 4) == 0) {
        src.push_back(Vocab::kUnk);
        ext.push_back(vocab + oov++);
      } else {
        const auto t = static_cast<TokenId>(4 + uniform_index(rng, static_cast<std::uint64_t>(vocab - 4)));
        src.push_back(t);
        ext.push_back(t);
      }
    }
    const std::size_t ext_size = static_cast<std::size_t>(vocab + oov);
    const EncoderStates enc = encode(src, p, cfg);
    LstmState state = enc.s0;
    TokenId input = Vocab::kBos;
    for (int j = 0; j < 5 && steps < 1000; ++j, ++steps) {
      const StepOutput out = decoder_step(p, enc, state, input, ext, ext_size);
      worst = std::max({worst, std::abs(out.attn.weights.sum() - 1), std::abs(out.p_vocab.sum() - 1),
                        std::abs(out.p_final.sum() - 1)});
      nonneg = nonneg && out.p_final.minCoeff() >= 0.0;
      pgen_ok = pgen_ok && out.p_gen >= 0.0 && out.p_gen <= 1.0;
      state = out.state;
      input = static_cast<TokenId>(uniform_index(rng, ext_size));
    }
  }
  c.expect(worst <= 1e-6, "max |sum - 1| = " + fmt(worst));
  c.expect(nonneg, "negative p_final entry");
  c.expect(pgen_ok, "p_gen outside [0, 1]");
  c.note(std::to_string(steps) + " steps, max |sum - 1| " + fmt(worst, 3));
  return c.outcome();
}

Outcome oov_copy() {
  Checker c;
  std::vector<std::string> words{std::string(Vocab::kPadToken), std::string(Vocab::kUnkToken),
                                 std::string(Vocab::kBosToken), std::string(Vocab::kEosToken)};
  for (const char* w : {"fix", "the", "in", "parser", "add"}) words.emplace_back(w);
  const Vocab vocab(words);
  const ModelConfig cfg = testing::tiny_config(6, 6, static_cast<int>(vocab.size()), 10, 10);
  ModelParams p = testing::random_params(cfg, 5, 0.3);
  p.gen_b(0) = -8;  // favour copying
  const ProcessedExample ex{"oov", toks("fix frobnicator"), toks("frobnicator")};
  const EncodedExample enc = encode_with_extension(ex, vocab);
  c.expect(!vocab.contains("frobnicator"), "target token is in the vocabulary");
  c.expect(enc.tgt_ext_ids.front() >= static_cast<TokenId>(vocab.size()), "target not mapped to an extended id");
  const SequenceTrace trace = forward_sequence(p, cfg, enc.src_ids, enc.src_ext_ids, enc.ext_size(vocab),
                                               enc.decoder_inputs(), enc.tgt_ext_ids);
  const double prob = trace.target_probs().front();
  const double p_vocab_unk = trace.steps.front().p_vocab(Vocab::kUnk);
  c.expect(prob > 0, "p_final(target) = 0");
  const PointerGeneratorDecoder dec(p, cfg, enc, vocab);
  const TokenSeq out = ids_to_tokens(greedy_decode(dec, 5).ids, vocab, enc.oov_tokens);
  c.expect(!out.empty() && out.front() == "frobnicator", "greedy output '" + detokenize(out) + "'");
  c.note("p_final(oov) " + fmt(prob) + " (p_vocab(unk) " + fmt(p_vocab_unk, 3) + "), greedy '" + detokenize(out) + "'");
  return c.outcome();
}

Outcome gradient_check() {
  Checker c;
  const ModelConfig cfg = testing::tiny_config(8, 8, 20, 6, 5);
  const ModelParams p = testing::random_params(cfg, 31, 0.5);
  const std::vector<TokenId> src{5, 7, 1, 9, 1, 12};
  const std::vector<TokenId> ext{5, 7, 20, 9, 21, 12};
  const std::size_t ext_size = 22;
  const std::vector<TokenId> inputs{Vocab::kBos, 7, 20, 13, 21};
  const std::vector<TokenId> targets{7, 20, 13, 21, Vocab::kEos};

  // Pure ML loss: NLL / T.
  const std::vector<double> ml_w(5, 1.0 / 5);
  auto ml = [&](const ModelParams& q) {
    return weighted_nll(forward_sequence(q, cfg, src, ext, ext_size, inputs, targets), ml_w);
  };
  ModelParams g_ml = ModelParams::zeros(cfg);
  backward(p, forward_sequence(p, cfg, src, ext, ext_size, inputs, targets), ml_w, g_ml);
  std::string worst_ml;
  const double e_ml = max_group_error(p, g_ml, ml, 1e-3, &worst_ml);

  // Hybrid loss with gamma = 0.9984 and a fixed sampled sequence with
  // rewards treated as constants: gamma * -(r_s - r_b) sum log p(y^s) +
  // (1 - gamma) * NLL / T.
  const double gamma = 0.9984;
  const double r_s = 0.2, r_b = 0.6;
  const std::vector<TokenId> sample{9, 21, 4, Vocab::kEos};
  const std::vector<TokenId> sample_in{Vocab::kBos, 9, 21, 4};
  const std::vector<double> rl_w(4, gamma * (r_s - r_b));
  std::vector<double> ml_scaled(5, (1 - gamma) / 5);
  auto hybrid = [&](const ModelParams& q) {
    const auto ref = forward_sequence(q, cfg, src, ext, ext_size, inputs, targets);
    const auto smp = forward_sequence(q, cfg, src, ext, ext_size, sample_in, sample);
    const double l_ml = ml_loss(ref.target_probs());
    double logp = 0;
    for (double x : smp.target_probs()) logp += std::log(x);
    return hybrid_loss(rl_loss(r_s, r_b, logp), l_ml, gamma);
  };
  ModelParams g_hy = ModelParams::zeros(cfg);
  backward(p, forward_sequence(p, cfg, src, ext, ext_size, inputs, targets), ml_scaled, g_hy);
  backward(p, forward_sequence(p, cfg, src, ext, ext_size, sample_in, sample), rl_w, g_hy);
  std::string worst_hy;
  const double e_hy = max_group_error(p, g_hy, hybrid, 1e-3, &worst_hy);

  c.expect(e_ml < 1e-4, "ML max group rel. error " + fmt(e_ml) + " in " + worst_ml);
  c.expect(e_hy < 1e-4, "hybrid max group rel. error " + fmt(e_hy) + " in " + worst_hy);
  std::size_t groups = 0;
  p.visit([&](std::string_view, const auto&) { ++groups; });
  c.note(std::to_string(groups) + " groups, " + std::to_string(p.parameter_count()) + " params; max rel. error ML " +
         fmt(e_ml, 3) + ", hybrid " + fmt(e_hy, 3));
  return c.outcome();
}

Outcome toy_overfit() {
  Checker c;
  const auto corpus = testing::copy_corpus(20, 1);
  const Vocab vocab = build_vocab(corpus);
  const ModelConfig cfg = testing::tiny_config(16, 16, static_cast<int>(vocab.size()), 10, 10);
  const auto enc = encode_corpus(corpus, vocab);
  const TrainContext ctx{cfg, vocab, enc, enc};
  TrainConfig tc;
  tc.batch_size = 4;
  tc.lr_ml = 1e-3;
  tc.ml_iters = 3000;
  tc.eval_every = 500;
  tc.seed = 1;
  const PhaseResult r = train_ml(ModelParams::initialize(cfg, tc.seed + 2), ctx, tc);
  c.expect(!r.diverged, "diverged: " + r.divergence);
  double loss = 0;
  int exact = 0;
  for (const auto& ex : enc) {
    const auto trace = forward_sequence(r.last, cfg, ex.src_ids, ex.src_ext_ids, ex.ext_size(vocab),
                                        ex.decoder_inputs(), ex.tgt_ext_ids);
    loss += ml_loss(trace.target_probs()) / static_cast<double>(enc.size());
    const PointerGeneratorDecoder dec(r.last, cfg, ex, vocab);
    if (ids_to_tokens(greedy_decode(dec, 10).ids, vocab, ex.oov_tokens) == ex.target) ++exact;
  }
  collect_beam_outputs(r.last, cfg, vocab, enc);
  c.expect(loss < 0.05, "per-token loss " + fmt(loss));
  c.expect(exact >= 18, std::to_string(exact) + "/20 exact");
  c.note("3000 iterations, per-token loss " + fmt(loss, 3) + ", " + std::to_string(exact) + "/20 exact");
  return c.outcome();
}

Outcome scst_sanity() {
  Checker c;
  // Zero advantage: a constant reward leaves only the (1 - gamma) ML term.
  {
    const auto corpus = testing::copy_corpus(8, 4);
    const Vocab vocab = build_vocab(corpus);
    const ModelConfig cfg = testing::tiny_config(8, 8, static_cast<int>(vocab.size()), 10, 10);
    const auto enc = encode_corpus(corpus, vocab);
    const TrainContext ctx{cfg, vocab, enc, enc};
    const ModelParams p = ModelParams::initialize(cfg, 9);
    const std::vector<std::size_t> batch{0, 3, 5, 6};
    const double gamma = 0.9984;
    Rng rng(1);
    const BatchResult ml = batch_gradient(p, ctx, batch, false, gamma, nullptr, rouge_l_reward);
    const BatchResult hy =
        batch_gradient(p, ctx, batch, true, gamma, &rng, [](const TokenSeq&, const TokenSeq&) { return 0.3; });
    ModelParams diff = hy.grads;
    diff.add_scaled(ml.grads, -(1 - gamma));
    double worst = 0;
    diff.visit([&](std::string_view, const auto& t) { worst = std::max(worst, t.cwiseAbs().maxCoeff()); });
    c.expect(worst <= 1e-12, "zero-advantage update differs by " + fmt(worst));
    c.note("zero-advantage max diff " + fmt(worst, 3));
  }
  // Toy copy task over five seeds.
  std::vector<double> deltas;
  std::string per_seed;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto train = testing::copy_corpus(40, s, 3, 6);
    const auto valid = testing::copy_corpus(10, s + 1000, 3, 6);
    const auto test = testing::copy_corpus(30, s + 2000, 3, 6);
    const Vocab vocab = build_vocab(train);
    const ModelConfig cfg = testing::tiny_config(16, 16, static_cast<int>(vocab.size()), 10, 10);
    const auto etr = encode_corpus(train, vocab);
    const auto eva = encode_corpus(valid, vocab);
    const auto ete = encode_corpus(test, vocab);
    const TrainContext ctx{cfg, vocab, etr, eva};
    TrainConfig tc;
    tc.batch_size = 4;
    tc.ml_iters = 300;
    tc.hybrid_iters = 600;
    tc.lr_hybrid = 1e-3;
    tc.eval_every = 50;
    tc.seed = s;
    const PhaseResult ml = train_ml(ModelParams::initialize(cfg, s + 2), ctx, tc);
    const PhaseResult hy = train_hybrid(ml.best, ctx, tc);
    c.expect(!ml.diverged && !hy.diverged, "seed " + std::to_string(s) + " diverged");
    const double a = validation_score(ml.best, cfg, vocab, ete);
    const double b = validation_score(hy.best, cfg, vocab, ete);
    deltas.push_back(b - a);
    per_seed += (per_seed.empty() ? "" : " ") + fmt(a, 4) + "->" + fmt(b, 4);
    collect_beam_outputs(hy.best, cfg, vocab, ete);
  }
  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[2];
  c.expect(median >= -0.5, "median hybrid - ML = " + fmt(median));
  c.note("test ROUGE-L F1 ML->hybrid: " + per_seed + "; median delta " + fmt(median, 3));
  return c.outcome();
}

Outcome leadcm_spot_check() {
  Checker c;
  const TokenSeq source = toks(
      "initial tomcat 0 support . [cm-sep] tomcat 0 support in the s-ramp installer . [cm-sep] fixes for tomcat "
      "support . [para-sep] eat the error and try the next option eat the error and try the next option this filter "
      "can be used to supply a source of credentials that can be used when logging in to the jcr repository ( "
      "modeshape ) .");
  const TokenSeq out = lead_cm(source);
  const std::string expected =
      "initial tomcat 0 support . tomcat 0 support in the s-ramp installer . fixes for tomcat support .";
  c.expect(detokenize(out) == expected, "got '" + detokenize(out) + "'");
  c.note(std::to_string(out.size()) + " tokens");
  return c.outcome();
}

Outcome lexrank_property() {
  Checker c;
  const std::vector<std::string> fixtures{
      "add retry logic . [para-sep] close the stream on failure . update the readme . close the stream on failure .",
      "refactor the cache layer . [cm-sep] bump version . [para-sep] returns null if missing . parses the header . "
      "returns null if missing .",
  };
  const std::vector<std::pair<std::size_t, std::size_t>> duplicate_at{{1, 3}, {2, 4}};
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const auto order = lexrank_order(build_sentence_graph(split_source_sentences(toks(fixtures[f]))));
    const std::set<std::size_t> top(order.begin(), order.begin() + 2);
    c.expect(top == std::set<std::size_t>{duplicate_at[f].first, duplicate_at[f].second},
             "fixture " + std::to_string(f) + ": duplicates not ranked first");
  }
  Rng rng(3);
  double worst_sum = 0;
  for (int k = 0; k < 200; ++k) {
    const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 8));
    MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = uniform01(rng);
    }
    worst_sum = std::max(worst_sum, std::abs(pagerank(m).sum() - 1));
  }
  c.expect(worst_sum <= 1e-9, "pagerank sum off by " + fmt(worst_sum));
  std::vector<MatrixXd> three;
  MatrixXd chain(3, 3), tri(3, 3), star(3, 3), weighted(3, 3);
  chain << 1, 1, 0, 1, 1, 1, 0, 1, 1;
  tri << 1, 1, 1, 1, 1, 1, 1, 1, 1;
  star << 0, 1, 1, 1, 0, 0, 1, 0, 0;
  weighted << 1, 0.2, 0.7, 0.2, 1, 0.1, 0.7, 0.1, 1;
  double worst_oracle = 0;
  for (const MatrixXd& m : {chain, tri, star, weighted}) {
    worst_oracle = std::max(worst_oracle, (pagerank(m) - oracle::pagerank(m, 0.85, 1e-6, 100)).cwiseAbs().maxCoeff());
  }
  c.expect(worst_oracle <= 1e-6, "oracle mismatch " + fmt(worst_oracle));
  const VectorXd ch = pagerank(chain);
  c.expect(ch(1) > ch(0) && ch(1) > ch(2), "chain middle not highest");
  c.note("max |sum - 1| " + fmt(worst_sum, 3) + ", max oracle diff " + fmt(worst_oracle, 3));
  return c.outcome();
}

Outcome preprocessing_spot_checks() {
  Checker c;
  c.expect(normalize_token("1.2.3") == "version", "1.2.3");
  c.expect(normalize_token("42") == "0", "42");
  c.expect(normalize_token("3f2a9c1") == "sha", "3f2a9c1");
  c.expect(clean_text("Bumped to 1.2.3 after 42 runs, see 3f2a9c1e.").flatten() ==
               toks("bumped to version after 0 runs , see sha ."),
           "clean_text normalization");
  c.expect(clean_text("Details at https://example.com/x . Fixed the parser .").flatten() == toks("fixed the parser ."),
           "URL sentence kept");
  auto commits = [](int n) {
    std::vector<Commit> out;
    for (int i = 0; i < n; ++i) out.push_back({i, "change number " + std::string(1, static_cast<char>('a' + i)), ""});
    return out;
  };
  const std::string desc = "add an option to skip flaky tests";
  auto reason = [](const PullRequest& pr) {
    const auto r = filter_pr(pr);
    return std::holds_alternative<RejectReason>(r) ? std::string(to_string(std::get<RejectReason>(r))) : "accepted";
  };
  c.expect(reason({"a", "fix the bug", commits(3)}) == "trivial_desc", "4-token description");
  c.expect(reason({"b", desc, commits(1)}) == "too_few_valid_commits", "1 commit");
  c.expect(reason({"c", desc, commits(21)}) == "too_many_valid_commits", "21 commits");
  c.expect(reason({"d", desc, commits(2)}) == "accepted", "2 commits");

  std::vector<PullRequest> corpus = testing::toy_pr_corpus(300, 9);
  corpus.push_back({"e", desc, commits(21)});
  corpus.push_back({"f", "", commits(3)});
  PreprocessStats stats;
  const auto accepted = preprocess_corpus(corpus, &stats);
  std::size_t sum = stats.accepted;
  for (std::size_t r : stats.rejected) sum += r;
  c.expect(sum == corpus.size() && stats.total == corpus.size() && accepted.size() == stats.accepted,
           "stats do not partition the corpus");
  c.note("partition " + std::to_string(stats.accepted) + " accepted + " + std::to_string(sum - stats.accepted) +
         " rejected = " + std::to_string(corpus.size()));
  return c.outcome();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) std::cerr << "prdesc " << args.front() << ": " << err.str();
  return code;
}

// ingest -> preprocess -> split -> train ml -> train hybrid -> generate ->
// evaluate, plus a baseline. Returns the artifacts to compare.
std::map<std::string, std::string> run_pipeline(const fs::path& dir, bool& ok) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream raw(dir / "raw.jsonl", std::ios::binary);
    write_pr_corpus(raw, testing::toy_pr_corpus(120, 5));
  }
  const nlohmann::json cfg{
      {"model", {{"emb_dim", 12}, {"hidden_dim", 12}, {"vocab_size", 1000}, {"max_src_len", 150}, {"max_tgt_len", 20}}},
      {"train", {{"batch_size", 4}, {"ml_iters", 60}, {"hybrid_iters", 20}, {"eval_every", 20}, {"lr_ml", 5e-3}}},
      {"paths", {{"train", "data/train.jsonl"}, {"valid", "data/valid.jsonl"}, {"out_dir", "run"}}}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  const std::string d = dir.string() + "/";
  ok = cli({"ingest", "--in", d + "raw.jsonl", "--out", d + "corpus.jsonl"}) == 0 &&
       cli({"preprocess", "--in", d + "corpus.jsonl", "--out", d + "proc.jsonl", "--stats", d + "stats.json"}) == 0 &&
       cli({"split", "--in", d + "proc.jsonl", "--seed", "17", "--out-dir", d + "data"}) == 0 &&
       cli({"train", "--config", d + "config.json", "--phase", "ml", "--seed", "17"}) == 0 &&
       cli({"train", "--config", d + "config.json", "--phase", "hybrid", "--seed", "17", "--init",
            d + "run/ml_best.ckpt"}) == 0 &&
       cli({"generate", "--checkpoint", d + "run/hybrid_best.ckpt", "--input", d + "data/test.jsonl", "--out",
            d + "gen.txt", "--ref-out", d + "ref.txt"}) == 0 &&
       cli({"evaluate", "--gen", d + "gen.txt", "--ref", d + "ref.txt", "--out", d + "scores.json"}) == 0 &&
       cli({"baseline", "--method", "lexrank", "--input", d + "data/test.jsonl", "--out", d + "lexrank.txt"}) == 0;
  std::map<std::string, std::string> out;
  for (const char* f : {"corpus.jsonl", "proc.jsonl", "stats.json", "data/train.jsonl", "data/valid.jsonl",
                        "data/test.jsonl", "run/vocab.txt", "run/ml_best.ckpt", "run/ml_log.jsonl",
                        "run/hybrid_best.ckpt", "run/hybrid_log.jsonl", "gen.txt", "scores.json", "lexrank.txt"}) {
    out[f] = slurp(dir / f);
  }
  return out;
}

Outcome determinism() {
  Checker c;
  const fs::path base = fs::temp_directory_path() / "prdesc_acceptance";
  bool ok1 = false, ok2 = false;
  const auto a = run_pipeline(base / "run1", ok1);
  const auto b = run_pipeline(base / "run2", ok2);
  c.expect(ok1 && ok2, "a pipeline step failed");
  std::size_t bytes = 0;
  for (const auto& [name, content] : a) {
    c.expect(!content.empty(), name + " is empty");
    c.expect(content == b.at(name), name + " differs between runs");
    bytes += content.size();
  }
  std::istringstream gen(a.at("gen.txt"));
  for (std::string line; std::getline(gen, line);) g_beam_outputs.push_back(toks(line));
  c.note(std::to_string(a.size()) + " artifacts, " + std::to_string(bytes) + " bytes identical");
  return c.outcome();
}

Outcome trigram_blocking() {
  Checker c;
  // Random untrained models tend to loop, which exercises the blocking.
  const std::vector<std::string> words{"[PAD]", "[UNK]", "[BOS]", "[EOS]", "a", "b", "c", "d", "e"};
  const Vocab vocab(words);
  const ModelConfig cfg = testing::tiny_config(6, 6, static_cast<int>(vocab.size()), 10, 30);
  Rng rng(12);
  for (int k = 0; k < 40; ++k) {
    const ModelParams p = testing::random_params(cfg, 100 + static_cast<std::uint64_t>(k), 1.5);
    const ProcessedExample ex{"r", testing::random_tokens(rng, 8, 6, 1), toks("a")};
    collect_beam_outputs(p, cfg, vocab, {encode_with_extension(ex, vocab)});
  }
  std::size_t repeated = 0;
  for (const TokenSeq& t : g_beam_outputs) repeated += repeats_trigram(t) ? 1 : 0;
  c.expect(repeated == 0, std::to_string(repeated) + " outputs repeat a trigram");

  // a b c a b c ... under greedy; beam search must leave the loop.
  const testing::TableModel loop(8, [](const std::vector<TokenId>& in) {
    const TokenId last = in.back();
    VectorXd p = VectorXd::Zero(8);
    if (last == 7) {
      p(Vocab::kEos) = 0.6;
      p(4) = 0.4;
      return p;
    }
    p(last == Vocab::kBos || last == 6 ? 4 : last + 1) = 0.9;
    p(Vocab::kEos) = 0.04;
    p(7) = 0.06;
    return p;
  });
  const DecodeResult greedy = greedy_decode(loop, 12);
  const DecodeResult unblocked = beam_search(loop, {4, 12, false});
  const DecodeResult blocked = beam_search(loop, {4, 12, true});
  c.expect(has_repeated_trigram(greedy.ids), "greedy does not loop");
  c.expect(has_repeated_trigram(unblocked.with_eos()), "unblocked beam does not loop");
  c.expect(!has_repeated_trigram(blocked.with_eos()), "blocked beam repeats a trigram");
  auto show = [](const std::vector<TokenId>& ids) {
    std::string s;
    for (TokenId t : ids) s += t == 7 ? 'x' : static_cast<char>('a' + (t - 4));
    return s;
  };
  c.note(std::to_string(g_beam_outputs.size()) + " beam outputs, 0 repeats; loop " + show(unblocked.ids) + " -> " +
         show(blocked.ids));
  return c.outcome();
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double limit_s;  // wall-clock budget
  };
  constexpr double kNone = 1e9;
  const std::vector<Criterion> criteria{
      {"ROUGE oracle equivalence", rouge_oracle_equivalence, 5},
      {"ROUGE word-order check", rouge_word_order, kNone},
      {"Distribution invariants", distribution_invariants, kNone},
      {"OOV copy property", oov_copy, 1},
      {"Gradient check", gradient_check, 60},
      {"Toy overfit", toy_overfit, 300},
      {"SCST sanity", scst_sanity, 600},
      {"LeadCM spot check", leadcm_spot_check, kNone},
      {"LexRank duplicate-sentence property", lexrank_property, kNone},
      {"Preprocessing spot checks", preprocessing_spot_checks, kNone},
      {"Determinism", determinism, kNone},
      // Last, so it sees the beam outputs of every earlier criterion.
      {"Trigram blocking", trigram_blocking, kNone},
  };
  int failed = 0;
  for (const auto& [name, run, limit] : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (o.pass && secs > limit) o = {false, "took " + fmt(secs) + " s, limit " + fmt(limit) + " s; " + o.detail};
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << fmt(secs, 3) << " s): " << o.detail << std::endl;
  }
  const double total = std::chrono::duration<double>(Clock::now() - start).count();
  if (total > 1200) {
    ++failed;
    std::cout << "FAIL suite time over 20 min" << std::endl;
  }
  std::cout << "total " << fmt(total, 4) << " s; " << (criteria.size() - static_cast<std::size_t>(failed)) << "/"
            << criteria.size() << " passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
