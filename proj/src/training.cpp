#include "prdesc/training.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "prdesc/decode.hpp"
#include "prdesc/errors.hpp"
#include "prdesc/rouge.hpp"

namespace prdesc {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (!(lr_ml > 0) || !(lr_hybrid > 0)) throw std::invalid_argument("learning rates must be positive");
  if (!(gamma >= 0 && gamma <= 1)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (ml_iters < 0 || hybrid_iters < 0) throw std::invalid_argument("iteration counts must be non-negative");
  if (eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
  if (!(clip_norm > 0)) throw std::invalid_argument("clip_norm must be positive");
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},       {"lr_ml", c.lr_ml},
              {"lr_hybrid", c.lr_hybrid},         {"gamma", c.gamma},
              {"ml_iters", c.ml_iters},           {"hybrid_iters", c.hybrid_iters},
              {"eval_every", c.eval_every},       {"seed", c.seed},
              {"clip_norm", c.clip_norm},         {"adam_beta1", c.adam.beta1},
              {"adam_beta2", c.adam.beta2},       {"adam_eps", c.adam.eps}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_ml = j.value("lr_ml", c.lr_ml);
    c.lr_hybrid = j.value("lr_hybrid", c.lr_hybrid);
    c.gamma = j.value("gamma", c.gamma);
    c.ml_iters = j.value("ml_iters", c.ml_iters);
    c.hybrid_iters = j.value("hybrid_iters", c.hybrid_iters);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.seed = j.value("seed", c.seed);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.adam.beta1 = j.value("adam_beta1", c.adam.beta1);
    c.adam.beta2 = j.value("adam_beta2", c.adam.beta2);
    c.adam.eps = j.value("adam_eps", c.adam.eps);
  } catch (const json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Splits split_dataset(std::span<const ProcessedExample> examples, std::uint64_t seed) {
  if (examples.size() < 10) throw std::invalid_argument("split_dataset: need at least 10 examples");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed + seed_offset::kSplit);
  shuffle(std::span<std::size_t>(order), rng);

  const std::size_t tenth = examples.size() / 10;
  Splits out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const ProcessedExample& ex = examples[order[k]];
    if (k < tenth) {
      out.test.push_back(ex);
    } else if (k < 2 * tenth) {
      out.valid.push_back(ex);
    } else {
      out.train.push_back(ex);
    }
  }
  return out;
}

double rouge_l_reward(const TokenSeq& generated, const TokenSeq& reference) {
  return rouge_l(generated, reference, false).f1 / 100.0;
}

BatchResult batch_gradient(const ModelParams& params, const TrainContext& ctx, std::span<const std::size_t> batch,
                           bool rl, double gamma, Rng* rng, const RewardFn& reward) {
  if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  if (rl && rng == nullptr) throw std::invalid_argument("batch_gradient: sampling needs an rng");
  BatchResult out{ModelParams::zeros(ctx.model), 0, 0};
  const double batch_n = static_cast<double>(batch.size());
  const double ml_scale = rl ? 1.0 - gamma : 1.0;

  for (std::size_t idx : batch) {
    const EncodedExample& ex = ctx.train[idx];
    const std::size_t ext = ex.ext_size(ctx.vocab);

    const SequenceTrace trace =
        forward_sequence(params, ctx.model, ex.src_ids, ex.src_ext_ids, ext, ex.decoder_inputs(), ex.tgt_ext_ids);
    const double l_ml = ml_loss(trace.target_probs());
    out.loss_ml += l_ml / batch_n;
    const double steps = static_cast<double>(trace.targets.size());
    if (ml_scale != 0) {
      const std::vector<double> w(trace.targets.size(), ml_scale / steps / batch_n);
      backward(params, trace, w, out.grads);
    }
    if (!rl) continue;

    const PointerGeneratorDecoder decoder(params, ctx.model, ex, ctx.vocab);
    const auto max_len = static_cast<std::size_t>(ctx.model.max_tgt_len);
    const DecodeResult sample = sample_decode(decoder, max_len, *rng);
    const DecodeResult base = greedy_decode(decoder, max_len);
    const double r_s = reward(ids_to_tokens(sample.ids, ctx.vocab, ex.oov_tokens), ex.target);
    const double r_b = reward(ids_to_tokens(base.ids, ctx.vocab, ex.oov_tokens), ex.target);
    out.loss_rl += rl_loss(r_s, r_b, sample.logprob_sum) / batch_n;

    const double advantage = r_s - r_b;
    if (gamma * advantage == 0) continue;
    // d/dθ of -(advantage) * Σ log p(y^s) is a weighted NLL on the sampled tokens.
    const std::vector<TokenId> targets = sample.with_eos();
    std::vector<TokenId> inputs{Vocab::kBos};
    inputs.insert(inputs.end(), targets.begin(), targets.end() - 1);
    const SequenceTrace sampled =
        forward_sequence(params, ctx.model, ex.src_ids, ex.src_ext_ids, ext, inputs, targets);
    const std::vector<double> w(targets.size(), gamma * advantage / batch_n);
    backward(params, sampled, w, out.grads);
  }
  return out;
}

double validation_score(const ModelParams& params, const ModelConfig& config, const Vocab& vocab,
                        std::span<const EncodedExample> examples) {
  if (examples.empty()) throw std::invalid_argument("validation_score: no examples");
  std::vector<SequencePair> pairs;
  pairs.reserve(examples.size());
  for (const EncodedExample& ex : examples) {
    const PointerGeneratorDecoder decoder(params, config, ex, vocab);
    const DecodeResult out = greedy_decode(decoder, static_cast<std::size_t>(config.max_tgt_len));
    pairs.emplace_back(ids_to_tokens(out.ids, vocab, ex.oov_tokens), ex.target);
  }
  return corpus_rouge(pairs, RougeKind::RougeL, true).f1;
}

BatchStream::BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : order_(n), pos_(n), batch_size_(batch_size), rng_(seed) {
  if (n == 0 || batch_size == 0) throw std::invalid_argument("BatchStream: empty corpus or batch");
}

std::vector<std::size_t> BatchStream::next() {
  if (pos_ >= order_.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order_), rng_);
    pos_ = 0;
  }
  const std::size_t end = std::min(order_.size(), pos_ + batch_size_);
  std::vector<std::size_t> out(order_.begin() + static_cast<long>(pos_), order_.begin() + static_cast<long>(end));
  pos_ = end;
  return out;
}

json to_json(const LogEntry& e) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = json::object();
  j["iter"] = e.iter;
  j["loss_ml"] = opt(e.loss_ml);
  j["loss_rl"] = opt(e.loss_rl);
  j["val_rougeL"] = opt(e.val_rougeL);
  return j;
}

PhaseResult run_phase(const ModelParams& init, const TrainContext& ctx, const TrainConfig& config,
                      const PhaseOptions& phase, const RewardFn& reward,
                      const std::function<void(const LogEntry&)>& log) {
  config.validate();
  if (ctx.train.empty() || ctx.valid.empty()) throw std::invalid_argument("training needs non-empty splits");

  PhaseResult result;
  result.last = init;
  ModelParams& params = result.last;
  AdamState adam = AdamState::zeros(ctx.model);
  BatchStream stream(ctx.train.size(), static_cast<std::size_t>(config.batch_size), phase.shuffle_seed);
  Rng sampler(phase.sampling_seed);

  const auto emit = [&](const LogEntry& e) {
    if (log) log(e);
  };

  result.best = params;
  result.best_score = validation_score(params, ctx.model, ctx.vocab, ctx.valid);
  emit(LogEntry{0, std::nullopt, std::nullopt, result.best_score});

  for (int it = 1; it <= phase.iters; ++it) {
    LogEntry entry{it, std::nullopt, std::nullopt, std::nullopt};
    try {
      const std::vector<std::size_t> batch = stream.next();
      BatchResult br = batch_gradient(params, ctx, batch, phase.rl, phase.gamma, &sampler, reward);
      if (!std::isfinite(br.loss_ml) || !std::isfinite(br.loss_rl)) {
        throw DivergenceError("loss is not finite at iteration " + std::to_string(it));
      }
      entry.loss_ml = br.loss_ml;
      if (phase.rl) entry.loss_rl = br.loss_rl;
      check_finite(br.grads);
      clip_global_norm(br.grads, config.clip_norm);
      ModelParams next = params;
      adam_step(next, br.grads, adam, phase.lr, config.adam);
      if (!next.all_finite()) throw DivergenceError("parameters are not finite at iteration " + std::to_string(it));
      params = std::move(next);
    } catch (const DivergenceError& e) {
      result.diverged = true;
      result.divergence = e.what();
      emit(entry);
      break;
    }
    if (it % config.eval_every == 0 || it == phase.iters) {
      const double score = validation_score(params, ctx.model, ctx.vocab, ctx.valid);
      entry.val_rougeL = score;
      if (score > result.best_score) {
        result.best = params;
        result.best_score = score;
        result.best_iter = it;
      }
    }
    emit(entry);
  }
  return result;
}

PhaseResult train_ml(const ModelParams& init, const TrainContext& ctx, const TrainConfig& config,
                     const std::function<void(const LogEntry&)>& log) {
  PhaseOptions phase;
  phase.iters = config.ml_iters;
  phase.lr = config.lr_ml;
  phase.shuffle_seed = config.seed + seed_offset::kMlShuffle;
  return run_phase(init, ctx, config, phase, rouge_l_reward, log);
}

PhaseResult train_hybrid(const ModelParams& start, const TrainContext& ctx, const TrainConfig& config,
                         const RewardFn& reward, const std::function<void(const LogEntry&)>& log) {
  PhaseOptions phase;
  phase.iters = config.hybrid_iters;
  phase.lr = config.lr_hybrid;
  phase.rl = true;
  phase.gamma = config.gamma;
  phase.shuffle_seed = config.seed + seed_offset::kHybridShuffle;
  phase.sampling_seed = config.seed + seed_offset::kSampling;
  return run_phase(start, ctx, config, phase, reward, log);
}

}  // namespace prdesc
