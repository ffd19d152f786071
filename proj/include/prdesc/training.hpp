#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "prdesc/adam.hpp"
#include "prdesc/model.hpp"
#include "prdesc/rng.hpp"
#include "prdesc/vocab.hpp"

namespace prdesc {

struct TrainConfig {
  int batch_size = 8;
  double lr_ml = 1e-3;
  double lr_hybrid = 1e-4;
  double gamma = 0.9984;
  int ml_iters = 25000;
  int hybrid_iters = 28000;
  int eval_every = 1000;
  std::uint64_t seed = 0;
  double clip_norm = 2.0;
  AdamOptions adam;

  /// Throws std::invalid_argument. Iteration counts may be zero.
  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct Splits {
  std::vector<ProcessedExample> train;
  std::vector<ProcessedExample> valid;
  std::vector<ProcessedExample> test;
};

/// Seeded shuffle, then test = first floor(N/10), valid = next floor(N/10),
/// train = the rest. Throws std::invalid_argument for N < 10.
Splits split_dataset(std::span<const ProcessedExample> examples, std::uint64_t seed);

/// Reward of a generated sequence against its reference, in [0, 1].
using RewardFn = std::function<double(const TokenSeq& generated, const TokenSeq& reference)>;

/// ROUGE-L F1 / 100 without stemming.
double rouge_l_reward(const TokenSeq& generated, const TokenSeq& reference);

/// Everything a training step reads besides the parameters.
struct TrainContext {
  const ModelConfig& model;
  const Vocab& vocab;
  std::span<const EncodedExample> train;
  std::span<const EncodedExample> valid;
};

struct BatchResult {
  ModelParams grads;
  double loss_ml = 0;  // batch means
  double loss_rl = 0;
};

/// Gradient of the batch-mean hybrid loss gamma * l_rl + (1 - gamma) * l_ml.
/// With `rl` false only the ML term is used (gamma is ignored) and `rng` is not
/// touched. Samples come from `rng`; baselines are greedy decodes.
BatchResult batch_gradient(const ModelParams& params, const TrainContext& ctx, std::span<const std::size_t> batch,
                           bool rl, double gamma, Rng* rng, const RewardFn& reward);

/// Corpus ROUGE-L F1 (stemmed) of greedy decodes on `examples`.
double validation_score(const ModelParams& params, const ModelConfig& config, const Vocab& vocab,
                        std::span<const EncodedExample> examples);

/// Sequential passes over a seeded reshuffle of [0, n) per epoch. The last
/// batch of an epoch may be short.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_;
  std::size_t batch_size_;
  Rng rng_;
};

struct LogEntry {
  int iter = 0;
  std::optional<double> loss_ml;
  std::optional<double> loss_rl;
  std::optional<double> val_rougeL;
};

nlohmann::json to_json(const LogEntry& e);

struct PhaseOptions {
  int iters = 0;
  double lr = 1e-3;
  bool rl = false;
  double gamma = 0;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t sampling_seed = 0;
};

struct PhaseResult {
  ModelParams best;
  int best_iter = 0;
  double best_score = 0;
  ModelParams last;  // parameters after the final completed iteration
  bool diverged = false;
  std::string divergence;
};

/// Runs one training phase from `init`. Validation is scored at iteration 0,
/// every eval_every iterations and after the last one; the best score wins,
/// ties to the earlier iteration. A non-finite loss or gradient stops the
/// phase with `diverged` set and the best checkpoint so far.
PhaseResult run_phase(const ModelParams& init, const TrainContext& ctx, const TrainConfig& config,
                      const PhaseOptions& phase, const RewardFn& reward,
                      const std::function<void(const LogEntry&)>& log = {});

/// ML phase with the configured seeds and learning rate.
PhaseResult train_ml(const ModelParams& init, const TrainContext& ctx, const TrainConfig& config,
                     const std::function<void(const LogEntry&)>& log = {});

/// Hybrid phase continuing from `start`.
PhaseResult train_hybrid(const ModelParams& start, const TrainContext& ctx, const TrainConfig& config,
                         const RewardFn& reward = rouge_l_reward,
                         const std::function<void(const LogEntry&)>& log = {});

}  // namespace prdesc
