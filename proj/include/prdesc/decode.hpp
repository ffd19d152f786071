#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "prdesc/model.hpp"
#include "prdesc/rng.hpp"
#include "prdesc/vocab.hpp"

namespace prdesc {

/// Decoder state carried between steps. The neural decoder uses `lstm`;
/// simple table-driven models may key on `inputs` instead.
struct DecodeState {
  LstmState lstm;
  std::vector<TokenId> inputs;
};

/// Anything that yields a distribution over extended ids one step at a time.
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual std::size_t ext_size() const = 0;
  virtual DecodeState initial_state() const = 0;
  /// Feeds `input` and returns p_final for the next token.
  virtual Eigen::VectorXd step(DecodeState& state, TokenId input) const = 0;
};

/// The pointer-generator decoder over one encoded source.
class PointerGeneratorDecoder final : public StepModel {
 public:
  PointerGeneratorDecoder(const ModelParams& params, const ModelConfig& config, const EncodedExample& example,
                          const Vocab& vocab);

  std::size_t ext_size() const override { return ext_size_; }
  DecodeState initial_state() const override;
  Eigen::VectorXd step(DecodeState& state, TokenId input) const override;

 private:
  const ModelParams& params_;
  std::vector<TokenId> src_ext_ids_;
  std::size_t ext_size_;
  EncoderStates enc_;
};

struct DecodeResult {
  std::vector<TokenId> ids;  // generated extended ids, EOS excluded
  bool ended_with_eos = false;
  double logprob_sum = 0;    // sum of log p of every drawn token, EOS included
  bool blocked_fallback = false;

  /// ids plus the terminating EOS when one was produced.
  std::vector<TokenId> with_eos() const;
};

/// Argmax each step (ties to the lowest id) until EOS or `max_len` tokens.
DecodeResult greedy_decode(const StepModel& model, std::size_t max_len);

/// One multinomial draw from p_final per step.
DecodeResult sample_decode(const StepModel& model, std::size_t max_len, Rng& rng);

struct BeamOptions {
  std::size_t width = 4;
  std::size_t max_len = 100;
  bool block_trigrams = true;
};

/// Beam search over log p_final. A candidate whose new token would repeat a
/// trigram already in its sequence is discarded. Beams finish on EOS or at
/// max_len and retire; the search stops once the highest-scoring candidate of
/// a step has finished. The finished beam with the best mean log-probability
/// (EOS counted) wins, ties to the one finished first. If every candidate at some step is blocked, the
/// best blocked one is kept and `blocked_fallback` is set.
DecodeResult beam_search(const StepModel& model, const BeamOptions& options);

/// Extended ids to tokens using the example's OOV list.
TokenSeq ids_to_tokens(std::span<const TokenId> ids, const Vocab& vocab, std::span<const std::string> oov_tokens);

/// True when some trigram occurs twice in `ids`.
bool has_repeated_trigram(std::span<const TokenId> ids);

}  // namespace prdesc
