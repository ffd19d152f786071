#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prdesc/vocab.hpp"

namespace prdesc {

struct ModelConfig {
  int emb_dim = 128;
  int hidden_dim = 256;  // per encoder direction and for the decoder
  int vocab_size = 50000;
  int max_src_len = 400;
  int max_tgt_len = 100;

  int attn_dim() const { return 2 * hidden_dim; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// All learnable tensors. Vectors are column vectors; LSTM gate blocks are
/// stacked [input; forget; cell candidate; output].
struct ModelParams {
  Eigen::MatrixXd embedding;  // emb x vocab, one column per token, shared by encoder and decoder

  Eigen::MatrixXd enc_fwd_w;  // 4H x (emb + H)
  Eigen::VectorXd enc_fwd_b;
  Eigen::MatrixXd enc_bwd_w;
  Eigen::VectorXd enc_bwd_b;
  Eigen::MatrixXd dec_w;      // 4H x (emb + H)
  Eigen::VectorXd dec_b;

  // Decoder initial state from [fwd_last; bwd_first] (hidden and cell).
  Eigen::MatrixXd bridge_h_w;  // H x 2H
  Eigen::VectorXd bridge_h_b;
  Eigen::MatrixXd bridge_c_w;
  Eigen::VectorXd bridge_c_b;

  // e_i = v . tanh(W_h h_i + W_s s_j + b_e)
  Eigen::MatrixXd attn_wh;  // A x 2H
  Eigen::MatrixXd attn_ws;  // A x H
  Eigen::VectorXd attn_b;
  Eigen::VectorXd attn_v;

  // P_vocab = softmax(V'(V [s_j; c_j] + b) + b')
  Eigen::MatrixXd proj_w;  // V:  H x 3H
  Eigen::VectorXd proj_b;  // b
  Eigen::MatrixXd out_w;   // V': vocab x H
  Eigen::VectorXd out_b;   // b'

  // p_gen = sigmoid(w_c . c_j + w_s . s_j + w_x . x_j + b_gen)
  Eigen::VectorXd gen_wc;  // 2H
  Eigen::VectorXd gen_ws;  // H
  Eigen::VectorXd gen_wx;  // emb
  Eigen::VectorXd gen_b;   // 1

  static ModelParams zeros(const ModelConfig& config);
  /// uniform(-0.1, 0.1) weights, zero biases except forget-gate biases of 1.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const;
  void set_zero();
  /// this += scale * other
  void add_scaled(const ModelParams& other, double scale);
  double squared_norm() const;
  bool all_finite() const;

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& p, F& f) {
    f("embedding", p.embedding);
    f("enc_fwd_w", p.enc_fwd_w);
    f("enc_fwd_b", p.enc_fwd_b);
    f("enc_bwd_w", p.enc_bwd_w);
    f("enc_bwd_b", p.enc_bwd_b);
    f("dec_w", p.dec_w);
    f("dec_b", p.dec_b);
    f("bridge_h_w", p.bridge_h_w);
    f("bridge_h_b", p.bridge_h_b);
    f("bridge_c_w", p.bridge_c_w);
    f("bridge_c_b", p.bridge_c_b);
    f("attn_wh", p.attn_wh);
    f("attn_ws", p.attn_ws);
    f("attn_b", p.attn_b);
    f("attn_v", p.attn_v);
    f("proj_w", p.proj_w);
    f("proj_b", p.proj_b);
    f("out_w", p.out_w);
    f("out_b", p.out_b);
    f("gen_wc", p.gen_wc);
    f("gen_ws", p.gen_ws);
    f("gen_wx", p.gen_wx);
    f("gen_b", p.gen_b);
  }
};

struct LstmCache {
  Eigen::VectorXd input;  // [x; h_prev]
  Eigen::VectorXd i, f, g, o;
  Eigen::VectorXd c_prev, c, tanh_c;
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// One LSTM step; fills `cache` when non-null.
LstmState lstm_step(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                    const LstmState& prev, LstmCache* cache = nullptr);

struct EncoderStates {
  Eigen::MatrixXd h;          // 2H x L, column i = [fwd_i; bwd_i]
  Eigen::MatrixXd attn_keys;  // A x L, W_h h_i + b_e
  LstmState s0;               // decoder initial state

  // Backward-pass intermediates.
  std::vector<TokenId> src_ids;
  std::vector<LstmCache> fwd_cache;
  std::vector<LstmCache> bwd_cache;
  Eigen::VectorXd bridge_in_h;  // [fwd_last.h; bwd_first.h]
  Eigen::VectorXd bridge_in_c;
};

/// Bidirectional LSTM over the source embeddings (ids >= vocab read as UNK).
/// Throws std::invalid_argument on an empty or over-long source.
EncoderStates encode(std::span<const TokenId> src_ids, const ModelParams& params, const ModelConfig& config);

struct AttentionOutput {
  Eigen::VectorXd scores;   // e
  Eigen::VectorXd weights;  // a_j, sums to 1
  Eigen::VectorXd context;  // c_j = sum_i a_i h_i
  Eigen::MatrixXd hidden;   // tanh(W_h h_i + W_s s_j + b_e), A x L
};

AttentionOutput attention(const EncoderStates& enc, const Eigen::VectorXd& s, const ModelParams& params);

/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
double sigmoid(double x);

/// P_vocab from decoder state and context. `proj_out` receives V [s; c] + b.
Eigen::VectorXd vocab_dist(const Eigen::VectorXd& s, const Eigen::VectorXd& c, const ModelParams& params,
                           Eigen::VectorXd* proj_out = nullptr);

double generation_prob(const Eigen::VectorXd& c, const Eigen::VectorXd& s, const Eigen::VectorXd& x,
                       const ModelParams& params);

/// p_gen * P_vocab (zero-padded to ext_size) plus (1 - p_gen) times the
/// attention mass scattered onto each source token's extended id.
Eigen::VectorXd final_dist(const Eigen::VectorXd& p_vocab, const Eigen::VectorXd& attn, double p_gen,
                           std::span<const TokenId> src_ext_ids, std::size_t ext_size);

struct StepOutput {
  LstmState state;  // s_j (hidden) and its cell
  AttentionOutput attn;
  Eigen::VectorXd p_vocab;
  double p_gen = 0;
  Eigen::VectorXd p_final;

  // Backward-pass intermediates.
  TokenId input_id = 0;        // embedding row actually used
  Eigen::VectorXd x;           // decoder input embedding
  Eigen::VectorXd proj;        // V [s; c] + b
  Eigen::VectorXd state_ctx;   // [s; c]
  LstmCache lstm;
};

/// One decoder step: feeds `input` (extended ids read as UNK) from `prev`.
StepOutput decoder_step(const ModelParams& params, const EncoderStates& enc, const LstmState& prev,
                        TokenId input, std::span<const TokenId> src_ext_ids, std::size_t ext_size);

inline constexpr double kProbFloor = 1e-12;

/// -(1/|y|) sum log p, with each p clamped below at 1e-12.
double ml_loss(std::span<const double> step_probs);
/// -(r_sample - r_baseline) * sum log p(y^s); rewards are constants.
double rl_loss(double r_sample, double r_baseline, double sample_logprob_sum);
/// gamma * l_rl + (1 - gamma) * l_ml
double hybrid_loss(double l_rl, double l_ml, double gamma);

/// A teacher-forced pass over one decoder input/target sequence.
struct SequenceTrace {
  EncoderStates enc;
  std::vector<StepOutput> steps;
  std::vector<TokenId> targets;  // extended ids
  std::vector<TokenId> src_ext_ids;

  /// p_final(target_j) per step.
  std::vector<double> target_probs() const;
};

SequenceTrace forward_sequence(const ModelParams& params, const ModelConfig& config,
                               std::span<const TokenId> src_ids, std::span<const TokenId> src_ext_ids,
                               std::size_t ext_size, std::span<const TokenId> decoder_inputs,
                               std::span<const TokenId> targets);

/// sum_j w_j * -log max(p_final_j(y_j), 1e-12)
double weighted_nll(const SequenceTrace& trace, std::span<const double> step_weights);

/// Accumulates the gradient of weighted_nll into `grads` (same shapes as
/// params). Clamped probabilities contribute no gradient.
void backward(const ModelParams& params, const SequenceTrace& trace, std::span<const double> step_weights,
              ModelParams& grads);

/// Throws DivergenceError naming the first parameter with a non-finite entry.
void check_finite(const ModelParams& grads);

}  // namespace prdesc
