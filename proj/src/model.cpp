#include "prdesc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "prdesc/errors.hpp"
#include "prdesc/rng.hpp"

namespace prdesc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void ModelConfig::validate() const {
  if (emb_dim <= 0 || hidden_dim <= 0 || vocab_size <= static_cast<int>(Vocab::kReserved) ||
      max_src_len <= 0 || max_tgt_len <= 0) {
    throw std::invalid_argument("ModelConfig: dimensions must be positive and vocab_size > 4");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  const int e = config.emb_dim;
  const int h = config.hidden_dim;
  const int a = config.attn_dim();
  const int v = config.vocab_size;
  ModelParams p;
  p.embedding = MatrixXd::Zero(e, v);
  p.enc_fwd_w = MatrixXd::Zero(4 * h, e + h);
  p.enc_fwd_b = VectorXd::Zero(4 * h);
  p.enc_bwd_w = MatrixXd::Zero(4 * h, e + h);
  p.enc_bwd_b = VectorXd::Zero(4 * h);
  p.dec_w = MatrixXd::Zero(4 * h, e + h);
  p.dec_b = VectorXd::Zero(4 * h);
  p.bridge_h_w = MatrixXd::Zero(h, 2 * h);
  p.bridge_h_b = VectorXd::Zero(h);
  p.bridge_c_w = MatrixXd::Zero(h, 2 * h);
  p.bridge_c_b = VectorXd::Zero(h);
  p.attn_wh = MatrixXd::Zero(a, 2 * h);
  p.attn_ws = MatrixXd::Zero(a, h);
  p.attn_b = VectorXd::Zero(a);
  p.attn_v = VectorXd::Zero(a);
  p.proj_w = MatrixXd::Zero(h, 3 * h);
  p.proj_b = VectorXd::Zero(h);
  p.out_w = MatrixXd::Zero(v, h);
  p.out_b = VectorXd::Zero(v);
  p.gen_wc = VectorXd::Zero(2 * h);
  p.gen_ws = VectorXd::Zero(h);
  p.gen_wx = VectorXd::Zero(e);
  p.gen_b = VectorXd::Zero(1);
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zeros(config);
  Rng rng(seed);
  p.visit([&](std::string_view name, auto& t) {
    // Biases stay zero.
    const bool bias = name.ends_with("_b");
    if (bias) return;
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = uniform(rng, -0.1, 0.1);
  });
  const int h = config.hidden_dim;
  for (VectorXd* b : {&p.enc_fwd_b, &p.enc_bwd_b, &p.dec_b}) b->segment(h, h).setOnes();
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

void ModelParams::set_zero() {
  visit([](std::string_view, auto& t) { t.setZero(); });
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  std::vector<const double*> src;
  other.visit([&](std::string_view, const auto& t) { src.push_back(t.data()); });
  std::size_t k = 0;
  visit([&](std::string_view, auto& t) {
    const double* o = src[k++];
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += scale * o[i];
  });
}

double ModelParams::squared_norm() const {
  double s = 0;
  visit([&](std::string_view, const auto& t) { s += t.squaredNorm(); });
  return s;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  visit([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

void check_finite(const ModelParams& grads) {
  grads.visit([](std::string_view name, const auto& t) {
    if (!t.allFinite()) throw DivergenceError("non-finite gradient in " + std::string(name));
  });
}

// ---------------------------------------------------------------------------
// Forward

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

VectorXd sigmoid(const VectorXd& x) {
  return x.unaryExpr([](double v) { return prdesc::sigmoid(v); });
}

TokenId embedding_column(TokenId id, const ModelParams& p) {
  return id >= 0 && id < p.embedding.cols() ? id : Vocab::kUnk;
}

}  // namespace

VectorXd softmax(const VectorXd& logits) {
  const double m = logits.maxCoeff();
  VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

LstmState lstm_step(const MatrixXd& w, const VectorXd& b, const VectorXd& x, const LstmState& prev,
                    LstmCache* cache) {
  const Eigen::Index h = prev.h.size();
  VectorXd input(x.size() + h);
  input << x, prev.h;
  const VectorXd z = w * input + b;
  VectorXd i = sigmoid(VectorXd(z.segment(0, h)));
  VectorXd f = sigmoid(VectorXd(z.segment(h, h)));
  VectorXd g = z.segment(2 * h, h).array().tanh();
  VectorXd o = sigmoid(VectorXd(z.segment(3 * h, h)));
  LstmState next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  VectorXd tanh_c = next.c.array().tanh();
  next.h = o.cwiseProduct(tanh_c);
  if (cache) {
    cache->input = std::move(input);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c_prev = prev.c;
    cache->c = next.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

EncoderStates encode(std::span<const TokenId> src_ids, const ModelParams& params, const ModelConfig& config) {
  if (src_ids.empty()) throw std::invalid_argument("encode: empty source");
  if (src_ids.size() > static_cast<std::size_t>(config.max_src_len)) {
    throw std::invalid_argument("encode: source longer than max_src_len");
  }
  const int h = config.hidden_dim;
  const auto len = static_cast<Eigen::Index>(src_ids.size());

  EncoderStates enc;
  enc.src_ids.assign(src_ids.begin(), src_ids.end());
  enc.h.resize(2 * h, len);
  enc.fwd_cache.resize(src_ids.size());
  enc.bwd_cache.resize(src_ids.size());

  const LstmState zero{VectorXd::Zero(h), VectorXd::Zero(h)};
  LstmState fwd = zero;
  for (Eigen::Index i = 0; i < len; ++i) {
    const VectorXd x = params.embedding.col(embedding_column(src_ids[i], params));
    fwd = lstm_step(params.enc_fwd_w, params.enc_fwd_b, x, fwd, &enc.fwd_cache[i]);
    enc.h.col(i).head(h) = fwd.h;
  }
  LstmState bwd = zero;
  for (Eigen::Index i = len - 1; i >= 0; --i) {
    const VectorXd x = params.embedding.col(embedding_column(src_ids[i], params));
    bwd = lstm_step(params.enc_bwd_w, params.enc_bwd_b, x, bwd, &enc.bwd_cache[i]);
    enc.h.col(i).tail(h) = bwd.h;
  }

  enc.bridge_in_h.resize(2 * h);
  enc.bridge_in_h << fwd.h, bwd.h;
  enc.bridge_in_c.resize(2 * h);
  enc.bridge_in_c << fwd.c, bwd.c;
  enc.s0.h = (params.bridge_h_w * enc.bridge_in_h + params.bridge_h_b).array().tanh();
  enc.s0.c = (params.bridge_c_w * enc.bridge_in_c + params.bridge_c_b).array().tanh();

  enc.attn_keys = (params.attn_wh * enc.h).colwise() + params.attn_b;
  return enc;
}

AttentionOutput attention(const EncoderStates& enc, const VectorXd& s, const ModelParams& params) {
  AttentionOutput out;
  out.hidden = (enc.attn_keys.colwise() + params.attn_ws * s).array().tanh();
  out.scores = out.hidden.transpose() * params.attn_v;
  out.weights = softmax(out.scores);
  out.context = enc.h * out.weights;
  return out;
}

VectorXd vocab_dist(const VectorXd& s, const VectorXd& c, const ModelParams& params, VectorXd* proj_out) {
  VectorXd sc(s.size() + c.size());
  sc << s, c;
  VectorXd proj = params.proj_w * sc + params.proj_b;
  VectorXd p = softmax(params.out_w * proj + params.out_b);
  if (proj_out) *proj_out = std::move(proj);
  return p;
}

double generation_prob(const VectorXd& c, const VectorXd& s, const VectorXd& x, const ModelParams& params) {
  return sigmoid(params.gen_wc.dot(c) + params.gen_ws.dot(s) + params.gen_wx.dot(x) + params.gen_b(0));
}

VectorXd final_dist(const VectorXd& p_vocab, const VectorXd& attn, double p_gen,
                    std::span<const TokenId> src_ext_ids, std::size_t ext_size) {
  VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(ext_size));
  out.head(p_vocab.size()) = p_gen * p_vocab;
  for (std::size_t i = 0; i < src_ext_ids.size(); ++i) {
    out(src_ext_ids[i]) += (1.0 - p_gen) * attn(static_cast<Eigen::Index>(i));
  }
  return out;
}

StepOutput decoder_step(const ModelParams& params, const EncoderStates& enc, const LstmState& prev,
                        TokenId input, std::span<const TokenId> src_ext_ids, std::size_t ext_size) {
  StepOutput out;
  out.input_id = embedding_column(input, params);
  out.x = params.embedding.col(out.input_id);
  out.state = lstm_step(params.dec_w, params.dec_b, out.x, prev, &out.lstm);
  out.attn = attention(enc, out.state.h, params);
  out.p_vocab = vocab_dist(out.state.h, out.attn.context, params, &out.proj);
  out.state_ctx.resize(out.state.h.size() + out.attn.context.size());
  out.state_ctx << out.state.h, out.attn.context;
  out.p_gen = generation_prob(out.attn.context, out.state.h, out.x, params);
  out.p_final = final_dist(out.p_vocab, out.attn.weights, out.p_gen, src_ext_ids, ext_size);
  return out;
}

// ---------------------------------------------------------------------------
// Losses

double ml_loss(std::span<const double> step_probs) {
  if (step_probs.empty()) return 0.0;
  double s = 0;
  for (double p : step_probs) s -= std::log(std::max(p, kProbFloor));
  return s / static_cast<double>(step_probs.size());
}

double rl_loss(double r_sample, double r_baseline, double sample_logprob_sum) {
  return -(r_sample - r_baseline) * sample_logprob_sum;
}

double hybrid_loss(double l_rl, double l_ml, double gamma) { return gamma * l_rl + (1.0 - gamma) * l_ml; }

std::vector<double> SequenceTrace::target_probs() const {
  std::vector<double> p;
  p.reserve(steps.size());
  for (std::size_t j = 0; j < steps.size(); ++j) p.push_back(steps[j].p_final(targets[j]));
  return p;
}

SequenceTrace forward_sequence(const ModelParams& params, const ModelConfig& config,
                               std::span<const TokenId> src_ids, std::span<const TokenId> src_ext_ids,
                               std::size_t ext_size, std::span<const TokenId> decoder_inputs,
                               std::span<const TokenId> targets) {
  if (decoder_inputs.size() != targets.size()) {
    throw std::invalid_argument("forward_sequence: inputs and targets differ in length");
  }
  if (src_ids.size() != src_ext_ids.size()) {
    throw std::invalid_argument("forward_sequence: source id lists differ in length");
  }
  SequenceTrace trace;
  trace.enc = encode(src_ids, params, config);
  trace.targets.assign(targets.begin(), targets.end());
  trace.src_ext_ids.assign(src_ext_ids.begin(), src_ext_ids.end());
  trace.steps.reserve(targets.size());
  LstmState state = trace.enc.s0;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    trace.steps.push_back(decoder_step(params, trace.enc, state, decoder_inputs[j], src_ext_ids, ext_size));
    state = trace.steps.back().state;
  }
  return trace;
}

double weighted_nll(const SequenceTrace& trace, std::span<const double> step_weights) {
  double loss = 0;
  for (std::size_t j = 0; j < trace.steps.size(); ++j) {
    const double p = trace.steps[j].p_final(trace.targets[j]);
    loss -= step_weights[j] * std::log(std::max(p, kProbFloor));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Backward

namespace {

// Gradients of one LSTM step. dh/dc are w.r.t. the step's outputs; on return
// they hold the gradients w.r.t. the previous state.
void lstm_backward(const MatrixXd& w, const LstmCache& cache, VectorXd& dh, VectorXd& dc, MatrixXd& dw,
                   VectorXd& db, VectorXd& dx) {
  const Eigen::Index h = dh.size();
  const VectorXd d_o = dh.cwiseProduct(cache.tanh_c);
  const VectorXd dc_total =
      dc + dh.cwiseProduct(cache.o).cwiseProduct((1.0 - cache.tanh_c.array().square()).matrix());
  VectorXd dz(4 * h);
  dz.segment(0, h) = dc_total.cwiseProduct(cache.g).cwiseProduct(
      cache.i.cwiseProduct((1.0 - cache.i.array()).matrix()));
  dz.segment(h, h) = dc_total.cwiseProduct(cache.c_prev).cwiseProduct(
      cache.f.cwiseProduct((1.0 - cache.f.array()).matrix()));
  dz.segment(2 * h, h) = dc_total.cwiseProduct(cache.i).cwiseProduct(
      (1.0 - cache.g.array().square()).matrix());
  dz.segment(3 * h, h) = d_o.cwiseProduct(cache.o.cwiseProduct((1.0 - cache.o.array()).matrix()));

  dw.noalias() += dz * cache.input.transpose();
  db += dz;
  const VectorXd dinput = w.transpose() * dz;
  const Eigen::Index xdim = dinput.size() - h;
  dx = dinput.head(xdim);
  dh = dinput.tail(h);
  dc = dc_total.cwiseProduct(cache.f);
}

}  // namespace

void backward(const ModelParams& params, const SequenceTrace& trace, std::span<const double> step_weights,
              ModelParams& grads) {
  const EncoderStates& enc = trace.enc;
  const Eigen::Index h = params.dec_b.size() / 4;
  const Eigen::Index len = enc.h.cols();
  const Eigen::Index vocab = params.out_b.size();

  MatrixXd d_enc_h = MatrixXd::Zero(2 * h, len);
  MatrixXd d_keys = MatrixXd::Zero(enc.attn_keys.rows(), len);
  VectorXd dh_next = VectorXd::Zero(h);
  VectorXd dc_next = VectorXd::Zero(h);
  VectorXd dx;

  for (std::size_t jj = trace.steps.size(); jj-- > 0;) {
    const StepOutput& st = trace.steps[jj];
    const TokenId y = trace.targets[jj];
    const double pf = st.p_final(y);
    const double g_pf = pf < kProbFloor ? 0.0 : -step_weights[jj] / pf;

    VectorXd ds = dh_next;
    VectorXd dctx = VectorXd::Zero(2 * h);
    VectorXd dxin = VectorXd::Zero(st.x.size());

    if (g_pf != 0.0) {
      // p_final(y) = p_gen P_vocab(y) + (1 - p_gen) sum_{i: w_i = y} a_i
      double copy = 0;
      VectorXd da = VectorXd::Zero(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        if (trace.src_ext_ids[static_cast<std::size_t>(i)] == y) {
          copy += st.attn.weights(i);
          da(i) = g_pf * (1.0 - st.p_gen);
        }
      }
      const double pv_y = y < vocab ? st.p_vocab(y) : 0.0;
      const double dpgen = g_pf * (pv_y - copy);

      // Vocabulary softmax and the two output layers.
      if (y < vocab) {
        const double dpv_y = g_pf * st.p_gen;
        VectorXd dz = -dpv_y * pv_y * st.p_vocab;
        dz(y) += dpv_y * pv_y;
        grads.out_w.noalias() += dz * st.proj.transpose();
        grads.out_b += dz;
        const VectorXd dproj = params.out_w.transpose() * dz;
        grads.proj_w.noalias() += dproj * st.state_ctx.transpose();
        grads.proj_b += dproj;
        const VectorXd dsc = params.proj_w.transpose() * dproj;
        ds += dsc.head(h);
        dctx += dsc.tail(2 * h);
      }

      // Generation probability.
      const double dq = dpgen * st.p_gen * (1.0 - st.p_gen);
      grads.gen_wc += dq * st.attn.context;
      grads.gen_ws += dq * st.state.h;
      grads.gen_wx += dq * st.x;
      grads.gen_b(0) += dq;
      dctx += dq * params.gen_wc;
      ds += dq * params.gen_ws;
      dxin += dq * params.gen_wx;

      // Context vector and attention softmax.
      da += enc.h.transpose() * dctx;
      d_enc_h.noalias() += dctx * st.attn.weights.transpose();
      const VectorXd& a = st.attn.weights;
      const VectorXd de = a.cwiseProduct((da.array() - a.dot(da)).matrix());
      grads.attn_v.noalias() += st.attn.hidden * de;
      const MatrixXd dpre = (params.attn_v * de.transpose()).cwiseProduct(
          (1.0 - st.attn.hidden.array().square()).matrix());
      d_keys += dpre;
      const VectorXd dpre_sum = dpre.rowwise().sum();
      grads.attn_ws.noalias() += dpre_sum * st.state.h.transpose();
      ds.noalias() += params.attn_ws.transpose() * dpre_sum;
    }

    // Decoder LSTM.
    VectorXd dh = ds;
    VectorXd dc = dc_next;
    lstm_backward(params.dec_w, st.lstm, dh, dc, grads.dec_w, grads.dec_b, dx);
    grads.embedding.col(st.input_id) += dx + dxin;
    dh_next = std::move(dh);
    dc_next = std::move(dc);
  }

  // Attention keys: W_h h_i + b_e.
  grads.attn_wh.noalias() += d_keys * enc.h.transpose();
  grads.attn_b += d_keys.rowwise().sum();
  d_enc_h.noalias() += params.attn_wh.transpose() * d_keys;

  // Bridge into the decoder's initial state.
  const VectorXd dpre_h = dh_next.cwiseProduct((1.0 - enc.s0.h.array().square()).matrix());
  const VectorXd dpre_c = dc_next.cwiseProduct((1.0 - enc.s0.c.array().square()).matrix());
  grads.bridge_h_w.noalias() += dpre_h * enc.bridge_in_h.transpose();
  grads.bridge_h_b += dpre_h;
  grads.bridge_c_w.noalias() += dpre_c * enc.bridge_in_c.transpose();
  grads.bridge_c_b += dpre_c;
  const VectorXd d_bridge_h = params.bridge_h_w.transpose() * dpre_h;
  const VectorXd d_bridge_c = params.bridge_c_w.transpose() * dpre_c;

  // Forward encoder, last position first.
  VectorXd dh = d_bridge_h.head(h);
  VectorXd dc = d_bridge_c.head(h);
  for (Eigen::Index i = len - 1; i >= 0; --i) {
    dh += d_enc_h.col(i).head(h);
    lstm_backward(params.enc_fwd_w, enc.fwd_cache[static_cast<std::size_t>(i)], dh, dc, grads.enc_fwd_w,
                  grads.enc_fwd_b, dx);
    grads.embedding.col(embedding_column(enc.src_ids[static_cast<std::size_t>(i)], params)) += dx;
  }
  // Backward encoder ran from the last position to the first.
  dh = d_bridge_h.tail(h);
  dc = d_bridge_c.tail(h);
  for (Eigen::Index i = 0; i < len; ++i) {
    dh += d_enc_h.col(i).tail(h);
    lstm_backward(params.enc_bwd_w, enc.bwd_cache[static_cast<std::size_t>(i)], dh, dc, grads.enc_bwd_w,
                  grads.enc_bwd_b, dx);
    grads.embedding.col(embedding_column(enc.src_ids[static_cast<std::size_t>(i)], params)) += dx;
  }
}

}  // namespace prdesc
