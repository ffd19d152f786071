#include "prdesc/decode.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

namespace prdesc {

PointerGeneratorDecoder::PointerGeneratorDecoder(const ModelParams& params, const ModelConfig& config,
                                                 const EncodedExample& example, const Vocab& vocab)
    : params_(params),
      src_ext_ids_(example.src_ext_ids),
      ext_size_(example.ext_size(vocab)),
      enc_(encode(example.src_ids, params, config)) {
  if (static_cast<int>(vocab.size()) != config.vocab_size) {
    throw std::invalid_argument("vocab size does not match the model config");
  }
}

DecodeState PointerGeneratorDecoder::initial_state() const { return DecodeState{enc_.s0, {}}; }

Eigen::VectorXd PointerGeneratorDecoder::step(DecodeState& state, TokenId input) const {
  StepOutput out = decoder_step(params_, enc_, state.lstm, input, src_ext_ids_, ext_size_);
  state.lstm = std::move(out.state);
  state.inputs.push_back(input);
  return std::move(out.p_final);
}

std::vector<TokenId> DecodeResult::with_eos() const {
  std::vector<TokenId> out = ids;
  if (ended_with_eos) out.push_back(Vocab::kEos);
  return out;
}

namespace {

TokenId argmax(const Eigen::VectorXd& p) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < p.size(); ++k) {
    if (p(k) > p(best)) best = k;
  }
  return static_cast<TokenId>(best);
}

TokenId draw(const Eigen::VectorXd& p, Rng& rng) {
  const double u = uniform01(rng) * p.sum();
  double acc = 0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) <= 0) continue;
    acc += p(k);
    last_positive = k;
    if (u < acc) return static_cast<TokenId>(k);
  }
  return static_cast<TokenId>(last_positive);
}

template <typename Pick>
DecodeResult run_decoder(const StepModel& model, std::size_t max_len, Pick pick) {
  DecodeResult result;
  DecodeState state = model.initial_state();
  TokenId input = Vocab::kBos;
  while (result.ids.size() < max_len) {
    const Eigen::VectorXd p = model.step(state, input);
    const TokenId next = pick(p);
    result.logprob_sum += std::log(std::max(p(next), kProbFloor));
    if (next == Vocab::kEos) {
      result.ended_with_eos = true;
      break;
    }
    result.ids.push_back(next);
    input = next;
  }
  return result;
}

struct Beam {
  std::vector<TokenId> tokens;
  double logprob = 0;
  DecodeState state;
  bool eos = false;
};

struct Candidate {
  double score;
  std::size_t beam;
  TokenId token;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.beam, a.token) < std::tie(b.beam, b.token);
}

// Tokens that would close an already-seen trigram after the current suffix.
std::set<TokenId> blocked_tokens(const std::vector<TokenId>& t) {
  std::set<TokenId> out;
  const std::size_t n = t.size();
  if (n < 2) return out;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    if (t[k] == t[n - 2] && t[k + 1] == t[n - 1]) out.insert(t[k + 2]);
  }
  return out;
}

}  // namespace

DecodeResult greedy_decode(const StepModel& model, std::size_t max_len) {
  return run_decoder(model, max_len, [](const Eigen::VectorXd& p) { return argmax(p); });
}

DecodeResult sample_decode(const StepModel& model, std::size_t max_len, Rng& rng) {
  return run_decoder(model, max_len, [&](const Eigen::VectorXd& p) { return draw(p, rng); });
}

DecodeResult beam_search(const StepModel& model, const BeamOptions& options) {
  if (options.width == 0) throw std::invalid_argument("beam_search: width must be >= 1");
  const std::size_t width = options.width;

  std::vector<Beam> live{Beam{{}, 0.0, model.initial_state(), false}};
  std::vector<Beam> finished;
  bool fallback_used = false;

  if (options.max_len == 0) {
    finished.push_back(live.front());
    live.clear();
  }

  bool top_finished = false;
  while (!live.empty() && !top_finished) {
    std::vector<Candidate> candidates;
    std::vector<Eigen::VectorXd> dists(live.size());
    std::vector<DecodeState> next_states(live.size());
    bool have_blocked = false;
    Candidate best_blocked{-INFINITY, 0, 0};

    for (std::size_t b = 0; b < live.size(); ++b) {
      next_states[b] = live[b].state;
      const TokenId input = live[b].tokens.empty() ? Vocab::kBos : live[b].tokens.back();
      dists[b] = model.step(next_states[b], input);
      const auto blocked =
          options.block_trigrams ? blocked_tokens(live[b].tokens) : std::set<TokenId>{};
      const Eigen::VectorXd& p = dists[b];
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (!(p(k) > 0)) continue;
        const auto token = static_cast<TokenId>(k);
        Candidate c{live[b].logprob + std::log(p(k)), b, token};
        if (token != Vocab::kEos && blocked.count(token)) {
          if (!have_blocked || better(c, best_blocked)) best_blocked = c;
          have_blocked = true;
          continue;
        }
        candidates.push_back(c);
      }
    }
    if (candidates.empty()) {
      if (!have_blocked) break;
      candidates.push_back(best_blocked);
      fallback_used = true;
    }

    const std::size_t keep = std::min(candidates.size(), 2 * width);
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep), candidates.end(), better);

    std::vector<Beam> next_live;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = candidates[k];
      Beam nb{live[c.beam].tokens, c.score, next_states[c.beam], false};
      bool done = false;
      if (c.token == Vocab::kEos) {
        nb.eos = true;
        done = true;
      } else {
        nb.tokens.push_back(c.token);
        done = nb.tokens.size() >= options.max_len;
      }
      if (done) {
        if (k == 0) top_finished = true;
        finished.push_back(std::move(nb));
      } else {
        next_live.push_back(std::move(nb));
      }
      if (next_live.size() >= width) break;
    }
    live = std::move(next_live);
  }

  DecodeResult result;
  result.blocked_fallback = fallback_used;
  if (finished.empty()) return result;
  auto norm = [](const Beam& b) {
    const double len = static_cast<double>(b.tokens.size() + (b.eos ? 1 : 0));
    return len > 0 ? b.logprob / len : 0.0;
  };
  std::size_t best = 0;
  for (std::size_t k = 1; k < finished.size(); ++k) {
    if (norm(finished[k]) > norm(finished[best])) best = k;
  }
  result.ids = finished[best].tokens;
  result.ended_with_eos = finished[best].eos;
  result.logprob_sum = finished[best].logprob;
  return result;
}

TokenSeq ids_to_tokens(std::span<const TokenId> ids, const Vocab& vocab, std::span<const std::string> oov_tokens) {
  TokenSeq out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(resolve_token(id, vocab, oov_tokens));
  return out;
}

bool has_repeated_trigram(std::span<const TokenId> ids) {
  std::set<std::tuple<TokenId, TokenId, TokenId>> seen;
  for (std::size_t k = 0; k + 2 < ids.size(); ++k) {
    if (!seen.emplace(ids[k], ids[k + 1], ids[k + 2]).second) return true;
  }
  return false;
}

}  // namespace prdesc
