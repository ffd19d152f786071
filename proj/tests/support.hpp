#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prdesc/decode.hpp"
#include "prdesc/ingest.hpp"
#include "prdesc/model.hpp"
#include "prdesc/preprocess.hpp"
#include "prdesc/rng.hpp"

namespace testing {

using prdesc::TokenId;

inline prdesc::ModelConfig tiny_config(int emb, int hidden, int vocab, int max_src = 400, int max_tgt = 100) {
  prdesc::ModelConfig c;
  c.emb_dim = emb;
  c.hidden_dim = hidden;
  c.vocab_size = vocab;
  c.max_src_len = max_src;
  c.max_tgt_len = max_tgt;
  return c;
}

/// Every tensor, biases included, drawn from uniform(-scale, scale).
prdesc::ModelParams random_params(const prdesc::ModelConfig& config, std::uint64_t seed, double scale);

/// `n` pairs over tokens w0..w9 where the target is the source itself.
std::vector<prdesc::ProcessedExample> copy_corpus(std::size_t n, std::uint64_t seed, std::size_t min_len = 3,
                                                  std::size_t max_len = 5);

/// Random token sequence over an alphabet of `alphabet` single-letter tokens.
prdesc::TokenSeq random_tokens(prdesc::Rng& rng, std::size_t max_len, int alphabet, std::size_t min_len = 0);

/// A StepModel whose next distribution is a function of the inputs fed so far
/// (BOS included).
class TableModel : public prdesc::StepModel {
 public:
  using Fn = std::function<Eigen::VectorXd(const std::vector<TokenId>& inputs)>;
  TableModel(std::size_t ext_size, Fn fn) : ext_size_(ext_size), fn_(std::move(fn)) {}

  std::size_t ext_size() const override { return ext_size_; }
  prdesc::DecodeState initial_state() const override { return {}; }
  Eigen::VectorXd step(prdesc::DecodeState& state, TokenId input) const override {
    state.inputs.push_back(input);
    return fn_(state.inputs);
  }

 private:
  std::size_t ext_size_;
  Fn fn_;
};

Eigen::VectorXd one_hot(std::size_t size, TokenId id);

/// Raw PR records that survive preprocessing: 2-4 commits whose messages
/// name a component and an action, one added Java comment per commit, and a
/// description restating the first commit. A few records in every ten are
/// made to fail a filter (empty description, one commit, trivial description).
std::vector<prdesc::PullRequest> toy_pr_corpus(std::size_t n, std::uint64_t seed);

}  // namespace testing
