#include "prdesc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace prdesc {

TokenSeq lead_cm(std::span<const std::string> source, std::size_t limit) {
  TokenSeq out;
  for (const auto& t : source) {
    if (t == kParaSep || out.size() >= limit) break;
    if (t == kCommitSep) continue;
    out.push_back(t);
  }
  return out;
}

Eigen::VectorXd pagerank(const Eigen::MatrixXd& similarity, const PageRankOptions& options) {
  if (similarity.rows() != similarity.cols()) throw std::invalid_argument("pagerank: matrix not square");
  const Eigen::Index n = similarity.rows();
  if (n == 0) return {};
  if ((similarity.array() < 0).any()) throw std::invalid_argument("pagerank: negative similarity");

  // Row-stochastic transition matrix; empty rows jump uniformly.
  Eigen::MatrixXd transition(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_sum = similarity.row(i).sum();
    if (row_sum > 0) {
      transition.row(i) = similarity.row(i) / row_sum;
    } else {
      transition.row(i).setConstant(1.0 / static_cast<double>(n));
    }
  }

  const double d = options.damping;
  const double teleport = (1.0 - d) / static_cast<double>(n);
  Eigen::VectorXd scores = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int iter = 0; iter < options.max_iter; ++iter) {
    Eigen::VectorXd next = (d * (transition.transpose() * scores)).array() + teleport;
    const double delta = (next - scores).lpNorm<1>();
    scores = std::move(next);
    if (delta < options.eps) break;
  }
  return scores / scores.sum();
}

std::vector<TokenSeq> split_source_sentences(std::span<const std::string> source) {
  std::vector<TokenSeq> sentences;
  TokenSeq cur;
  auto flush = [&] {
    if (!cur.empty()) sentences.push_back(std::move(cur));
    cur.clear();
  };
  for (const auto& t : source) {
    if (t == kCommitSep || t == kParaSep) {
      flush();
      continue;
    }
    cur.push_back(t);
    if (t == "." || t == "!" || t == "?") flush();
  }
  flush();
  return sentences;
}

SentenceGraph build_sentence_graph(std::vector<TokenSeq> sentences) {
  const std::size_t n = sentences.size();
  std::map<std::string, double> df;
  std::vector<std::map<std::string, double>> tf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& t : sentences[i]) tf[i][t] += 1;
    for (const auto& kv : tf[i]) df[kv.first] += 1;
  }
  std::map<std::string, double> idf;
  for (const auto& [term, count] : df) {
    idf[term] = std::log(1.0 + static_cast<double>(n) / count);
  }

  std::vector<double> norm(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [term, f] : tf[i]) norm[i] += std::pow(f * idf[term], 2);
    norm[i] = std::sqrt(norm[i]);
  }

  SentenceGraph g{std::move(sentences), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                              static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    if (norm[i] == 0) continue;
    g.similarity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (norm[j] == 0) continue;
      double dot = 0;
      for (const auto& [term, f] : tf[i]) {
        auto it = tf[j].find(term);
        if (it != tf[j].end()) dot += f * it->second * idf[term] * idf[term];
      }
      const double sim = std::clamp(dot / (norm[i] * norm[j]), 0.0, 1.0);
      g.similarity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sim;
      g.similarity(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = sim;
    }
  }
  return g;
}

std::vector<std::size_t> lexrank_order(const SentenceGraph& graph, const PageRankOptions& options) {
  std::vector<std::size_t> order(graph.sentences.size());
  std::iota(order.begin(), order.end(), 0);
  if (order.size() <= 1) return order;
  const Eigen::VectorXd scores = pagerank(graph.similarity, options);
  // Scores equal up to rounding noise count as ties and keep source order.
  std::vector<double> key(order.size());
  for (std::size_t i = 0; i < key.size(); ++i) {
    key[i] = std::round(scores(static_cast<Eigen::Index>(i)) * 1e12);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}

TokenSeq lexrank(std::span<const std::string> source, std::size_t limit) {
  SentenceGraph graph = build_sentence_graph(split_source_sentences(source));
  TokenSeq out;
  for (std::size_t idx : lexrank_order(graph)) {
    for (const auto& t : graph.sentences[idx]) {
      if (out.size() >= limit) return out;
      out.push_back(t);
    }
  }
  return out;
}

}  // namespace prdesc
