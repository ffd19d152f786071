#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "prdesc/preprocess.hpp"

namespace prdesc {

inline constexpr std::size_t kBaselineLimit = 25;

/// First `limit` tokens of the commit-message paragraph (everything before the
/// first "[para-sep]"), with "[cm-sep]" separators dropped.
TokenSeq lead_cm(std::span<const std::string> source, std::size_t limit = kBaselineLimit);

struct PageRankOptions {
  double damping = 0.85;
  double eps = 1e-6;  // L1 change between iterations
  int max_iter = 100;
};

/// Power iteration on the row-normalized similarity matrix with uniform
/// teleport. All-zero rows teleport uniformly. Scores sum to 1.
Eigen::VectorXd pagerank(const Eigen::MatrixXd& similarity, const PageRankOptions& options = {});

/// Sentences of a source sequence: "[cm-sep]" / "[para-sep]" end a sentence
/// and are dropped; ".", "!" and "?" end a sentence and are kept.
std::vector<TokenSeq> split_source_sentences(std::span<const std::string> source);

struct SentenceGraph {
  std::vector<TokenSeq> sentences;
  Eigen::MatrixXd similarity;  // symmetric, unit diagonal for non-empty sentences
};

/// idf-modified cosine similarity, with idf computed over the sentences
/// themselves: idf(t) = ln(1 + N / df(t)).
SentenceGraph build_sentence_graph(std::vector<TokenSeq> sentences);

/// Sentence indices ordered by LexRank score, highest first (ties by
/// position).
std::vector<std::size_t> lexrank_order(const SentenceGraph& graph, const PageRankOptions& options = {});

/// Continuous LexRank: ranked sentences concatenated, cut to `limit` tokens.
TokenSeq lexrank(std::span<const std::string> source, std::size_t limit = kBaselineLimit);

}  // namespace prdesc
