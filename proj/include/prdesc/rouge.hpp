#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prdesc/preprocess.hpp"

namespace prdesc {

/// Porter (1980) suffix stripping, steps 1a-5b, as published. Expects
/// lowercase ASCII; words of length <= 2 are returned unchanged.
std::string porter_stem(std::string_view word);

/// Recall, precision and F1 as percentages in [0, 100].
struct RougeScore {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

/// F1 = 2RP / (R + P), or 0 when R + P = 0.
RougeScore make_score(double recall, double precision);

/// Raw counts behind a score; corpus scores sum these before dividing.
struct OverlapCounts {
  double matches = 0;
  double ref_total = 0;
  double gen_total = 0;

  OverlapCounts& operator+=(const OverlapCounts& o) {
    matches += o.matches;
    ref_total += o.ref_total;
    gen_total += o.gen_total;
    return *this;
  }
  RougeScore score() const;
};

enum class RougeKind { Rouge1, Rouge2, RougeL };

/// Clipped n-gram overlap counts (n >= 1).
OverlapCounts ngram_overlap(std::span<const std::string> gen, std::span<const std::string> ref, int n,
                            bool stem);
/// Longest-common-subsequence counts.
OverlapCounts lcs_overlap(std::span<const std::string> gen, std::span<const std::string> ref, bool stem);

/// Length of the longest common subsequence (O(|a||b|) dynamic programme).
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

RougeScore rouge_n(std::span<const std::string> gen, std::span<const std::string> ref, int n,
                   bool stem);
RougeScore rouge_l(std::span<const std::string> gen, std::span<const std::string> ref, bool stem);

using SequencePair = std::pair<TokenSeq, TokenSeq>;  // (generated, reference)

/// Micro-averaged corpus score: counts are summed over all pairs before the
/// division. Throws std::invalid_argument on an empty corpus.
RougeScore corpus_rouge(std::span<const SequencePair> pairs, RougeKind kind, bool stem);

}  // namespace prdesc
