#include <algorithm>
#include <map>
#include <stdexcept>

#include "prdesc/rouge.hpp"

namespace prdesc {

namespace {

TokenSeq maybe_stem(std::span<const std::string> seq, bool stem) {
  TokenSeq out(seq.begin(), seq.end());
  if (stem) {
    for (auto& t : out) t = porter_stem(t);
  }
  return out;
}

std::map<std::vector<std::string>, double> ngram_counts(const TokenSeq& seq, int n) {
  std::map<std::vector<std::string>, double> counts;
  const auto un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + un <= seq.size(); ++i) {
    counts[std::vector<std::string>(seq.begin() + static_cast<long>(i),
                                    seq.begin() + static_cast<long>(i + un))] += 1;
  }
  return counts;
}

double percent(double num, double den) { return den > 0 ? 100.0 * num / den : 0.0; }

}  // namespace

RougeScore make_score(double recall, double precision) {
  RougeScore s;
  s.recall = recall;
  s.precision = precision;
  s.f1 = recall + precision > 0 ? 2 * recall * precision / (recall + precision) : 0.0;
  return s;
}

RougeScore OverlapCounts::score() const {
  return make_score(percent(matches, ref_total), percent(matches, gen_total));
}

OverlapCounts ngram_overlap(std::span<const std::string> gen, std::span<const std::string> ref, int n,
                            bool stem) {
  if (n < 1) throw std::invalid_argument("ngram_overlap: n must be >= 1");
  const auto g = ngram_counts(maybe_stem(gen, stem), n);
  const auto r = ngram_counts(maybe_stem(ref, stem), n);
  OverlapCounts c;
  for (const auto& [gram, cnt] : r) {
    c.ref_total += cnt;
    auto it = g.find(gram);
    if (it != g.end()) c.matches += std::min(cnt, it->second);
  }
  for (const auto& [gram, cnt] : g) c.gen_total += cnt;
  return c;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

OverlapCounts lcs_overlap(std::span<const std::string> gen, std::span<const std::string> ref, bool stem) {
  const TokenSeq g = maybe_stem(gen, stem);
  const TokenSeq r = maybe_stem(ref, stem);
  OverlapCounts c;
  c.matches = static_cast<double>(lcs_length(g, r));
  c.ref_total = static_cast<double>(r.size());
  c.gen_total = static_cast<double>(g.size());
  return c;
}

RougeScore rouge_n(std::span<const std::string> gen, std::span<const std::string> ref, int n,
                   bool stem) {
  return ngram_overlap(gen, ref, n, stem).score();
}

RougeScore rouge_l(std::span<const std::string> gen, std::span<const std::string> ref, bool stem) {
  return lcs_overlap(gen, ref, stem).score();
}

RougeScore corpus_rouge(std::span<const SequencePair> pairs, RougeKind kind, bool stem) {
  if (pairs.empty()) throw std::invalid_argument("corpus_rouge: no sequence pairs");
  OverlapCounts total;
  for (const auto& [gen, ref] : pairs) {
    switch (kind) {
      case RougeKind::Rouge1: total += ngram_overlap(gen, ref, 1, stem); break;
      case RougeKind::Rouge2: total += ngram_overlap(gen, ref, 2, stem); break;
      case RougeKind::RougeL: total += lcs_overlap(gen, ref, stem); break;
    }
  }
  return total.score();
}

}  // namespace prdesc
