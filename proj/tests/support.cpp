#include "support.hpp"

namespace testing {

prdesc::ModelParams random_params(const prdesc::ModelConfig& config, std::uint64_t seed, double scale) {
  prdesc::ModelParams p = prdesc::ModelParams::zeros(config);
  prdesc::Rng rng(seed);
  p.visit([&](std::string_view, auto& t) {
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = prdesc::uniform(rng, -scale, scale);
  });
  return p;
}

std::vector<prdesc::ProcessedExample> copy_corpus(std::size_t n, std::uint64_t seed, std::size_t min_len,
                                                  std::size_t max_len) {
  prdesc::Rng rng(seed);
  std::vector<prdesc::ProcessedExample> out;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t len = min_len + prdesc::uniform_index(rng, max_len - min_len + 1);
    prdesc::TokenSeq seq;
    for (std::size_t i = 0; i < len; ++i) seq.push_back("w" + std::to_string(prdesc::uniform_index(rng, 10)));
    out.push_back({"toy-" + std::to_string(k), seq, seq});
  }
  return out;
}

prdesc::TokenSeq random_tokens(prdesc::Rng& rng, std::size_t max_len, int alphabet, std::size_t min_len) {
  const std::size_t len = min_len + prdesc::uniform_index(rng, max_len - min_len + 1);
  prdesc::TokenSeq out;
  for (std::size_t i = 0; i < len; ++i) {
    out.emplace_back(1, static_cast<char>('a' + prdesc::uniform_index(rng, static_cast<std::uint64_t>(alphabet))));
  }
  return out;
}

Eigen::VectorXd one_hot(std::size_t size, TokenId id) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  v(id) = 1.0;
  return v;
}

std::vector<prdesc::PullRequest> toy_pr_corpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> kActions{"fix", "add", "remove", "update", "refactor", "rename"};
  static const std::vector<std::string> kParts{"parser", "cache", "logger", "config", "router",
                                               "scheduler", "client", "buffer", "index", "session"};
  static const std::vector<std::string> kDetails{"handling", "support", "tests", "docs", "timeout", "errors"};
  prdesc::Rng rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[prdesc::uniform_index(rng, v.size())]; };
  std::vector<prdesc::PullRequest> out;
  for (std::size_t k = 0; k < n; ++k) {
    prdesc::PullRequest pr;
    pr.id = "toy/" + std::to_string(k);
    const std::size_t commits = 2 + prdesc::uniform_index(rng, 3);
    std::string first;
    for (std::size_t c = 0; c < commits; ++c) {
      const std::string action = pick(kActions);
      const std::string part = pick(kParts);
      const std::string detail = pick(kDetails);
      const std::string message = action + " " + part + " " + detail;
      if (c == 0) first = action + " the " + part + " " + detail;
      const std::string patch = "@@ -1,1 +1,3 @@\n context\n+// " + part + " " + detail + " for release " +
                                std::to_string(c + 1) + ".\n+int x" + std::to_string(c) + " = 0;\n";
      pr.commits.push_back({static_cast<std::int64_t>(1000 + 60 * c), message, patch});
    }
    pr.description = "This PR will " + first + " in the project.";
    switch (k % 10) {
      case 3: pr.description = ""; break;
      case 6: pr.commits.resize(1); break;
      case 8: pr.description = "Minor fix."; break;
      default: break;
    }
    out.push_back(std::move(pr));
  }
  return out;
}

}  // namespace testing
