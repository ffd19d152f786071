#include "prdesc/adam.hpp"

#include <cmath>
#include <vector>

namespace prdesc {

AdamState AdamState::zeros(const ModelConfig& config) {
  return AdamState{ModelParams::zeros(config), ModelParams::zeros(config), 0};
}

namespace {

// Flat views over every tensor of a ModelParams, in visit order.
std::vector<Eigen::Map<Eigen::VectorXd>> flat(ModelParams& p) {
  std::vector<Eigen::Map<Eigen::VectorXd>> out;
  p.visit([&](std::string_view, auto& t) { out.emplace_back(t.data(), t.size()); });
  return out;
}

std::vector<Eigen::Map<const Eigen::VectorXd>> flat(const ModelParams& p) {
  std::vector<Eigen::Map<const Eigen::VectorXd>> out;
  p.visit([&](std::string_view, const auto& t) { out.emplace_back(t.data(), t.size()); });
  return out;
}

}  // namespace

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               const AdamOptions& options) {
  check_finite(grads);
  state.t += 1;
  const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.t));

  auto p = flat(params);
  auto g = flat(grads);
  auto m = flat(state.m);
  auto v = flat(state.v);
  for (std::size_t k = 0; k < p.size(); ++k) {
    m[k] = options.beta1 * m[k] + (1.0 - options.beta1) * g[k];
    v[k] = options.beta2 * v[k] + (1.0 - options.beta2) * g[k].cwiseProduct(g[k]);
    for (Eigen::Index i = 0; i < p[k].size(); ++i) {
      const double m_hat = m[k](i) / bc1;
      const double v_hat = v[k](i) / bc2;
      p[k](i) -= lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
  }
}

double clip_global_norm(ModelParams& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm && norm > 0) {
    const double scale = max_norm / norm;
    grads.visit([&](std::string_view, auto& t) { t *= scale; });
  }
  return norm;
}

}  // namespace prdesc
