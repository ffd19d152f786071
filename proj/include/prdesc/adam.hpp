#pragma once

#include "prdesc/model.hpp"

namespace prdesc {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  long t = 0;

  static AdamState zeros(const ModelConfig& config);
};

/// One bias-corrected Adam update of `params` in place. Throws
/// DivergenceError if `grads` holds a non-finite value; nothing is modified
/// in that case.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               const AdamOptions& options = {});

/// Scales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_global_norm(ModelParams& grads, double max_norm);

}  // namespace prdesc
