#ifndef BALREG_OPTIMIZER_HPP
#define BALREG_OPTIMIZER_HPP

#include "balreg/numerics.hpp"

#include <variant>

namespace balreg {

struct SgdSpec {
  double lr = 1e-3;
  double momentum = 0.9;
};

struct AdamSpec {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

using OptimizerSpec = std::variant<SgdSpec, AdamSpec>;

/// First/second moment buffers; sized on first use. `step` counts Adam updates
/// for bias correction.
struct OptimizerState {
  Vec m;
  Vec v;
  long step = 0;
};

/// In-place update. SGD: v <- mu v + g, p <- p - lr v.
/// Adam: standard bias-corrected moment update.
void optimizer_step(Vec& params, const Vec& grads, OptimizerState& state,
                    const OptimizerSpec& spec);

}  // namespace balreg

#endif  // BALREG_OPTIMIZER_HPP
