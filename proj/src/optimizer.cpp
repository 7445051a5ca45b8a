#include "balreg/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace balreg {

void optimizer_step(Vec& params, const Vec& grads, OptimizerState& state,
                    const OptimizerSpec& spec) {
  if (params.size() != grads.size())
    throw std::invalid_argument("optimizer_step: shape mismatch");
  if (!grads.allFinite())
    throw std::invalid_argument("optimizer_step: non-finite gradient");

  if (const auto* sgd = std::get_if<SgdSpec>(&spec)) {
    if (!(sgd->lr > 0.0)) throw std::invalid_argument("optimizer_step: lr must be > 0");
    if (state.m.size() != params.size()) state.m = Vec::Zero(params.size());
    state.m = sgd->momentum * state.m + grads;
    params -= sgd->lr * state.m;
    return;
  }

  const auto& adam = std::get<AdamSpec>(spec);
  if (!(adam.lr > 0.0)) throw std::invalid_argument("optimizer_step: lr must be > 0");
  if (state.m.size() != params.size()) {
    state.m = Vec::Zero(params.size());
    state.v = Vec::Zero(params.size());
    state.step = 0;
  }
  state.step += 1;
  state.m = adam.beta1 * state.m + (1.0 - adam.beta1) * grads;
  state.v = adam.beta2 * state.v + (1.0 - adam.beta2) * grads.array().square().matrix();
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
  const Vec m_hat = state.m / bc1;
  const Vec v_hat = state.v / bc2;
  params.array() -= adam.lr * m_hat.array() / (v_hat.array().sqrt() + adam.eps);
}

}  // namespace balreg
