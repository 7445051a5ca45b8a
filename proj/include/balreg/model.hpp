#ifndef BALREG_MODEL_HPP
#define BALREG_MODEL_HPP

#include "balreg/losses.hpp"
#include "balreg/numerics.hpp"
#include "balreg/rng.hpp"

#include <vector>

namespace balreg {

enum class ModelKind { Linear, Mlp };

/// Trainable regressor parameters. Linear holds one affine layer; Mlp holds a
/// stack of affine layers with tanh on all but the last. The noise scale
/// rides along so it can be optimized jointly.
struct ModelParams {
  ModelKind kind = ModelKind::Linear;
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  NoiseScale noise;

  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
  long param_count() const;
  bool all_finite() const;
};

/// Seeded init: uniform +-1/sqrt(fan_in) weights, zero biases.
ModelParams init_model(ModelKind kind, int input_dim, int output_dim,
                       const std::vector<int>& hidden, NoiseScale noise, Rng& rng);

Vec forward(const ModelParams& model, const Vec& x);

/// Per-layer activations kept for the backward pass; acts[0] is the input.
struct ForwardCache {
  std::vector<Vec> acts;
};

Vec forward_cached(const ModelParams& model, const Vec& x, ForwardCache& cache);

/// Accumulates parameter gradients for one sample given dL/d(output).
void backward(const ModelParams& model, const ForwardCache& cache, const Vec& grad_out,
              std::vector<Mat>& grad_w, std::vector<Vec>& grad_b);

/// Flat parameter packing (weights row-major per layer, then biases, then
/// log sigma when included). Optimizers work on the flat view.
Vec pack_params(const ModelParams& model, bool include_sigma);
void unpack_params(const Vec& flat, ModelParams& model, bool include_sigma);
Vec pack_grads(const ModelParams& model, const std::vector<Mat>& grad_w,
               const std::vector<Vec>& grad_b, double grad_log_sigma,
               bool include_sigma);

}  // namespace balreg

#endif  // BALREG_MODEL_HPP
