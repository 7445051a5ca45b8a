#include "balreg/model.hpp"

#include <cmath>
#include <stdexcept>

namespace balreg {

long ModelParams::param_count() const {
  long n = 0;
  for (const Mat& w : weights) n += w.size();
  for (const Vec& b : biases) n += b.size();
  return n;
}

bool ModelParams::all_finite() const {
  for (const Mat& w : weights)
    if (!w.allFinite()) return false;
  for (const Vec& b : biases)
    if (!b.allFinite()) return false;
  return std::isfinite(noise.log_sigma);
}

ModelParams init_model(ModelKind kind, int input_dim, int output_dim,
                       const std::vector<int>& hidden, NoiseScale noise, Rng& rng) {
  if (input_dim < 1 || output_dim < 1)
    throw std::invalid_argument("init_model: dimensions must be >= 1");
  ModelParams model;
  model.kind = kind;
  model.noise = noise;

  std::vector<int> sizes;
  sizes.push_back(input_dim);
  if (kind == ModelKind::Mlp)
    for (int h : hidden) {
      if (h < 1) throw std::invalid_argument("init_model: hidden size must be >= 1");
      sizes.push_back(h);
    }
  sizes.push_back(output_dim);

  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Mat w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vec::Zero(fan_out));
  }
  return model;
}

Vec forward(const ModelParams& model, const Vec& x) {
  ForwardCache cache;
  return forward_cached(model, x, cache);
}

Vec forward_cached(const ModelParams& model, const Vec& x, ForwardCache& cache) {
  if (x.size() != model.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  cache.acts.clear();
  cache.acts.push_back(x);
  Vec a = x;
  const size_t layers = model.weights.size();
  for (size_t l = 0; l < layers; ++l) {
    Vec z = model.weights[l] * a + model.biases[l];
    if (l + 1 < layers) z = z.array().tanh();
    cache.acts.push_back(z);
    a = std::move(z);
  }
  return a;
}

void backward(const ModelParams& model, const ForwardCache& cache, const Vec& grad_out,
              std::vector<Mat>& grad_w, std::vector<Vec>& grad_b) {
  const size_t layers = model.weights.size();
  if (grad_w.size() != layers || grad_b.size() != layers)
    throw std::invalid_argument("backward: gradient accumulator shape mismatch");
  Vec delta = grad_out;
  for (size_t l = layers; l-- > 0;) {
    grad_w[l].noalias() += delta * cache.acts[l].transpose();
    grad_b[l] += delta;
    if (l > 0) {
      Vec upstream = model.weights[l].transpose() * delta;
      // through tanh: act' = 1 - act^2
      delta = upstream.array() * (1.0 - cache.acts[l].array().square());
    }
  }
}

Vec pack_params(const ModelParams& model, bool include_sigma) {
  Vec flat(model.param_count() + (include_sigma ? 1 : 0));
  Eigen::Index at = 0;
  for (const Mat& w : model.weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat(at++) = w(r, c);
  }
  for (const Vec& b : model.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) flat(at++) = b(i);
  if (include_sigma) flat(at++) = model.noise.log_sigma;
  return flat;
}

void unpack_params(const Vec& flat, ModelParams& model, bool include_sigma) {
  Eigen::Index at = 0;
  for (Mat& w : model.weights)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat(at++);
  for (Vec& b : model.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = flat(at++);
  if (include_sigma) model.noise.log_sigma = flat(at++);
  if (at != flat.size()) throw std::invalid_argument("unpack_params: size mismatch");
}

Vec pack_grads(const ModelParams& model, const std::vector<Mat>& grad_w,
               const std::vector<Vec>& grad_b, double grad_log_sigma,
               bool include_sigma) {
  Vec flat(model.param_count() + (include_sigma ? 1 : 0));
  Eigen::Index at = 0;
  for (const Mat& w : grad_w)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat(at++) = w(r, c);
  for (const Vec& b : grad_b)
    for (Eigen::Index i = 0; i < b.size(); ++i) flat(at++) = b(i);
  if (include_sigma) flat(at++) = grad_log_sigma;
  return flat;
}

}  // namespace balreg
