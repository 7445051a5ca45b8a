#ifndef BALREG_NUMERICS_HPP
#define BALREG_NUMERICS_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace balreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double log_two_pi = 1.8378770664093453;

/// Mean-and-scale form of the prediction distribution N(y; mean, sigma^2 I).
struct IsotropicGaussian {
  Vec mean;
  double sigma = 1.0;
};

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

inline bool all_finite(const Eigen::Ref<const Vec>& v) {
  return v.allFinite();
}

}  // namespace detail

/// log N(point; mean, sigma^2 I) for a shared dimension d >= 1.
inline double log_gaussian_iso(const Eigen::Ref<const Vec>& point,
                               const Eigen::Ref<const Vec>& mean,
                               double sigma) {
  detail::require(point.size() == mean.size() && point.size() >= 1,
                  "log_gaussian_iso: dimension mismatch");
  detail::require(detail::all_finite(point) && detail::all_finite(mean) &&
                      std::isfinite(sigma) && sigma > 0.0,
                  "log_gaussian_iso: non-finite input or sigma <= 0");
  const double d = static_cast<double>(point.size());
  const double sq = (point - mean).squaredNorm();
  return -0.5 * d * log_two_pi - d * std::log(sigma) - sq / (2.0 * sigma * sigma);
}

inline double log_gaussian_iso(const Eigen::Ref<const Vec>& point,
                               const IsotropicGaussian& g) {
  return log_gaussian_iso(point, g.mean, g.sigma);
}

/// Cholesky with jitter escalation: adds 1e-10 * I, growing x10 up to 1e-6 * I,
/// before giving up. Symmetry is required up to 1e-10 absolute.
inline Eigen::LLT<Mat> cholesky_with_jitter(const Eigen::Ref<const Mat>& cov) {
  detail::require(cov.rows() == cov.cols() && cov.rows() >= 1,
                  "cholesky_with_jitter: matrix must be square");
  detail::require(cov.allFinite(), "cholesky_with_jitter: non-finite entries");
  detail::require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10,
                  "cholesky_with_jitter: matrix not symmetric");
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) return llt;
  const Mat eye = Mat::Identity(cov.rows(), cov.cols());
  for (double jitter = 1e-10; jitter <= 1e-6 * (1.0 + 1e-12); jitter *= 10.0) {
    llt.compute(cov + jitter * eye);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw std::runtime_error("cholesky_with_jitter: matrix not positive definite");
}

/// Full-covariance log-density via a triangular factorization of cov.
inline double log_gaussian_full(const Eigen::Ref<const Vec>& point,
                                const Eigen::Ref<const Vec>& mean,
                                const Eigen::Ref<const Mat>& cov) {
  detail::require(point.size() == mean.size() && point.size() == cov.rows(),
                  "log_gaussian_full: dimension mismatch");
  detail::require(detail::all_finite(point) && detail::all_finite(mean),
                  "log_gaussian_full: non-finite input");
  const Eigen::LLT<Mat> llt = cholesky_with_jitter(cov);
  const double d = static_cast<double>(point.size());
  const Mat& l = llt.matrixLLT();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det_half += std::log(l(i, i));
  Vec z = point - mean;
  l.triangularView<Eigen::Lower>().solveInPlace(z);
  return -0.5 * d * log_two_pi - log_det_half - 0.5 * z.squaredNorm();
}

/// log sum_i exp(terms_i), shifted by the max so large inputs never overflow.
/// -inf terms contribute zero mass; at least one finite term is required.
inline double log_sum_exp(std::span<const double> terms) {
  detail::require(!terms.empty(), "log_sum_exp: empty input");
  double hi = -std::numeric_limits<double>::infinity();
  for (double t : terms) {
    detail::require(!std::isnan(t) && t < std::numeric_limits<double>::infinity(),
                    "log_sum_exp: NaN or +inf term");
    hi = std::max(hi, t);
  }
  detail::require(std::isfinite(hi), "log_sum_exp: no finite term");
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

inline double log_sum_exp(const Eigen::Ref<const Vec>& terms) {
  return log_sum_exp(std::span<const double>(terms.data(),
                                             static_cast<size_t>(terms.size())));
}

/// Central-difference gradient, (f(x + h e_i) - f(x - h e_i)) / 2h per component.
inline Vec finite_diff_grad(const std::function<double(const Vec&)>& f,
                            const Eigen::Ref<const Vec>& at, double step) {
  detail::require(step > 0.0 && step <= 1e-2, "finite_diff_grad: step out of (0, 1e-2]");
  detail::require(detail::all_finite(at), "finite_diff_grad: non-finite point");
  Vec grad(at.size());
  Vec probe = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    probe(i) = at(i) + step;
    const double up = f(probe);
    probe(i) = at(i) - step;
    const double down = f(probe);
    probe(i) = at(i);
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::runtime_error("finite_diff_grad: non-finite function value");
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

/// Central difference for a scalar argument (used for noise-scale gradients).
inline double finite_diff_scalar(const std::function<double(double)>& f, double at,
                                 double step) {
  detail::require(step > 0.0 && step <= 1e-2, "finite_diff_scalar: step out of (0, 1e-2]");
  const double up = f(at + step);
  const double down = f(at - step);
  if (!std::isfinite(up) || !std::isfinite(down))
    throw std::runtime_error("finite_diff_scalar: non-finite function value");
  return (up - down) / (2.0 * step);
}

/// Symmetrize and validate a covariance candidate (symmetric within 1e-10,
/// positive definite after jitter escalation).
inline Mat make_covariance(Mat cov) {
  detail::require(cov.rows() == cov.cols(), "make_covariance: matrix must be square");
  detail::require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10,
                  "make_covariance: matrix not symmetric");
  cov = 0.5 * (cov + cov.transpose()).eval();
  cholesky_with_jitter(cov);  // throws if not PD
  return cov;
}

}  // namespace balreg

#endif  // BALREG_NUMERICS_HPP
