#ifndef BALREG_PRIORS_HPP
#define BALREG_PRIORS_HPP

#include "balreg/numerics.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace balreg {

/// Gaussian-mixture representation of the training label distribution.
struct GmmPrior {
  Vec weights;             // K, nonnegative, sums to 1
  std::vector<Vec> means;  // K entries of dimension d
  std::vector<Mat> covs;   // K entries, d x d, positive definite

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

/// Label densities tabulated at evenly spaced bin centers.
struct BinnedPrior {
  Mat centers;    // N x d, regular grid
  Vec densities;  // N, nonnegative
  Vec bin_width;  // per dimension

  int size() const { return static_cast<int>(densities.size()); }
  int dim() const { return static_cast<int>(centers.cols()); }
  double bin_volume() const { return bin_width.prod(); }
};

/// Labels of the current training batch, consumed by the batch Monte-Carlo loss.
struct BatchPrior {
  Mat labels;  // N x d, N >= 2 for a non-degenerate loss

  int size() const { return static_cast<int>(labels.rows()); }
  int dim() const { return static_cast<int>(labels.cols()); }
};

/// Class-probability table for the discrete (classification) instantiation.
struct DiscretePrior {
  Vec probs;  // C, nonnegative, sums to 1

  int classes() const { return static_cast<int>(probs.size()); }
};

/// EM fit of a K-component mixture to labels (n x d, one row per label).
/// Means are seeded with k-means++, covariances start at the pooled sample
/// covariance, weights start uniform. Stops on relative log-likelihood
/// improvement < 1e-8 or after 200 iterations. Deterministic given seed.
/// If ll_trace is non-null it receives the per-iteration log-likelihoods.
GmmPrior fit_gmm(const Mat& labels, int k, std::uint64_t seed,
                 std::vector<double>* ll_trace = nullptr);

/// Histogram fit at n_bins^d regular bin centers over the given per-dimension
/// range, optionally smoothed with a Gaussian kernel of the given bandwidth
/// (label units; 0 means raw histogram), then normalized so that
/// sum(densities) * bin_volume == 1. Labels outside the range are clamped to
/// edge bins; it is an error if every label is out of range.
BinnedPrior fit_binned(const Mat& labels, int n_bins,
                       const std::vector<std::pair<double, double>>& range,
                       double smoothing_bandwidth);

/// log sum_i w_i N(point; mu_i, Sigma_i) via log_sum_exp.
double gmm_log_density(const GmmPrior& prior, const Eigen::Ref<const Vec>& point);

}  // namespace balreg

#endif  // BALREG_PRIORS_HPP
