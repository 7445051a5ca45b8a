#include "balreg/priors.hpp"

#include "balreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace balreg {

namespace {

int count_distinct_rows(const Mat& labels) {
  std::set<std::vector<double>> seen;
  for (Eigen::Index i = 0; i < labels.rows(); ++i) {
    std::vector<double> row(labels.row(i).begin(), labels.row(i).end());
    seen.insert(std::move(row));
  }
  return static_cast<int>(seen.size());
}

// k-means++ seeding: first center uniform, the rest proportional to the
// squared distance to the nearest already-chosen center.
std::vector<Vec> kmeanspp_seeds(const Mat& labels, int k, Rng& rng) {
  const Eigen::Index n = labels.rows();
  std::vector<Vec> centers;
  centers.reserve(static_cast<size_t>(k));
  centers.push_back(labels.row(static_cast<Eigen::Index>(rng.integer(n))).transpose());
  Vec dist2 = Vec::Constant(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d2 = (labels.row(i).transpose() - centers.back()).squaredNorm();
      dist2(i) = std::min(dist2(i), d2);
    }
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      // all points coincide with a chosen center; fall back to uniform choice
      pick = static_cast<Eigen::Index>(rng.integer(n));
    }
    centers.push_back(labels.row(pick).transpose());
  }
  return centers;
}

constexpr double kCovRegularization = 1e-6;

}  // namespace

GmmPrior fit_gmm(const Mat& labels, int k, std::uint64_t seed,
                 std::vector<double>* ll_trace) {
  const Eigen::Index n = labels.rows();
  const Eigen::Index d = labels.cols();
  if (k < 1) throw std::invalid_argument("fit_gmm: k must be >= 1");
  if (n < 1 || d < 1) throw std::invalid_argument("fit_gmm: empty label set");
  if (!labels.allFinite()) throw std::invalid_argument("fit_gmm: non-finite labels");
  if (count_distinct_rows(labels) < k)
    throw std::invalid_argument("fit_gmm: fewer distinct labels than components");

  Rng rng = Rng(seed).derive(0x676d6d);  // "gmm"

  GmmPrior prior;
  prior.weights = Vec::Constant(k, 1.0 / k);
  prior.means = kmeanspp_seeds(labels, k, rng);

  const Vec pooled_mean = labels.colwise().mean().transpose();
  Mat pooled_cov = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec c = labels.row(i).transpose() - pooled_mean;
    pooled_cov.noalias() += c * c.transpose();
  }
  pooled_cov /= static_cast<double>(n);
  pooled_cov += kCovRegularization * Mat::Identity(d, d);
  prior.covs.assign(static_cast<size_t>(k), pooled_cov);

  Mat log_resp(n, k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  if (ll_trace) ll_trace->clear();

  for (int iter = 0; iter < 200; ++iter) {
    // E step in log space
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec x = labels.row(i).transpose();
      for (int j = 0; j < k; ++j) {
        log_resp(i, j) = (prior.weights(j) > 0.0 ? std::log(prior.weights(j))
                                                 : -std::numeric_limits<double>::infinity()) +
                         log_gaussian_full(x, prior.means[static_cast<size_t>(j)],
                                           prior.covs[static_cast<size_t>(j)]);
      }
      const double norm = log_sum_exp(log_resp.row(i).transpose());
      log_resp.row(i).array() -= norm;
      ll += norm;
    }
    if (ll_trace) ll_trace->push_back(ll);

    // M step
    for (int j = 0; j < k; ++j) {
      const Vec resp = log_resp.col(j).array().exp();
      const double nk = resp.sum();
      prior.weights(j) = nk / static_cast<double>(n);
      if (nk < 1e-12) continue;  // starved component keeps its parameters
      Vec mean = Vec::Zero(d);
      for (Eigen::Index i = 0; i < n; ++i) mean += resp(i) * labels.row(i).transpose();
      mean /= nk;
      Mat cov = Mat::Zero(d, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vec c = labels.row(i).transpose() - mean;
        cov.noalias() += resp(i) * c * c.transpose();
      }
      cov /= nk;
      cov += kCovRegularization * Mat::Identity(d, d);
      prior.means[static_cast<size_t>(j)] = mean;
      prior.covs[static_cast<size_t>(j)] = 0.5 * (cov + cov.transpose());
    }
    prior.weights /= prior.weights.sum();

    if (std::isfinite(prev_ll) &&
        ll - prev_ll < 1e-8 * std::abs(prev_ll)) {
      break;
    }
    prev_ll = ll;
  }
  return prior;
}

BinnedPrior fit_binned(const Mat& labels, int n_bins,
                       const std::vector<std::pair<double, double>>& range,
                       double smoothing_bandwidth) {
  const Eigen::Index n = labels.rows();
  const int d = static_cast<int>(labels.cols());
  if (n_bins < 2) throw std::invalid_argument("fit_binned: n_bins must be >= 2");
  if (n < 1) throw std::invalid_argument("fit_binned: empty label set");
  if (static_cast<int>(range.size()) != d)
    throw std::invalid_argument("fit_binned: range dimension mismatch");
  if (smoothing_bandwidth < 0.0)
    throw std::invalid_argument("fit_binned: negative bandwidth");
  for (const auto& [lo, hi] : range)
    if (!(hi > lo)) throw std::invalid_argument("fit_binned: range high must exceed low");

  Vec width(d);
  for (int j = 0; j < d; ++j) width(j) = (range[static_cast<size_t>(j)].second -
                                          range[static_cast<size_t>(j)].first) /
                                         n_bins;

  // flat tensor of n_bins^d counts, dimension-major (last dim fastest)
  long total_bins = 1;
  for (int j = 0; j < d; ++j) {
    total_bins *= n_bins;
    if (total_bins > 100'000'000L) throw std::invalid_argument("fit_binned: grid too large");
  }
  Vec counts = Vec::Zero(total_bins);

  bool any_in_range = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    long flat = 0;
    bool in_range = true;
    for (int j = 0; j < d; ++j) {
      const double lo = range[static_cast<size_t>(j)].first;
      const double hi = range[static_cast<size_t>(j)].second;
      const double y = labels(i, j);
      if (y < lo || y > hi) in_range = false;
      int idx = static_cast<int>(std::floor((y - lo) / width(j)));
      idx = std::clamp(idx, 0, n_bins - 1);
      flat = flat * n_bins + idx;
    }
    any_in_range = any_in_range || in_range;
    counts(flat) += 1.0;
  }
  if (!any_in_range) throw std::invalid_argument("fit_binned: all labels outside range");

  // separable Gaussian smoothing, one axis at a time; boundaries reflect so
  // edge bins keep their mass
  if (smoothing_bandwidth > 0.0) {
    for (int axis = 0; axis < d; ++axis) {
      const double bw = smoothing_bandwidth;
      const double w = width(axis);
      const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * bw / w)));
      Vec kernel(2 * radius + 1);
      for (int t = -radius; t <= radius; ++t)
        kernel(t + radius) = std::exp(-0.5 * (t * w) * (t * w) / (bw * bw));
      kernel /= kernel.sum();

      long inner = 1;
      for (int j = axis + 1; j < d; ++j) inner *= n_bins;
      const long outer = total_bins / (inner * n_bins);
      Vec smoothed = Vec::Zero(total_bins);
      for (long o = 0; o < outer; ++o) {
        for (long in = 0; in < inner; ++in) {
          for (int b = 0; b < n_bins; ++b) {
            const double v = counts(o * n_bins * inner + b * inner + in);
            if (v == 0.0) continue;
            for (int t = -radius; t <= radius; ++t) {
              int nb = b + t;
              if (nb < 0) nb = -nb - 1;
              if (nb >= n_bins) nb = 2 * n_bins - 1 - nb;
              if (nb < 0 || nb >= n_bins) continue;  // radius beyond one reflection
              smoothed(o * n_bins * inner + nb * inner + in) += v * kernel(t + radius);
            }
          }
        }
      }
      counts = smoothed;
    }
  }

  BinnedPrior prior;
  prior.bin_width = width;
  prior.centers.resize(total_bins, d);
  for (long flat = 0; flat < total_bins; ++flat) {
    long rem = flat;
    for (int j = d - 1; j >= 0; --j) {
      const int idx = static_cast<int>(rem % n_bins);
      rem /= n_bins;
      prior.centers(flat, j) =
          range[static_cast<size_t>(j)].first + (idx + 0.5) * width(j);
    }
  }
  const double mass = counts.sum() * prior.bin_width.prod();
  prior.densities = counts / mass;
  return prior;
}

double gmm_log_density(const GmmPrior& prior, const Eigen::Ref<const Vec>& point) {
  if (prior.components() < 1) throw std::invalid_argument("gmm_log_density: empty prior");
  if (point.size() != prior.dim())
    throw std::invalid_argument("gmm_log_density: dimension mismatch");
  Vec terms(prior.components());
  for (int j = 0; j < prior.components(); ++j) {
    terms(j) = (prior.weights(j) > 0.0 ? std::log(prior.weights(j))
                                       : -std::numeric_limits<double>::infinity()) +
               log_gaussian_full(point, prior.means[static_cast<size_t>(j)],
                                 prior.covs[static_cast<size_t>(j)]);
  }
  return log_sum_exp(terms);
}

}  // namespace balreg
