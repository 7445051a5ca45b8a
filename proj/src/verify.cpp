#include "balreg/verify.hpp"

#include "balreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace balreg {

namespace {

// Mixture density evaluator with per-component factorizations done once, so
// quadrature grids stay cheap. Deliberately built on the plain covariances;
// the closed-form loss path works with Sigma_i + sigma^2 I instead.
struct QuadMixture {
  struct Component {
    double log_weight;
    Vec mean;
    Mat chol_lower;
    double log_norm;
  };
  std::vector<Component> components;

  explicit QuadMixture(const GmmPrior& prior) {
    const int d = prior.dim();
    for (int j = 0; j < prior.components(); ++j) {
      if (prior.weights(j) <= 0.0) continue;
      Component c;
      c.log_weight = std::log(prior.weights(j));
      c.mean = prior.means[static_cast<size_t>(j)];
      c.chol_lower = cholesky_with_jitter(prior.covs[static_cast<size_t>(j)]).matrixL();
      double log_det_half = 0.0;
      for (int i = 0; i < d; ++i) log_det_half += std::log(c.chol_lower(i, i));
      c.log_norm = -0.5 * d * log_two_pi - log_det_half;
      components.push_back(std::move(c));
    }
  }

  double log_density(const Vec& y) const {
    Vec terms(static_cast<Eigen::Index>(components.size()));
    for (size_t j = 0; j < components.size(); ++j) {
      Vec z = y - components[j].mean;
      components[j].chol_lower.triangularView<Eigen::Lower>().solveInPlace(z);
      terms(static_cast<Eigen::Index>(j)) =
          components[j].log_weight + components[j].log_norm - 0.5 * z.squaredNorm();
    }
    return log_sum_exp(terms);
  }
};

double mixture_extent_scale(const GmmPrior& prior, double sigma) {
  double s = sigma;
  for (const Mat& cov : prior.covs) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    s = std::max(s, std::sqrt(eig.eigenvalues().maxCoeff()));
  }
  return s;
}

}  // namespace

double gai_loss_by_quadrature(const Vec& target, const Vec& pred, double sigma,
                              const GmmPrior& prior, int points_per_dim) {
  const int d = prior.dim();
  if (d > 2) throw std::invalid_argument("gai_loss_by_quadrature: d <= 2 only");
  if (points_per_dim < 16) throw std::invalid_argument("gai_loss_by_quadrature: grid too coarse");

  const double scale = mixture_extent_scale(prior, sigma);
  Vec lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    lo(j) = pred(j);
    hi(j) = pred(j);
    for (const Vec& mean : prior.means) {
      lo(j) = std::min(lo(j), mean(j));
      hi(j) = std::max(hi(j), mean(j));
    }
    lo(j) -= 12.0 * scale;
    hi(j) += 12.0 * scale;
  }

  const QuadMixture mixture(prior);
  const IsotropicGaussian pred_dist{pred, sigma};
  const int m = points_per_dim;
  std::vector<double> log_terms;

  if (d == 1) {
    log_terms.reserve(static_cast<size_t>(m));
    const double h = (hi(0) - lo(0)) / (m - 1);
    Vec y(1);
    for (int i = 0; i < m; ++i) {
      y(0) = lo(0) + i * h;
      const double lw = std::log(h) + ((i == 0 || i == m - 1) ? std::log(0.5) : 0.0);
      log_terms.push_back(log_gaussian_iso(y, pred_dist) + mixture.log_density(y) + lw);
    }
  } else {
    log_terms.reserve(static_cast<size_t>(m) * m);
    const double h0 = (hi(0) - lo(0)) / (m - 1);
    const double h1 = (hi(1) - lo(1)) / (m - 1);
    Vec y(2);
    for (int i = 0; i < m; ++i) {
      y(0) = lo(0) + i * h0;
      const double w0 = (i == 0 || i == m - 1) ? 0.5 : 1.0;
      for (int j = 0; j < m; ++j) {
        y(1) = lo(1) + j * h1;
        const double w1 = (j == 0 || j == m - 1) ? 0.5 : 1.0;
        log_terms.push_back(log_gaussian_iso(y, pred_dist) + mixture.log_density(y) +
                            std::log(h0 * h1 * w0 * w1));
      }
    }
  }
  const double log_integral = log_sum_exp(log_terms);
  return -log_gaussian_iso(target, pred_dist) + log_integral;
}

namespace {

GmmPrior random_gmm(Rng& rng, int d, int k) {
  GmmPrior prior;
  prior.weights.resize(k);
  for (int j = 0; j < k; ++j) prior.weights(j) = rng.uniform(0.2, 1.0);
  prior.weights /= prior.weights.sum();
  for (int j = 0; j < k; ++j) {
    Vec mean(d);
    for (int i = 0; i < d; ++i) mean(i) = rng.uniform(-3.0, 3.0);
    prior.means.push_back(std::move(mean));
    Mat a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = rng.normal();
    Mat cov = a * a.transpose() / d + 0.3 * Mat::Identity(d, d);
    prior.covs.push_back(make_covariance(cov));
  }
  return prior;
}

Vec random_vec(Rng& rng, int d, double lo, double hi) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

Vec sample_gmm(const GmmPrior& prior, Rng& rng) {
  double pick = rng.uniform();
  int component = prior.components() - 1;
  for (int j = 0; j < prior.components(); ++j) {
    pick -= prior.weights(j);
    if (pick <= 0.0) {
      component = j;
      break;
    }
  }
  const int d = prior.dim();
  Vec z(d);
  for (int i = 0; i < d; ++i) z(i) = rng.normal();
  const Mat chol = cholesky_with_jitter(prior.covs[static_cast<size_t>(component)]).matrixL();
  return prior.means[static_cast<size_t>(component)] + chol * z;
}

double rel_err(const Vec& got, const Vec& want) {
  const double denom = std::max(want.cwiseAbs().maxCoeff(), 1e-6);
  return (got - want).cwiseAbs().maxCoeff() / denom;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-6);
}

constexpr double kFdStep = 1e-5;

}  // namespace

std::vector<CheckResult> verify_gradcheck(std::uint64_t seed) {
  Rng rng = Rng(seed).derive(0x67726164);  // "grad"
  const int trials = 100;
  const int dims[] = {1, 2, 3};
  const int ks[] = {1, 2, 4};
  std::vector<CheckResult> results;

  auto run_kind = [&](const std::string& name, auto&& instance) {
    CheckResult check{name, false, 0.0, 1e-4, trials};
    for (int t = 0; t < trials; ++t) check.max_error = std::max(check.max_error, instance(t));
    check.pass = check.max_error < check.tolerance;
    results.push_back(check);
  };

  run_kind("grad mse", [&](int t) {
    const int d = dims[t % 3];
    const Vec target = random_vec(rng, d, -2.0, 2.0);
    const Vec pred = random_vec(rng, d, -2.0, 2.0);
    const LossEval eval = mse_loss(target, pred);
    const Vec fd = finite_diff_grad(
        [&](const Vec& p) { return mse_loss(target, p).value; }, pred, kFdStep);
    return rel_err(eval.grad_pred, fd);
  });

  run_kind("grad reweight", [&](int t) {
    const int d = dims[t % 3];
    const Vec target = random_vec(rng, d, -2.0, 2.0);
    const Vec pred = random_vec(rng, d, -2.0, 2.0);
    const double density = rng.uniform(0.05, 2.0);
    const LossEval eval = reweighted_mse_loss(target, pred, density, 1e4);
    const Vec fd = finite_diff_grad(
        [&](const Vec& p) { return reweighted_mse_loss(target, p, density, 1e4).value; },
        pred, kFdStep);
    return rel_err(eval.grad_pred, fd);
  });

  run_kind("grad gai", [&](int t) {
    const int d = dims[t % 3];
    const GmmPrior prior = random_gmm(rng, d, ks[(t / 3) % 3]);
    const NoiseScale sigma = NoiseScale::learnable_init(rng.uniform(0.5, 2.0));
    const Vec target = random_vec(rng, d, -2.0, 2.0);
    const Vec pred = random_vec(rng, d, -2.0, 2.0);
    const LossEval eval = gai_loss(target, pred, sigma, prior);
    const Vec fd = finite_diff_grad(
        [&](const Vec& p) { return gai_loss(target, p, sigma, prior).value; }, pred, kFdStep);
    const double fd_sigma = finite_diff_scalar(
        [&](double ls) {
          return gai_loss(target, pred, NoiseScale{ls, true}, prior).value;
        },
        sigma.log_sigma, kFdStep);
    return std::max(rel_err(eval.grad_pred, fd), rel_err(eval.grad_log_sigma, fd_sigma));
  });

  run_kind("grad bmc", [&](int t) {
    const int d = dims[t % 3];
    const int n = 8;
    BatchPrior batch;
    batch.labels.resize(n, d);
    for (int i = 0; i < n; ++i) batch.labels.row(i) = random_vec(rng, d, -2.0, 2.0).transpose();
    const Vec target = batch.labels.row(static_cast<Eigen::Index>(rng.integer(n))).transpose();
    const Vec pred = random_vec(rng, d, -2.0, 2.0);
    const NoiseScale sigma = NoiseScale::learnable_init(rng.uniform(0.5, 2.0));
    const LossEval eval = bmc_loss(target, pred, sigma, batch);
    const Vec fd = finite_diff_grad(
        [&](const Vec& p) { return bmc_loss(target, p, sigma, batch).value; }, pred, kFdStep);
    const double fd_sigma = finite_diff_scalar(
        [&](double ls) {
          return bmc_loss(target, pred, NoiseScale{ls, true}, batch).value;
        },
        sigma.log_sigma, kFdStep);
    return std::max(rel_err(eval.grad_pred, fd), rel_err(eval.grad_log_sigma, fd_sigma));
  });

  run_kind("grad bni", [&](int t) {
    const int d = dims[t % 3];
    const int bins_per_dim = d == 3 ? 5 : 9;
    std::vector<std::pair<double, double>> range(static_cast<size_t>(d), {-4.0, 4.0});
    Mat labels(64, d);
    for (int i = 0; i < 64; ++i) labels.row(i) = random_vec(rng, d, -3.5, 3.5).transpose();
    const BinnedPrior prior = fit_binned(labels, bins_per_dim, range, 1.0);
    const Vec target = random_vec(rng, d, -2.0, 2.0);
    const Vec pred = random_vec(rng, d, -2.0, 2.0);
    const NoiseScale sigma = NoiseScale::learnable_init(rng.uniform(0.5, 2.0));
    const LossEval eval = bni_loss(target, pred, sigma, prior);
    const Vec fd = finite_diff_grad(
        [&](const Vec& p) { return bni_loss(target, p, sigma, prior).value; }, pred, kFdStep);
    const double fd_sigma = finite_diff_scalar(
        [&](double ls) {
          return bni_loss(target, pred, NoiseScale{ls, true}, prior).value;
        },
        sigma.log_sigma, kFdStep);
    return std::max(rel_err(eval.grad_pred, fd), rel_err(eval.grad_log_sigma, fd_sigma));
  });

  run_kind("grad balanced_softmax", [&](int t) {
    const int c = 2 + t % 7;
    Vec logits = random_vec(rng, c, -2.0, 2.0);
    DiscretePrior prior;
    prior.probs = random_vec(rng, c, 0.05, 1.0);
    prior.probs /= prior.probs.sum();
    const int target = static_cast<int>(rng.integer(c));
    const LossEval eval = balanced_softmax_nll(logits, target, prior);
    const Vec fd = finite_diff_grad(
        [&](const Vec& l) { return balanced_softmax_nll(l, target, prior).value; }, logits,
        kFdStep);
    return rel_err(eval.grad_pred, fd);
  });

  return results;
}

std::vector<CheckResult> verify_quadrature(std::uint64_t seed) {
  Rng rng = Rng(seed).derive(0x71756164);  // "quad"
  CheckResult check{"gai vs grid quadrature", false, 0.0, 1e-6, 50};
  for (int t = 0; t < 50; ++t) {
    const int d = t % 5 < 3 ? 1 : 2;  // 30 one-dimensional, 20 two-dimensional
    const int k = 1 + static_cast<int>(rng.integer(4));
    const GmmPrior prior = random_gmm(rng, d, k);
    const double sigma = rng.uniform(0.5, 1.5);
    const Vec target = random_vec(rng, d, -2.0, 2.0);
    const Vec pred = random_vec(rng, d, -2.0, 2.0);
    const double closed = gai_loss(target, pred, NoiseScale::fixed(sigma), prior).value;
    const double quad =
        gai_loss_by_quadrature(target, pred, sigma, prior, d == 1 ? 4001 : 501);
    check.max_error = std::max(check.max_error, std::abs(closed - quad));
  }
  check.pass = check.max_error < check.tolerance;
  return {check};
}

std::vector<CheckResult> verify_theorem1(std::uint64_t seed) {
  Rng rng = Rng(seed).derive(0x746831);  // "th1"
  CheckResult check{"discrete conversion identity", false, 0.0, 1e-12, 1000};
  for (int t = 0; t < 1000; ++t) {
    const int cy = 2 + static_cast<int>(rng.integer(7));
    const int cx = 2 + static_cast<int>(rng.integer(7));
    Mat likelihood(cx, cy);  // p(x | y)
    for (int y = 0; y < cy; ++y) {
      for (int x = 0; x < cx; ++x) likelihood(x, y) = rng.uniform(0.05, 1.0);
      likelihood.col(y) /= likelihood.col(y).sum();
    }
    Vec p_train = random_vec(rng, cy, 0.05, 1.0);
    p_train /= p_train.sum();
    DiscretePrior prior{p_train};

    const double logit_shift = rng.uniform(-3.0, 3.0);
    for (int x = 0; x < cx; ++x) {
      // direct Bayes under the training label distribution
      Vec direct(cy);
      for (int y = 0; y < cy; ++y) direct(y) = likelihood(x, y) * p_train(y);
      direct /= direct.sum();
      // balanced posterior (uniform label prior), then the discrete reconversion
      Vec balanced(cy);
      for (int y = 0; y < cy; ++y) balanced(y) = likelihood(x, y);
      balanced /= balanced.sum();
      const Vec logits = balanced.array().log() + logit_shift;
      for (int y = 0; y < cy; ++y) {
        const double reconverted =
            std::exp(-balanced_softmax_nll(logits, y, prior).value);
        check.max_error = std::max(check.max_error, std::abs(reconverted - direct(y)));
      }
    }
  }
  check.pass = check.max_error < check.tolerance;
  return {check};
}

std::vector<CheckResult> verify_bmc_convergence(std::uint64_t seed) {
  CheckResult check{"bmc batch integral vs analytic", false, 0.0, 1e-2, 3};
  const int n = 100000;
  for (int t = 0; t < 3; ++t) {
    Rng rng = Rng(seed).derive(0x626d63 + static_cast<std::uint64_t>(t));  // "bmc"
    const int d = t == 2 ? 2 : 1;
    const GmmPrior prior = random_gmm(rng, d, 2);
    const double sigma = rng.uniform(0.8, 1.5);
    const Vec pred = random_vec(rng, d, -1.0, 1.0);

    Vec log_terms(n);
    const IsotropicGaussian pred_dist{pred, sigma};
    for (int i = 0; i < n; ++i)
      log_terms(i) = log_gaussian_iso(sample_gmm(prior, rng), pred_dist);
    const double batch_integral = std::exp(log_sum_exp(log_terms) - std::log(double(n)));

    Vec analytic_terms(prior.components());
    const Mat noise = sigma * sigma * Mat::Identity(d, d);
    for (int j = 0; j < prior.components(); ++j)
      analytic_terms(j) = std::log(prior.weights(j)) +
                          log_gaussian_full(pred, prior.means[static_cast<size_t>(j)],
                                            prior.covs[static_cast<size_t>(j)] + noise);
    const double analytic = std::exp(log_sum_exp(analytic_terms));

    check.max_error = std::max(check.max_error, rel_err(batch_integral, analytic));
  }
  check.pass = check.max_error < check.tolerance;
  return {check};
}

std::vector<CheckResult> run_verify_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "gradcheck") return verify_gradcheck(seed);
  if (suite == "quadrature") return verify_quadrature(seed);
  if (suite == "theorem1") return verify_theorem1(seed);
  if (suite == "bmc-convergence") return verify_bmc_convergence(seed);
  if (suite == "all") {
    std::vector<CheckResult> all;
    for (const char* name : {"gradcheck", "quadrature", "theorem1", "bmc-convergence"}) {
      auto part = run_verify_suite(name, seed);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw std::invalid_argument("unknown verify suite: " + suite);
}

}  // namespace balreg
