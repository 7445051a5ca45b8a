#include "balreg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace balreg {

LossKind loss_kind_from_name(std::string_view name) {
  if (name == "mse") return LossKind::Mse;
  if (name == "reweight") return LossKind::ReweightedMse;
  if (name == "gai") return LossKind::Gai;
  if (name == "bmc") return LossKind::Bmc;
  if (name == "bni") return LossKind::Bni;
  if (name == "balanced_softmax") return LossKind::BalancedSoftmax;
  throw std::invalid_argument("unknown loss kind: " + std::string(name));
}

std::string_view loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Mse: return "mse";
    case LossKind::ReweightedMse: return "reweight";
    case LossKind::Gai: return "gai";
    case LossKind::Bmc: return "bmc";
    case LossKind::Bni: return "bni";
    case LossKind::BalancedSoftmax: return "balanced_softmax";
  }
  throw std::logic_error("loss_kind_name: bad enum value");
}

NoiseScale NoiseScale::fixed(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("NoiseScale: sigma must be > 0");
  return NoiseScale{std::log(sigma), false};
}

NoiseScale NoiseScale::learnable_init(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("NoiseScale: sigma must be > 0");
  return NoiseScale{std::log(sigma), true};
}

namespace {

void check_pair(const Vec& target, const Vec& pred, const char* who) {
  if (target.size() != pred.size() || target.size() < 1)
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  if (!target.allFinite() || !pred.allFinite())
    throw std::invalid_argument(std::string(who) + ": non-finite input");
}

}  // namespace

LossEval mse_loss(const Vec& target, const Vec& pred) {
  check_pair(target, pred, "mse_loss");
  LossEval out;
  out.value = (target - pred).squaredNorm();
  out.grad_pred = 2.0 * (pred - target);
  return out;
}

LossEval reweighted_mse_loss(const Vec& target, const Vec& pred,
                             double prior_density_at_target, double clip) {
  if (prior_density_at_target < 0.0 || std::isnan(prior_density_at_target))
    throw std::invalid_argument("reweighted_mse_loss: negative or NaN density");
  if (!(clip > 0.0)) throw std::invalid_argument("reweighted_mse_loss: clip must be > 0");
  const double weight =
      prior_density_at_target > 0.0 ? std::min(1.0 / prior_density_at_target, clip) : clip;
  LossEval out = mse_loss(target, pred);
  out.value *= weight;
  out.grad_pred *= weight;
  return out;
}

GaiEvaluator::GaiEvaluator(const GmmPrior& prior, double sigma)
    : dim_(prior.dim()), sigma_(sigma) {
  if (prior.components() < 1) throw std::invalid_argument("GaiEvaluator: empty prior");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("GaiEvaluator: sigma must be positive and finite");
  const int d = dim_;
  const Mat noise = sigma * sigma * Mat::Identity(d, d);
  components_.reserve(static_cast<size_t>(prior.components()));
  for (int j = 0; j < prior.components(); ++j) {
    if (prior.weights(j) <= 0.0) continue;
    Component c;
    c.log_weight = std::log(prior.weights(j));
    c.mean = prior.means[static_cast<size_t>(j)];
    const Mat a = prior.covs[static_cast<size_t>(j)] + noise;
    c.chol_lower = cholesky_with_jitter(a).matrixL();
    double log_det_half = 0.0;
    for (int i = 0; i < d; ++i) log_det_half += std::log(c.chol_lower(i, i));
    c.log_norm = -0.5 * d * log_two_pi - log_det_half;
    const Mat l_inv = c.chol_lower.triangularView<Eigen::Lower>().solve(Mat::Identity(d, d));
    c.trace_inv = l_inv.squaredNorm();
    components_.push_back(std::move(c));
  }
  if (components_.empty())
    throw std::invalid_argument("GaiEvaluator: all mixture weights are zero");
}

LossEval GaiEvaluator::operator()(const Vec& target, const Vec& pred,
                                  bool sigma_learnable) const {
  check_pair(target, pred, "gai_loss");
  if (target.size() != dim_) throw std::invalid_argument("gai_loss: dimension mismatch");
  const double s2 = sigma_ * sigma_;
  const double d = static_cast<double>(dim_);
  const size_t k = components_.size();

  // -log N(target; pred, s^2 I)
  const double sq = (target - pred).squaredNorm();
  const double nll = 0.5 * d * log_two_pi + d * std::log(sigma_) + sq / (2.0 * s2);

  // balancing term: log sum_i w_i N(pred; mu_i, Sigma_i + s^2 I)
  Vec log_terms(k);
  std::vector<Vec> alphas(k);  // (Sigma_i + s^2 I)^-1 (pred - mu_i)
  for (size_t j = 0; j < k; ++j) {
    const Component& c = components_[j];
    Vec z = pred - c.mean;
    c.chol_lower.triangularView<Eigen::Lower>().solveInPlace(z);
    const double maha = z.squaredNorm();
    c.chol_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
    alphas[j] = std::move(z);
    log_terms(static_cast<Eigen::Index>(j)) = c.log_weight + c.log_norm - 0.5 * maha;
  }
  const double lse = log_sum_exp(log_terms);

  LossEval out;
  out.value = nll + lse;
  out.grad_pred = (pred - target) / s2;
  double grad_ls = d - sq / s2;  // d(nll)/d(log sigma)
  for (size_t j = 0; j < k; ++j) {
    const double w = std::exp(log_terms(static_cast<Eigen::Index>(j)) - lse);
    out.grad_pred.noalias() -= w * alphas[j];
    grad_ls += w * s2 * (alphas[j].squaredNorm() - components_[j].trace_inv);
  }
  out.grad_log_sigma = sigma_learnable ? grad_ls : 0.0;
  return out;
}

LossEval gai_loss(const Vec& target, const Vec& pred, const NoiseScale& sigma,
                  const GmmPrior& prior) {
  return GaiEvaluator(prior, sigma.sigma())(target, pred, sigma.learnable);
}

LossEval bmc_loss(const Vec& target, const Vec& pred, const NoiseScale& sigma,
                  const BatchPrior& batch) {
  check_pair(target, pred, "bmc_loss");
  const Eigen::Index n = batch.labels.rows();
  if (n < 2) throw std::invalid_argument("bmc_loss: batch must contain at least 2 labels");
  if (batch.labels.cols() != target.size())
    throw std::invalid_argument("bmc_loss: dimension mismatch");
  bool target_in_batch = false;
  for (Eigen::Index j = 0; j < n && !target_in_batch; ++j)
    target_in_batch = (batch.labels.row(j).transpose() - target).isZero(0.0);
  if (!target_in_batch)
    throw std::invalid_argument("bmc_loss: target is not an element of the batch");

  const double s2 = sigma.sigma() * sigma.sigma();
  const double tau = 2.0 * s2;
  const Vec sqd = (batch.labels.rowwise() - pred.transpose()).rowwise().squaredNorm();
  const Vec scores = -sqd / tau;
  const double lse = log_sum_exp(scores);
  const double sq_t = (pred - target).squaredNorm();
  const Vec weights = (scores.array() - lse).exp();  // softmax over the batch

  LossEval out;
  out.value = sq_t / tau + lse;
  // sum_j w_j (pred - y_j) = pred - labels^T w since the weights sum to 1
  out.grad_pred = (pred - target) / s2 - (pred - batch.labels.transpose() * weights) / s2;
  out.grad_log_sigma = sigma.learnable ? (weights.dot(sqd) - sq_t) / s2 : 0.0;
  return out;
}

const BmcBatchEval& BmcBatchEvaluator::evaluate(const Mat& preds, const NoiseScale& sigma,
                                                const BatchPrior& batch) {
  const Eigen::Index n = batch.labels.rows();
  const Eigen::Index d = batch.labels.cols();
  if (n < 2) throw std::invalid_argument("bmc_loss_batch: batch must contain at least 2 labels");
  if (preds.rows() != n || preds.cols() != d)
    throw std::invalid_argument("bmc_loss_batch: prediction shape mismatch");
  if (!preds.allFinite() || !batch.labels.allFinite())
    throw std::invalid_argument("bmc_loss_batch: non-finite input");

  const double s2 = sigma.sigma() * sigma.sigma();
  const double tau = 2.0 * s2;

  // squared distances via the Gram expansion, clamped against rounding
  pred_sq_ = preds.rowwise().squaredNorm();
  label_sq_ = batch.labels.rowwise().squaredNorm();
  dist_.resize(n, n);
  dist_.noalias() = -2.0 * preds * batch.labels.transpose();
  dist_.colwise() += pred_sq_;
  dist_.rowwise() += label_sq_.transpose();
  dist_ = dist_.cwiseMax(0.0);

  row_max_ = (-dist_ / tau).rowwise().maxCoeff();
  weights_.resize(n, n);
  weights_ = ((-dist_ / tau).colwise() - row_max_).array().exp();
  row_sum_ = weights_.rowwise().sum();
  weights_.array().colwise() /= row_sum_.array();

  out_.values = dist_.diagonal() / tau + row_max_ + row_sum_.array().log().matrix();
  out_.grad_preds.resize(n, d);
  out_.grad_preds.noalias() = weights_ * batch.labels;
  out_.grad_preds -= batch.labels;
  out_.grad_preds /= s2;
  if (sigma.learnable)
    out_.grad_log_sigmas =
        (weights_.cwiseProduct(dist_).rowwise().sum() - dist_.diagonal()) / s2;
  else
    out_.grad_log_sigmas = Vec::Zero(n);
  return out_;
}

BmcBatchEval bmc_loss_batch(const Mat& preds, const NoiseScale& sigma,
                            const BatchPrior& batch) {
  BmcBatchEvaluator evaluator;
  return evaluator.evaluate(preds, sigma, batch);
}

LossEval bni_loss(const Vec& target, const Vec& pred, const NoiseScale& sigma,
                  const BinnedPrior& prior) {
  check_pair(target, pred, "bni_loss");
  if (prior.dim() != target.size())
    throw std::invalid_argument("bni_loss: dimension mismatch");
  if (!(prior.densities.array() > 0.0).any())
    throw std::invalid_argument("bni_loss: all bin densities are zero");

  const double s = sigma.sigma();
  const double s2 = s * s;
  const double d = static_cast<double>(target.size());

  const double sq_t = (target - pred).squaredNorm();
  const double nll = 0.5 * d * log_two_pi + d * std::log(s) + sq_t / (2.0 * s2);

  const double log_norm = -0.5 * d * log_two_pi - d * std::log(s);
  const Vec sqd = (prior.centers.rowwise() - pred.transpose()).rowwise().squaredNorm();
  // zero-density bins contribute -inf terms, which log_sum_exp treats as no mass
  const Vec log_terms =
      (prior.densities.array() > 0.0)
          .select(prior.densities.array().log() + log_norm - sqd.array() / (2.0 * s2),
                  -std::numeric_limits<double>::infinity());
  const double lse = log_sum_exp(log_terms);
  const Vec weights = (prior.densities.array() > 0.0)
                          .select((log_terms.array() - lse).exp(), 0.0);

  LossEval out;
  out.value = nll + lse;
  out.grad_pred =
      (pred - target) / s2 - (pred - prior.centers.transpose() * weights) / s2;
  out.grad_log_sigma =
      sigma.learnable ? (d - sq_t / s2) + (weights.dot(sqd) / s2 - d) : 0.0;
  return out;
}

LossEval balanced_softmax_nll(const Vec& logits, int target_class,
                              const DiscretePrior& prior) {
  const Eigen::Index c = logits.size();
  if (c < 2) throw std::invalid_argument("balanced_softmax_nll: need at least 2 classes");
  if (prior.probs.size() != c)
    throw std::invalid_argument("balanced_softmax_nll: prior size mismatch");
  if (target_class < 0 || target_class >= c)
    throw std::invalid_argument("balanced_softmax_nll: target class out of range");
  if (!(prior.probs(target_class) > 0.0))
    throw std::invalid_argument("balanced_softmax_nll: target class has zero prior mass");
  if (!logits.allFinite())
    throw std::invalid_argument("balanced_softmax_nll: non-finite logits");

  Vec adjusted(c);
  for (Eigen::Index i = 0; i < c; ++i)
    adjusted(i) = prior.probs(i) > 0.0
                      ? logits(i) + std::log(prior.probs(i))
                      : -std::numeric_limits<double>::infinity();
  const double lse = log_sum_exp(adjusted);

  LossEval out;
  out.value = lse - adjusted(target_class);
  out.grad_pred = Vec::Zero(c);
  for (Eigen::Index i = 0; i < c; ++i)
    if (prior.probs(i) > 0.0) out.grad_pred(i) = std::exp(adjusted(i) - lse);
  out.grad_pred(target_class) -= 1.0;
  return out;
}

Vec predict(const IsotropicGaussian& g) { return g.mean; }

}  // namespace balreg
