#ifndef BALREG_LOSSES_HPP
#define BALREG_LOSSES_HPP

#include "balreg/numerics.hpp"
#include "balreg/priors.hpp"

#include <string>
#include <string_view>

namespace balreg {

enum class LossKind { Mse, ReweightedMse, Gai, Bmc, Bni, BalancedSoftmax };

LossKind loss_kind_from_name(std::string_view name);
std::string_view loss_kind_name(LossKind kind);

/// Noise scale sigma of the prediction distribution, optimized in log space.
struct NoiseScale {
  double log_sigma = 0.0;
  bool learnable = false;

  static NoiseScale fixed(double sigma);
  static NoiseScale learnable_init(double sigma);
  double sigma() const { return std::exp(log_sigma); }
};

/// Loss value plus analytic gradients. grad_log_sigma is reported as zero when
/// the noise scale is not learnable.
struct LossEval {
  double value = 0.0;
  Vec grad_pred;
  double grad_log_sigma = 0.0;
};

/// ||target - pred||^2 with gradient 2 (pred - target).
LossEval mse_loss(const Vec& target, const Vec& pred);

/// min(1/density, clip) * mse. A zero density clamps to clip (extreme rarity),
/// it is not an error.
LossEval reweighted_mse_loss(const Vec& target, const Vec& pred,
                             double prior_density_at_target, double clip);

/// Closed-form balanced loss with a Gaussian-mixture label prior:
///   -log N(target; pred, s^2 I) + log sum_i w_i N(pred; mu_i, Sigma_i + s^2 I)
LossEval gai_loss(const Vec& target, const Vec& pred, const NoiseScale& sigma,
                  const GmmPrior& prior);

/// Batch Monte-Carlo balanced loss in softmax-with-temperature form,
/// tau = 2 s^2. The target must be one of the batch labels and N >= 2.
LossEval bmc_loss(const Vec& target, const Vec& pred, const NoiseScale& sigma,
                  const BatchPrior& batch);

/// Whole-batch evaluation of bmc_loss with target_i = batch.labels row i and
/// prediction row i of preds: one N x N distance matrix instead of N
/// per-sample passes. Row i of the outputs matches
/// bmc_loss(labels_i, preds_i, sigma, batch).
struct BmcBatchEval {
  Vec values;
  Mat grad_preds;  // N x d
  Vec grad_log_sigmas;
};

/// Holds the N x N workspace across batches so the training loop does not
/// reallocate it 40k times per run.
class BmcBatchEvaluator {
 public:
  const BmcBatchEval& evaluate(const Mat& preds, const NoiseScale& sigma,
                               const BatchPrior& batch);

 private:
  Mat dist_;
  Mat weights_;
  Vec pred_sq_, label_sq_, row_max_, row_sum_;
  BmcBatchEval out_;
};

BmcBatchEval bmc_loss_batch(const Mat& preds, const NoiseScale& sigma,
                            const BatchPrior& batch);

/// Bin-based numerical-integration balanced loss:
///   -log N(target; pred, s^2 I) + log sum_i p_i N(c_i; pred, s^2 I)
LossEval bni_loss(const Vec& target, const Vec& pred, const NoiseScale& sigma,
                  const BinnedPrior& prior);

/// Discrete instantiation: -log [ exp(l_t) p_t / sum_c exp(l_c) p_c ].
/// grad_pred carries the logits gradient.
LossEval balanced_softmax_nll(const Vec& logits, int target_class,
                              const DiscretePrior& prior);

/// Test-time prediction: the mean of the prediction distribution.
Vec predict(const IsotropicGaussian& g);

/// Per-(prior, sigma) factorization cache for the closed-form loss, so a
/// training batch factors each Sigma_i + s^2 I once instead of per sample.
class GaiEvaluator {
 public:
  GaiEvaluator(const GmmPrior& prior, double sigma);

  LossEval operator()(const Vec& target, const Vec& pred, bool sigma_learnable) const;

  int dim() const { return dim_; }

 private:
  struct Component {
    double log_weight;
    Vec mean;
    Mat chol_lower;   // L with L L^T = Sigma_i + s^2 I
    double log_norm;  // -d/2 log 2pi - sum log L_ii
    double trace_inv;  // tr((Sigma_i + s^2 I)^-1)
  };
  std::vector<Component> components_;
  int dim_;
  double sigma_;
};

}  // namespace balreg

#endif  // BALREG_LOSSES_HPP
