#ifndef BALREG_TRAIN_HPP
#define BALREG_TRAIN_HPP

#include "balreg/dataset.hpp"
#include "balreg/losses.hpp"
#include "balreg/model.hpp"
#include "balreg/optimizer.hpp"
#include "balreg/priors.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace balreg {

enum class SigmaMode { Fixed, Learnable };

struct SigmaConfig {
  SigmaMode mode = SigmaMode::Learnable;
  double value = 1.0;  // fixed value, or init for learnable
};

struct TrainConfig {
  LossKind loss = LossKind::Mse;
  OptimizerSpec optimizer = SgdSpec{1e-3, 0.9};
  int epochs = 2000;
  int batch_size = 256;
  std::uint64_t seed = 0;
  SigmaConfig sigma;
  ModelKind model_kind = ModelKind::Linear;
  std::vector<int> hidden = {64, 64};  // mlp only
  double reweight_clip = 1e4;
};

/// Priors the selected loss reads. The density callback serves the
/// reweighting baseline (fitted or true density); the batch Monte-Carlo loss
/// reads each minibatch's labels and needs nothing here.
struct PriorSet {
  std::optional<GmmPrior> gmm;
  std::optional<BinnedPrior> binned;
  std::function<double(const Vec&)> density;
};

struct TraceRow {
  int epoch;
  double mean_loss;
  double sigma;
};
using TrainingTrace = std::vector<TraceRow>;

/// Raised when a loss or parameter turns non-finite; names epoch and batch.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  ModelParams model;
  TrainingTrace trace;
};

/// Deterministic minibatch training: seeded init, seeded per-epoch shuffling,
/// sequential batch reduction. Paper recipe defaults live in
/// default_train_config.
TrainResult train(const SyntheticDataset& dataset, const TrainConfig& config,
                  const PriorSet& priors);

/// Appendix-style recipe: 1-D linear tasks use SGD(1e-3, momentum 0.9) for
/// 2000 epochs; nonlinear or multi-dimensional tasks use Adam(0.2) for 10000
/// epochs. Batch size 256 throughout.
TrainConfig default_train_config(OracleKind oracle, int label_dim);

std::string trace_to_csv(const TrainingTrace& trace);

}  // namespace balreg

#endif  // BALREG_TRAIN_HPP
