#ifndef BALREG_SWEEP_HPP
#define BALREG_SWEEP_HPP

#include "balreg/dataset.hpp"
#include "balreg/metrics.hpp"
#include "balreg/train.hpp"

#include <optional>
#include <string>
#include <vector>

namespace balreg {

/// One comparison method: a loss plus its noise-scale policy. "true" sigma
/// fixes sigma at the generator's injected noise scale (the paper's dagger
/// rows); reweighting can query the fitted prior or the analytic density.
struct MethodSpec {
  std::string name;
  LossKind loss = LossKind::Mse;
  SigmaConfig sigma{SigmaMode::Learnable, 1.0};
  bool reweight_true_density = false;

  static MethodSpec from_name(const std::string& name);
};

struct BenchSpec {
  DistKind dist = DistKind::Normal;
  SkewLevel skew = SkewLevel::High;
};

/// Partial training overrides; anything unset falls back to the recipe
/// default for the run's oracle and label dimension.
struct TrainOverride {
  std::optional<OptimizerSpec> optimizer;
  std::optional<int> epochs;
  std::optional<int> batch_size;
};

struct SweepConfig {
  std::vector<MethodSpec> methods;
  std::vector<BenchSpec> specs;
  std::vector<std::uint64_t> seeds{0};
  OracleKind oracle = OracleKind::Linear;
  int n_train = 1024;
  int n_test = 1000;
  int gmm_components = 4;
  int n_bins = 100;
  double bin_bandwidth = -1.0;  // < 0 selects the default of 2 bin widths
  RegionSpec regions;
  TrainOverride train_override;
  int jobs = 0;  // 0 = hardware concurrency
};

struct RunRow {
  std::string method;
  std::string dist;
  std::string skew;
  std::uint64_t seed = 0;
  int n_train = 0;
  EvalReport report;
  double sigma_final = 0.0;
  double wall_ms = 0.0;
  bool ok = false;
  std::string error;

  // plot series (d == 1 curves; per-dimension prediction histograms)
  std::vector<std::pair<double, double>> curve;         // (x, prediction)
  std::vector<std::pair<double, double>> oracle_curve;  // (x, true label)
  std::vector<std::vector<std::pair<double, double>>> pred_hists;
};

/// Runs every (method, spec, seed) tuple: fit the prior the loss needs, train
/// with the recipe for (oracle, d), evaluate on the even noiseless grid.
/// Failed runs are reported in their row; the sweep continues. Rows come back
/// sorted by (method, dist, skew, seed).
std::vector<RunRow> run_comparison(const SweepConfig& config);

/// Result-table CSV (one row per run) and the aggregate mean/std summary.
std::string rows_to_csv(const std::vector<RunRow>& rows);
std::string summarize_rows(const std::vector<RunRow>& rows);

}  // namespace balreg

#endif  // BALREG_SWEEP_HPP
