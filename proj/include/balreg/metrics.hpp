#ifndef BALREG_METRICS_HPP
#define BALREG_METRICS_HPP

#include "balreg/dataset.hpp"
#include "balreg/model.hpp"

#include <utility>
#include <vector>

namespace balreg {

/// Even partition of the label range (d == 1) or of the distance-to-center
/// rarity coordinate (d > 1) into n_regions equal-width regions.
struct RegionSpec {
  int n_regions = 100;
};

struct EvalReport {
  double mse_vs_oracle = 0.0;  // mean ||pred - label||^2 on the noiseless grid
  double mae = 0.0;            // mean ||pred - label||
  double bmae = 0.0;           // mean of per-region mae over non-empty regions
  std::vector<double> per_region_mae;  // NaN where a region is empty
  std::vector<int> region_counts;
  int empty_regions = 0;
  double marginal_hist_l1 = 0.0;  // L1 distance of the prediction histogram to uniform
};

/// Metric core on prepared predictions; eval_model wraps it with a forward
/// pass over the test inputs.
EvalReport compute_report(const Mat& preds, const Mat& labels,
                          const std::vector<std::pair<double, double>>& label_range,
                          const RegionSpec& regions);

EvalReport eval_model(const ModelParams& model, const SyntheticDataset& test,
                      const RegionSpec& regions);

}  // namespace balreg

#endif  // BALREG_METRICS_HPP
