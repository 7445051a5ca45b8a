#include "balreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace balreg {

namespace {

// Region index of one label: position in the range for d == 1, distance to
// the range center for d > 1.
int region_of(const Eigen::Ref<const Vec>& label,
              const std::vector<std::pair<double, double>>& range, int n_regions) {
  const int d = static_cast<int>(label.size());
  double coord, lo, hi;
  if (d == 1) {
    lo = range[0].first;
    hi = range[0].second;
    coord = label(0);
  } else {
    Vec center(d), half(d);
    for (int j = 0; j < d; ++j) {
      center(j) = 0.5 * (range[static_cast<size_t>(j)].first + range[static_cast<size_t>(j)].second);
      half(j) = 0.5 * (range[static_cast<size_t>(j)].second - range[static_cast<size_t>(j)].first);
    }
    lo = 0.0;
    hi = half.norm();
    coord = (label - center).norm();
  }
  const double t = (coord - lo) / (hi - lo);
  return std::clamp(static_cast<int>(t * n_regions), 0, n_regions - 1);
}

}  // namespace

EvalReport compute_report(const Mat& preds, const Mat& labels,
                          const std::vector<std::pair<double, double>>& label_range,
                          const RegionSpec& regions) {
  const Eigen::Index n = labels.rows();
  const int d = static_cast<int>(labels.cols());
  if (n < 1) throw std::invalid_argument("compute_report: empty test set");
  if (preds.rows() != n || preds.cols() != labels.cols())
    throw std::invalid_argument("compute_report: prediction shape mismatch");
  if (static_cast<int>(label_range.size()) != d)
    throw std::invalid_argument("compute_report: label range dimension mismatch");
  if (regions.n_regions < 1) throw std::invalid_argument("compute_report: n_regions < 1");

  EvalReport report;
  std::vector<double> region_err(static_cast<size_t>(regions.n_regions), 0.0);
  report.region_counts.assign(static_cast<size_t>(regions.n_regions), 0);

  double mse = 0.0, mae = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec err = (preds.row(i) - labels.row(i)).transpose();
    mse += err.squaredNorm();
    const double abs_err = err.norm();
    mae += abs_err;
    const int r = region_of(labels.row(i).transpose(), label_range, regions.n_regions);
    region_err[static_cast<size_t>(r)] += abs_err;
    report.region_counts[static_cast<size_t>(r)] += 1;
  }
  report.mse_vs_oracle = mse / static_cast<double>(n);
  report.mae = mae / static_cast<double>(n);

  report.per_region_mae.assign(static_cast<size_t>(regions.n_regions),
                               std::numeric_limits<double>::quiet_NaN());
  double bmae = 0.0;
  int non_empty = 0;
  for (int r = 0; r < regions.n_regions; ++r) {
    const int count = report.region_counts[static_cast<size_t>(r)];
    if (count == 0) {
      ++report.empty_regions;
      continue;
    }
    const double rm = region_err[static_cast<size_t>(r)] / count;
    report.per_region_mae[static_cast<size_t>(r)] = rm;
    bmae += rm;
    ++non_empty;
  }
  report.bmae = non_empty > 0 ? bmae / non_empty : 0.0;

  // marginal prediction histogram vs the test labels' histogram (the uniform
  // reference at grid resolution), averaged over label dimensions. Bins no
  // finer than the per-dimension grid, so a perfect model scores ~0.
  double l1_total = 0.0;
  for (int j = 0; j < d; ++j) {
    std::set<double> distinct;
    for (Eigen::Index i = 0; i < n; ++i) distinct.insert(labels(i, j));
    const int bins = std::max(2, std::min<int>(regions.n_regions,
                                               static_cast<int>(distinct.size())));
    const double lo = label_range[static_cast<size_t>(j)].first;
    const double hi = label_range[static_cast<size_t>(j)].second;
    std::vector<double> pred_hist(static_cast<size_t>(bins), 0.0);
    std::vector<double> label_hist(static_cast<size_t>(bins), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double tp = (preds(i, j) - lo) / (hi - lo);
      pred_hist[static_cast<size_t>(
          std::clamp(static_cast<int>(tp * bins), 0, bins - 1))] += 1.0;
      const double tl = (labels(i, j) - lo) / (hi - lo);
      label_hist[static_cast<size_t>(
          std::clamp(static_cast<int>(tl * bins), 0, bins - 1))] += 1.0;
    }
    double l1 = 0.0;
    for (int b = 0; b < bins; ++b)
      l1 += std::abs(pred_hist[static_cast<size_t>(b)] - label_hist[static_cast<size_t>(b)]) / n;
    l1_total += l1;
  }
  report.marginal_hist_l1 = l1_total / d;
  return report;
}

EvalReport eval_model(const ModelParams& model, const SyntheticDataset& test,
                      const RegionSpec& regions) {
  if (test.split != Split::Test)
    throw std::invalid_argument("eval_model: dataset is not a test split");
  if (test.size() < 1) throw std::invalid_argument("eval_model: empty test set");
  Mat preds(test.size(), test.label_dim());
  for (int i = 0; i < test.size(); ++i) {
    const Vec out = forward(model, test.inputs.row(i).transpose());
    preds.row(i) = predict(IsotropicGaussian{out, model.noise.sigma()}).transpose();
  }
  return compute_report(preds, test.labels, test.label_range, regions);
}

}  // namespace balreg
