#include "balreg/sweep.hpp"

#include "balreg/log.hpp"
#include "balreg/serialize.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace balreg {

MethodSpec MethodSpec::from_name(const std::string& name) {
  MethodSpec method;
  method.name = name;
  std::string base = name;
  bool true_sigma = false;
  if (const auto pos = name.rfind("_true"); pos != std::string::npos &&
                                            pos + 5 == name.size()) {
    base = name.substr(0, pos);
    true_sigma = true;
  }
  method.loss = loss_kind_from_name(base);
  if (true_sigma)
    method.sigma = SigmaConfig{SigmaMode::Fixed, generator_noise_scale};
  else
    method.sigma = SigmaConfig{SigmaMode::Learnable, 1.0};
  if (method.loss == LossKind::Mse)
    method.sigma = SigmaConfig{SigmaMode::Fixed, 1.0};  // sigma plays no role
  if (method.loss == LossKind::ReweightedMse) {
    method.sigma = SigmaConfig{SigmaMode::Fixed, 1.0};
    method.reweight_true_density = true_sigma;  // "reweight_true" = analytic density
  }
  return method;
}

namespace {

double default_bandwidth(double configured, const LabelDistSpec& spec, int n_bins) {
  if (configured >= 0.0) return configured;
  // default: 2 bin widths on the first dimension
  const auto [lo, hi] = spec.range.front();
  return 2.0 * (hi - lo) / n_bins;
}

RunRow execute_run(const SweepConfig& config, const MethodSpec& method,
                   const BenchSpec& bench, std::uint64_t seed) {
  RunRow row;
  row.method = method.name;
  row.dist = std::string(dist_kind_name(bench.dist));
  row.skew = std::string(skew_level_name(bench.skew));
  row.seed = seed;
  row.n_train = config.n_train;

  const auto started = std::chrono::steady_clock::now();
  try {
    const LabelDistSpec spec = make_dist_spec(bench.dist, bench.skew);
    const OracleFn oracle = default_oracle(config.oracle, spec.range);
    const SyntheticDataset train_set = generate(spec, oracle, config.n_train, seed, Split::Train);

    TrainConfig train_config = default_train_config(config.oracle, spec.dim());
    if (config.train_override.optimizer) train_config.optimizer = *config.train_override.optimizer;
    if (config.train_override.epochs) train_config.epochs = *config.train_override.epochs;
    if (config.train_override.batch_size)
      train_config.batch_size = *config.train_override.batch_size;
    train_config.loss = method.loss;
    train_config.sigma = method.sigma;
    train_config.seed = seed;

    PriorSet priors;
    switch (method.loss) {
      case LossKind::Gai:
        priors.gmm = fit_gmm(train_set.labels, config.gmm_components, seed);
        break;
      case LossKind::Bni: {
        const double bw = default_bandwidth(config.bin_bandwidth, spec, config.n_bins);
        priors.binned = fit_binned(train_set.labels, config.n_bins, spec.range, bw);
        break;
      }
      case LossKind::ReweightedMse: {
        if (method.reweight_true_density) {
          priors.density = [spec](const Vec& y) { return spec.pdf(y); };
        } else {
          // same fitted prior family as the closed-form loss
          auto gmm = std::make_shared<GmmPrior>(
              fit_gmm(train_set.labels, config.gmm_components, seed));
          priors.density = [gmm](const Vec& y) { return std::exp(gmm_log_density(*gmm, y)); };
        }
        break;
      }
      default: break;
    }

    const TrainResult result = train(train_set, train_config, priors);

    const SyntheticDataset test_set = generate(spec, oracle, config.n_test, seed, Split::Test);
    row.report = eval_model(result.model, test_set, config.regions);
    row.sigma_final = result.model.noise.sigma();

    // plot series
    Mat preds(test_set.size(), test_set.label_dim());
    for (int i = 0; i < test_set.size(); ++i)
      preds.row(i) = forward(result.model, test_set.inputs.row(i).transpose()).transpose();
    if (test_set.label_dim() == 1) {
      row.curve.reserve(static_cast<size_t>(test_set.size()));
      row.oracle_curve.reserve(static_cast<size_t>(test_set.size()));
      for (int i = 0; i < test_set.size(); ++i) {
        row.curve.emplace_back(test_set.inputs(i, 0), preds(i, 0));
        row.oracle_curve.emplace_back(test_set.inputs(i, 0), test_set.labels(i, 0));
      }
    }
    const int bins = config.regions.n_regions;
    for (int j = 0; j < test_set.label_dim(); ++j) {
      const auto [lo, hi] = test_set.label_range[static_cast<size_t>(j)];
      std::vector<double> hist(static_cast<size_t>(bins), 0.0);
      for (Eigen::Index i = 0; i < preds.rows(); ++i) {
        const double t = (preds(i, j) - lo) / (hi - lo);
        const int b = std::clamp(static_cast<int>(t * bins), 0, bins - 1);
        hist[static_cast<size_t>(b)] += 1.0;
      }
      std::vector<std::pair<double, double>> series;
      series.reserve(static_cast<size_t>(bins));
      for (int b = 0; b < bins; ++b)
        series.emplace_back(lo + (b + 0.5) * (hi - lo) / bins,
                            hist[static_cast<size_t>(b)] / preds.rows());
      row.pred_hists.push_back(std::move(series));
    }
    row.ok = true;
  } catch (const std::exception& err) {
    row.ok = false;
    row.error = err.what();
    log_error("run failed (" + row.method + ", " + row.dist + ", " + row.skew + ", seed " +
              std::to_string(seed) + "): " + row.error);
  }
  row.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - started)
                    .count();
  return row;
}

}  // namespace

std::vector<RunRow> run_comparison(const SweepConfig& config) {
  if (config.methods.empty()) throw std::invalid_argument("run_comparison: no methods");
  if (config.specs.empty()) throw std::invalid_argument("run_comparison: no specs");
  if (config.seeds.empty()) throw std::invalid_argument("run_comparison: no seeds");

  struct Task {
    const MethodSpec* method;
    const BenchSpec* bench;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const MethodSpec& method : config.methods)
    for (const BenchSpec& bench : config.specs)
      for (std::uint64_t seed : config.seeds) tasks.push_back(Task{&method, &bench, seed});

  std::vector<RunRow> rows(tasks.size());
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned jobs = config.jobs > 0 ? static_cast<unsigned>(config.jobs)
                                        : std::min<unsigned>(hw, tasks.size());

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t at = next.fetch_add(1);
      if (at >= tasks.size()) return;
      const Task& task = tasks[at];
      rows[at] = execute_run(config, *task.method, *task.bench, task.seed);
      log_info("finished " + rows[at].method + " " + rows[at].dist + " " + rows[at].skew +
               " seed " + std::to_string(task.seed) +
               (rows[at].ok ? " mse " + fmt_double(rows[at].report.mse_vs_oracle) : " FAILED"));
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::stable_sort(rows.begin(), rows.end(), [](const RunRow& a, const RunRow& b) {
    return std::tie(a.method, a.dist, a.skew, a.seed) <
           std::tie(b.method, b.dist, b.skew, b.seed);
  });
  return rows;
}

std::string rows_to_csv(const std::vector<RunRow>& rows) {
  std::ostringstream out;
  out << "method,dist,skew,seed,n_train,mse_oracle,mae,bmae,hist_l1,sigma_final,wall_ms,status\n";
  for (const RunRow& row : rows) {
    out << row.method << ',' << row.dist << ',' << row.skew << ',' << row.seed << ','
        << row.n_train << ',';
    if (row.ok) {
      out << fmt_double(row.report.mse_vs_oracle) << ',' << fmt_double(row.report.mae) << ','
          << fmt_double(row.report.bmae) << ',' << fmt_double(row.report.marginal_hist_l1)
          << ',' << fmt_double(row.sigma_final);
    } else {
      out << "nan,nan,nan,nan,nan";
    }
    out << ',' << fmt_double(row.wall_ms) << ',' << (row.ok ? "ok" : "failed") << '\n';
  }
  return out.str();
}

std::string summarize_rows(const std::vector<RunRow>& rows) {
  struct Agg {
    std::vector<double> mse, bmae, hist;
    int failed = 0;
  };
  std::map<std::string, Agg> groups;
  for (const RunRow& row : rows) {
    Agg& agg = groups[row.method + " / " + row.dist + "-" + row.skew];
    if (!row.ok) {
      ++agg.failed;
      continue;
    }
    agg.mse.push_back(row.report.mse_vs_oracle);
    agg.bmae.push_back(row.report.bmae);
    agg.hist.push_back(row.report.marginal_hist_l1);
  }
  auto mean_std = [](const std::vector<double>& v) {
    if (v.empty()) return std::pair<double, double>{NAN, NAN};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
    return std::pair<double, double>{mean, std::sqrt(var)};
  };
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-36s %10s %22s %12s\n", "method / spec", "runs",
                "mse_oracle (mean+-std)", "bmae mean");
  out << buf;
  for (const auto& [key, agg] : groups) {
    const auto [mse_mean, mse_std] = mean_std(agg.mse);
    const double bmae_mean = mean_std(agg.bmae).first;
    std::snprintf(buf, sizeof(buf), "%-36s %6zu/%-3d %12.4g +- %-7.3g %12.4g\n", key.c_str(),
                  agg.mse.size(), static_cast<int>(agg.mse.size()) + agg.failed, mse_mean,
                  mse_std, bmae_mean);
    out << buf;
  }
  return out.str();
}

}  // namespace balreg
