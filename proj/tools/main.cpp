#include "balreg/config.hpp"
#include "balreg/log.hpp"
#include "balreg/metrics.hpp"
#include "balreg/serialize.hpp"
#include "balreg/svg.hpp"
#include "balreg/sweep.hpp"
#include "balreg/train.hpp"
#include "balreg/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace {

using balreg::ConfigError;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
  int jobs = 0;
  bool svg = false;
};

json require_config(const GlobalArgs& args) {
  if (args.config_path.empty()) throw ConfigError("--config is required");
  return balreg::load_json_file(args.config_path);
}

balreg::RunConfig load_run_config(const GlobalArgs& args, json* raw = nullptr) {
  const json doc = require_config(args);
  if (raw) *raw = doc;
  balreg::RunConfig config = balreg::parse_run_config(doc);
  if (args.seed) {
    config.dataset.seed = *args.seed;
    config.train.seed = *args.seed;
  }
  return config;
}

std::string sidecar_path(const std::string& csv_path) {
  if (csv_path.size() > 4 && csv_path.ends_with(".csv"))
    return csv_path.substr(0, csv_path.size() - 4) + ".json";
  return csv_path + ".json";
}

balreg::SyntheticDataset generate_from(const balreg::DatasetConfig& dataset) {
  return balreg::generate(dataset.spec, dataset.oracle, dataset.n, dataset.seed,
                          dataset.split);
}

balreg::PriorSet build_priors(const balreg::RunConfig& config, const balreg::Mat& labels,
                              json* prior_doc) {
  balreg::PriorSet priors;
  const std::uint64_t prior_seed = config.prior.seed.value_or(config.dataset.seed);
  switch (config.train.loss) {
    case balreg::LossKind::Gai: {
      priors.gmm = balreg::fit_gmm(labels, config.prior.k, prior_seed);
      if (prior_doc) *prior_doc = balreg::prior_to_json(*priors.gmm);
      break;
    }
    case balreg::LossKind::Bni: {
      double bw = config.prior.bandwidth;
      if (bw < 0.0) {
        const auto [lo, hi] = config.dataset.spec.range.front();
        bw = 2.0 * (hi - lo) / config.prior.n_bins;
      }
      priors.binned =
          balreg::fit_binned(labels, config.prior.n_bins, config.dataset.spec.range, bw);
      if (prior_doc) *prior_doc = balreg::prior_to_json(*priors.binned);
      break;
    }
    case balreg::LossKind::ReweightedMse: {
      if (config.reweight_true_density) {
        const balreg::LabelDistSpec spec = config.dataset.spec;
        priors.density = [spec](const balreg::Vec& y) { return spec.pdf(y); };
      } else {
        auto gmm = std::make_shared<balreg::GmmPrior>(
            balreg::fit_gmm(labels, config.prior.k, prior_seed));
        priors.density = [gmm](const balreg::Vec& y) {
          return std::exp(balreg::gmm_log_density(*gmm, y));
        };
        if (prior_doc) *prior_doc = balreg::prior_to_json(*gmm);
      }
      break;
    }
    default: break;
  }
  return priors;
}

int cmd_gen(const GlobalArgs& args) {
  json raw;
  const balreg::RunConfig config = load_run_config(args, &raw);
  if (args.out.empty()) throw ConfigError("--out is required for gen");
  const balreg::SyntheticDataset data = generate_from(config.dataset);
  const std::string out_csv = args.out;
  balreg::write_file_atomic(out_csv, balreg::dataset_to_csv(data));
  const json sidecar = balreg::dataset_sidecar(data, raw.at("dataset"));
  balreg::write_file_atomic(sidecar_path(out_csv), sidecar.dump(2) + "\n");
  balreg::log_info("wrote " + out_csv + " (" + std::to_string(data.size()) + " rows)");
  return kExitOk;
}

int cmd_fit_prior(const GlobalArgs& args, const std::string& data_path) {
  const balreg::RunConfig config = load_run_config(args);
  if (args.out.empty()) throw ConfigError("--out is required for fit-prior");
  balreg::Mat labels;
  if (!data_path.empty()) {
    labels = balreg::labels_from_dataset_csv(balreg::read_file(data_path));
  } else {
    labels = generate_from(config.dataset).labels;
  }
  const std::uint64_t prior_seed = config.prior.seed.value_or(config.dataset.seed);
  json doc;
  if (config.prior.kind == "gmm") {
    doc = balreg::prior_to_json(balreg::fit_gmm(labels, config.prior.k, prior_seed));
  } else if (config.prior.kind == "binned") {
    double bw = config.prior.bandwidth;
    if (bw < 0.0) {
      const auto [lo, hi] = config.dataset.spec.range.front();
      bw = 2.0 * (hi - lo) / config.prior.n_bins;
    }
    doc = balreg::prior_to_json(
        balreg::fit_binned(labels, config.prior.n_bins, config.dataset.spec.range, bw));
  } else {
    throw ConfigError("prior.kind: nothing to fit for kind 'none'");
  }
  balreg::write_file_atomic(args.out, doc.dump(2) + "\n");
  balreg::log_info("wrote " + args.out);
  return kExitOk;
}

int cmd_train(const GlobalArgs& args) {
  const balreg::RunConfig config = load_run_config(args);
  const std::string out_dir = !args.out.empty() ? args.out
                              : !config.out_dir.empty() ? config.out_dir
                                                        : std::string(".");
  std::filesystem::create_directories(out_dir);

  const balreg::SyntheticDataset data = generate_from(config.dataset);
  json prior_doc;
  const balreg::PriorSet priors = build_priors(config, data.labels, &prior_doc);
  const balreg::TrainResult result = balreg::train(data, config.train, priors);

  balreg::write_file_atomic(out_dir + "/trace.csv", balreg::trace_to_csv(result.trace));
  balreg::write_file_atomic(out_dir + "/model.json",
                            balreg::model_to_json(result.model).dump(2) + "\n");
  if (!prior_doc.is_null())
    balreg::write_file_atomic(out_dir + "/prior.json", prior_doc.dump(2) + "\n");
  balreg::log_info("trained " + std::string(balreg::loss_kind_name(config.train.loss)) +
                   ", final mean loss " +
                   balreg::fmt_double(result.trace.back().mean_loss) + ", sigma " +
                   balreg::fmt_double(result.trace.back().sigma));
  return kExitOk;
}

int cmd_eval(const GlobalArgs& args, const std::string& model_path) {
  const balreg::RunConfig config = load_run_config(args);
  if (model_path.empty()) throw ConfigError("--model is required for eval");
  const balreg::ModelParams model =
      balreg::model_from_json(balreg::load_json_file(model_path));

  const balreg::SyntheticDataset test = balreg::generate(
      config.dataset.spec, config.dataset.oracle, config.n_test, config.dataset.seed,
      balreg::Split::Test);
  const balreg::EvalReport report = balreg::eval_model(model, test, config.regions);

  json doc;
  doc["mse_vs_oracle"] = report.mse_vs_oracle;
  doc["mae"] = report.mae;
  doc["bmae"] = report.bmae;
  doc["per_region_mae"] = report.per_region_mae;
  doc["empty_regions"] = report.empty_regions;
  doc["marginal_hist_l1"] = report.marginal_hist_l1;
  const std::string text = doc.dump(2) + "\n";
  if (!args.out.empty()) balreg::write_file_atomic(args.out, text);
  std::printf("mse_vs_oracle %s\nmae %s\nbmae %s\nmarginal_hist_l1 %s\nempty_regions %d\n",
              balreg::fmt_double(report.mse_vs_oracle).c_str(),
              balreg::fmt_double(report.mae).c_str(), balreg::fmt_double(report.bmae).c_str(),
              balreg::fmt_double(report.marginal_hist_l1).c_str(), report.empty_regions);
  return kExitOk;
}

std::string series_to_text(const std::vector<std::pair<double, double>>& series) {
  std::ostringstream out;
  for (const auto& [x, y] : series)
    out << balreg::fmt_double(x) << ' ' << balreg::fmt_double(y) << '\n';
  return out.str();
}

int cmd_sweep(const GlobalArgs& args) {
  json doc;
  if (!args.preset.empty()) {
    doc = balreg::preset_config(args.preset);
    if (!args.config_path.empty())
      throw ConfigError("pass either --config or --preset, not both");
  } else {
    doc = require_config(args);
  }
  balreg::SweepConfig config = balreg::parse_sweep_config(doc);
  if (args.jobs > 0) config.jobs = args.jobs;
  if (args.seed) config.seeds = {*args.seed};
  const std::string out_dir = args.out.empty() ? std::string("sweep-out") : args.out;
  std::filesystem::create_directories(out_dir);

  const std::vector<balreg::RunRow> rows = balreg::run_comparison(config);

  balreg::write_file_atomic(out_dir + "/results.csv", balreg::rows_to_csv(rows));
  int ok = 0;
  for (const balreg::RunRow& row : rows) {
    if (!row.ok) continue;
    ++ok;
    const std::string base = out_dir + "/" + row.method + "__" + row.dist + "__" + row.skew +
                             "__s" + std::to_string(row.seed);
    if (!row.curve.empty()) {
      balreg::write_file_atomic(base + "_curve.txt", series_to_text(row.curve));
      if (args.svg)
        balreg::write_file_atomic(
            base + "_curve.svg",
            balreg::svg_line_chart({row.oracle_curve, row.curve}, {"oracle", row.method},
                                   row.method + " on " + row.dist + "-" + row.skew));
    }
    for (size_t dim = 0; dim < row.pred_hists.size(); ++dim) {
      balreg::write_file_atomic(base + "_hist" + std::to_string(dim) + ".txt",
                                series_to_text(row.pred_hists[dim]));
      if (args.svg)
        balreg::write_file_atomic(
            base + "_hist" + std::to_string(dim) + ".svg",
            balreg::svg_histogram(row.pred_hists[dim],
                                  row.method + " predictions, dim " + std::to_string(dim)));
    }
  }

  std::fputs(balreg::summarize_rows(rows).c_str(), stdout);
  std::printf("%d/%zu runs succeeded; results in %s\n", ok, rows.size(), out_dir.c_str());
  return ok > 0 ? kExitOk : kExitRuntime;
}

int cmd_verify(const std::string& suite) {
  static const std::set<std::string> known = {"gradcheck", "quadrature", "theorem1",
                                              "bmc-convergence", "all"};
  if (!known.contains(suite)) throw ConfigError("unknown verify suite: " + suite);
  const std::vector<balreg::CheckResult> results = balreg::run_verify_suite(suite);
  bool all_pass = true;
  for (const balreg::CheckResult& check : results) {
    all_pass = all_pass && check.pass;
    std::printf("[%s] %-34s max error %.3e (tolerance %.0e, %d cases)\n",
                check.pass ? "PASS" : "FAIL", check.name.c_str(), check.max_error,
                check.tolerance, check.cases);
  }
  return all_pass ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced-regression losses, synthetic benchmarks and verification suites"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs args;
  app.add_option("--config", args.config_path, "JSON configuration file");
  app.add_option("--seed", args.seed, "override the configured seed");
  app.add_option("--out", args.out, "output file or directory");
  app.add_option("--preset", args.preset, "embedded sweep preset (sweep only)");
  app.add_option("--jobs", args.jobs, "parallel runs (0 = hardware)");
  app.add_flag("--svg", args.svg, "also render SVG plots (sweep only)");

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
  CLI::App* fit = app.add_subcommand("fit-prior", "fit a label-distribution prior");
  std::string data_path;
  fit->add_option("--data", data_path, "dataset CSV to read labels from");
  CLI::App* train = app.add_subcommand("train", "train a regressor");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a trained model");
  std::string model_path;
  eval->add_option("--model", model_path, "model JSON produced by train");
  CLI::App* sweep = app.add_subcommand("sweep", "run a method/spec/seed comparison");
  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  std::string suite = "all";
  verify->add_option("suite", suite, "gradcheck|quadrature|theorem1|bmc-convergence|all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(args);
    if (fit->parsed()) return cmd_fit_prior(args, data_path);
    if (train->parsed()) return cmd_train(args);
    if (eval->parsed()) return cmd_eval(args, model_path);
    if (sweep->parsed()) return cmd_sweep(args);
    if (verify->parsed()) return cmd_verify(suite);
  } catch (const ConfigError& err) {
    balreg::log_error(err.what());
    return kExitUsage;
  } catch (const std::exception& err) {
    balreg::log_error(err.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
