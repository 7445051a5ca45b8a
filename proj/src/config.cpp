#include "balreg/config.hpp"

#include "balreg/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace balreg {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.contains(key))
      throw ConfigError(path + "." + key + ": unknown key");
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + ": wrong type");
  }
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const char* fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return obj.at(key).get<std::string>();
}

std::vector<std::pair<double, double>> parse_range(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty()) throw ConfigError(path + ": expected [[lo, hi], ...]");
  std::vector<std::pair<double, double>> range;
  for (const auto& pair : arr) {
    if (!pair.is_array() || pair.size() != 2)
      throw ConfigError(path + ": each entry must be [lo, hi]");
    const double lo = pair[0].get<double>();
    const double hi = pair[1].get<double>();
    if (!(hi > lo)) throw ConfigError(path + ": hi must exceed lo");
    range.emplace_back(lo, hi);
  }
  return range;
}

OracleFn parse_oracle(const json& obj, const std::string& path,
                      const std::vector<std::pair<double, double>>& range,
                      OracleKind* kind_out) {
  OracleKind kind = OracleKind::Linear;
  if (obj.contains("kind")) {
    try {
      kind = oracle_kind_from_name(obj.at("kind").get<std::string>());
    } catch (const std::invalid_argument& err) {
      throw ConfigError(path + ".kind: " + err.what());
    }
  }
  check_keys(obj, path,
             {"kind", "a", "b", "amp", "freq", "c3", "c1", "k", "y0", "height", "lo_slope",
              "hi_slope"});
  OracleFn oracle = default_oracle(kind, range);
  oracle.a = get_or(obj, "a", oracle.a);
  oracle.b = get_or(obj, "b", oracle.b);
  oracle.amp = get_or(obj, "amp", oracle.amp);
  oracle.freq = get_or(obj, "freq", oracle.freq);
  oracle.c3 = get_or(obj, "c3", oracle.c3);
  oracle.c1 = get_or(obj, "c1", oracle.c1);
  oracle.k = get_or(obj, "k", oracle.k);
  oracle.y0 = get_or(obj, "y0", oracle.y0);
  oracle.height = get_or(obj, "height", oracle.height);
  oracle.lo_slope = get_or(obj, "lo_slope", oracle.lo_slope);
  oracle.hi_slope = get_or(obj, "hi_slope", oracle.hi_slope);
  if (kind_out) *kind_out = kind;
  return oracle;
}

DatasetConfig parse_dataset(const json& obj, const std::string& path) {
  check_keys(obj, path, {"dist", "skew", "params", "range", "oracle", "n", "seed", "split"});
  DatasetConfig config;
  try {
    const DistKind dist = dist_kind_from_name(get_string(obj, path, "dist", "normal"));
    const SkewLevel skew = skew_level_from_name(get_string(obj, path, "skew", "high"));
    config.spec = make_dist_spec(dist, skew);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(path + ": " + err.what());
  }
  if (obj.contains("range")) config.spec.range = parse_range(obj.at("range"), path + ".range");
  if (obj.contains("params")) {
    const json& params = obj.at("params");
    switch (config.spec.kind) {
      case DistKind::Normal:
        check_keys(params, path + ".params", {"mean", "std"});
        config.spec.mean = get_or(params, "mean", config.spec.mean);
        config.spec.stddev = get_or(params, "std", config.spec.stddev);
        if (!(config.spec.stddev > 0.0)) throw ConfigError(path + ".params.std: must be > 0");
        break;
      case DistKind::Exponential:
        check_keys(params, path + ".params", {"rate", "offset"});
        config.spec.rate = get_or(params, "rate", config.spec.rate);
        config.spec.offset = get_or(params, "offset", config.spec.offset);
        if (!(config.spec.rate > 0.0)) throw ConfigError(path + ".params.rate: must be > 0");
        break;
      case DistKind::Mvn: {
        check_keys(params, path + ".params", {"mean", "cov"});
        if (params.contains("mean")) {
          const auto mean = params.at("mean").get<std::vector<double>>();
          config.spec.mvn_mean = Eigen::Map<const Vec>(mean.data(),
                                                       static_cast<Eigen::Index>(mean.size()));
        }
        if (params.contains("cov")) {
          const auto rows = params.at("cov").get<std::vector<std::vector<double>>>();
          Mat cov(rows.size(), rows.size());
          for (size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows.size())
              throw ConfigError(path + ".params.cov: must be square");
            for (size_t c = 0; c < rows.size(); ++c)
              cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
          }
          config.spec.mvn_cov = cov;
        }
        if (config.spec.mvn_mean.size() != config.spec.dim() ||
            config.spec.mvn_cov.rows() != config.spec.dim())
          throw ConfigError(path + ".params: mvn dimensions disagree with range");
        break;
      }
    }
  }
  config.oracle = parse_oracle(obj.contains("oracle") ? obj.at("oracle") : json::object(),
                               path + ".oracle", config.spec.range, &config.oracle_kind);
  config.n = get_or(obj, "n", 1024);
  if (config.n < 1) throw ConfigError(path + ".n: must be >= 1");
  config.seed = get_or<std::uint64_t>(obj, "seed", 0);
  const std::string split = get_string(obj, path, "split", "train");
  if (split == "train")
    config.split = Split::Train;
  else if (split == "test")
    config.split = Split::Test;
  else
    throw ConfigError(path + ".split: expected train or test");
  return config;
}

PriorConfig parse_prior(const json& obj, const std::string& path) {
  check_keys(obj, path, {"kind", "k", "seed", "n_bins", "bandwidth"});
  PriorConfig config;
  config.kind = get_string(obj, path, "kind", "gmm");
  if (config.kind != "gmm" && config.kind != "binned" && config.kind != "none")
    throw ConfigError(path + ".kind: expected gmm, binned or none");
  config.k = get_or(obj, "k", 4);
  if (config.k < 1) throw ConfigError(path + ".k: must be >= 1");
  if (obj.contains("seed")) config.seed = obj.at("seed").get<std::uint64_t>();
  config.n_bins = get_or(obj, "n_bins", 100);
  if (config.n_bins < 2) throw ConfigError(path + ".n_bins: must be >= 2");
  config.bandwidth = get_or(obj, "bandwidth", -1.0);
  return config;
}

OptimizerSpec parse_optimizer(const json& obj, const std::string& path) {
  const std::string kind = get_string(obj, path, "kind", "sgd");
  if (kind == "sgd") {
    check_keys(obj, path, {"kind", "lr", "momentum"});
    SgdSpec sgd;
    sgd.lr = get_or(obj, "lr", sgd.lr);
    sgd.momentum = get_or(obj, "momentum", sgd.momentum);
    if (!(sgd.lr > 0.0)) throw ConfigError(path + ".lr: must be > 0");
    return sgd;
  }
  if (kind == "adam") {
    check_keys(obj, path, {"kind", "lr", "beta1", "beta2", "eps"});
    AdamSpec adam;
    adam.lr = get_or(obj, "lr", adam.lr);
    adam.beta1 = get_or(obj, "beta1", adam.beta1);
    adam.beta2 = get_or(obj, "beta2", adam.beta2);
    adam.eps = get_or(obj, "eps", adam.eps);
    if (!(adam.lr > 0.0)) throw ConfigError(path + ".lr: must be > 0");
    return adam;
  }
  throw ConfigError(path + ".kind: expected sgd or adam");
}

SigmaConfig parse_sigma(const json& obj, const std::string& path) {
  check_keys(obj, path, {"mode", "value", "init"});
  const std::string mode = get_string(obj, path, "mode", "learnable");
  SigmaConfig config;
  if (mode == "fixed") {
    config.mode = SigmaMode::Fixed;
    config.value = get_or(obj, "value", 1.0);
  } else if (mode == "true") {
    config.mode = SigmaMode::Fixed;
    config.value = generator_noise_scale;
  } else if (mode == "learnable") {
    config.mode = SigmaMode::Learnable;
    config.value = get_or(obj, "init", 1.0);
  } else {
    throw ConfigError(path + ".mode: expected fixed, true or learnable");
  }
  if (!(config.value > 0.0)) throw ConfigError(path + ": sigma must be > 0");
  return config;
}

// Fills a TrainConfig on top of the recipe defaults; reports whether the
// optimizer or epoch count was given explicitly.
bool parse_train_into(const json& obj, const std::string& path, TrainConfig& config,
                      bool* reweight_true_density) {
  check_keys(obj, path,
             {"loss", "model", "optimizer", "epochs", "batch_size", "seed", "sigma",
              "reweight_clip", "reweight_true_density"});
  bool explicit_recipe = false;
  if (obj.contains("loss")) {
    try {
      config.loss = loss_kind_from_name(obj.at("loss").get<std::string>());
    } catch (const std::invalid_argument& err) {
      throw ConfigError(path + ".loss: " + err.what());
    }
    if (config.loss == LossKind::BalancedSoftmax)
      throw ConfigError(path + ".loss: balanced_softmax is the discrete-label op, "
                        "not a regression training loss");
  }
  if (obj.contains("model")) {
    const json& model = obj.at("model");
    check_keys(model, path + ".model", {"kind", "hidden"});
    const std::string kind = get_string(model, path + ".model", "kind", "linear");
    if (kind == "linear")
      config.model_kind = ModelKind::Linear;
    else if (kind == "mlp")
      config.model_kind = ModelKind::Mlp;
    else
      throw ConfigError(path + ".model.kind: expected linear or mlp");
    if (model.contains("hidden"))
      config.hidden = model.at("hidden").get<std::vector<int>>();
  }
  if (obj.contains("optimizer")) {
    config.optimizer = parse_optimizer(obj.at("optimizer"), path + ".optimizer");
    explicit_recipe = true;
  }
  if (obj.contains("epochs")) {
    config.epochs = obj.at("epochs").get<int>();
    explicit_recipe = true;
    if (config.epochs < 1) throw ConfigError(path + ".epochs: must be >= 1");
  }
  config.batch_size = get_or(obj, "batch_size", config.batch_size);
  if (config.batch_size < 1) throw ConfigError(path + ".batch_size: must be >= 1");
  if (config.loss == LossKind::Bmc && config.batch_size < 2)
    throw ConfigError(path + ".batch_size: must be >= 2 for bmc");
  if (obj.contains("seed")) config.seed = obj.at("seed").get<std::uint64_t>();
  if (obj.contains("sigma")) config.sigma = parse_sigma(obj.at("sigma"), path + ".sigma");
  config.reweight_clip = get_or(obj, "reweight_clip", config.reweight_clip);
  if (!(config.reweight_clip > 0.0)) throw ConfigError(path + ".reweight_clip: must be > 0");
  if (reweight_true_density)
    *reweight_true_density = get_or(obj, "reweight_true_density", false);
  return explicit_recipe;
}

void parse_eval(const json& obj, const std::string& path, RegionSpec& regions, int& n_test) {
  check_keys(obj, path, {"n_regions", "n_test"});
  regions.n_regions = get_or(obj, "n_regions", regions.n_regions);
  if (regions.n_regions < 1) throw ConfigError(path + ".n_regions: must be >= 1");
  n_test = get_or(obj, "n_test", n_test);
  if (n_test < 1) throw ConfigError(path + ".n_test: must be >= 1");
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
  check_keys(doc, "config", {"dataset", "prior", "train", "eval", "output"});
  if (!doc.contains("dataset")) throw ConfigError("config.dataset: required");
  RunConfig config;
  config.dataset = parse_dataset(doc.at("dataset"), "dataset");
  if (doc.contains("prior")) config.prior = parse_prior(doc.at("prior"), "prior");

  config.train = default_train_config(config.dataset.oracle_kind, config.dataset.spec.dim());
  config.train.seed = config.dataset.seed;
  if (doc.contains("train"))
    config.train_explicit =
        parse_train_into(doc.at("train"), "train", config.train, &config.reweight_true_density);

  if (doc.contains("eval")) parse_eval(doc.at("eval"), "eval", config.regions, config.n_test);
  if (doc.contains("output")) {
    check_keys(doc.at("output"), "output", {"dir"});
    config.out_dir = get_string(doc.at("output"), "output", "dir", "");
  }
  return config;
}

SweepConfig parse_sweep_config(const nlohmann::json& doc) {
  check_keys(doc, "config",
             {"methods", "dists", "skews", "oracle", "seeds", "n_train", "eval", "prior",
              "binned", "train", "jobs"});
  SweepConfig config;

  if (!doc.contains("methods") || !doc.at("methods").is_array() || doc.at("methods").empty())
    throw ConfigError("methods: a non-empty list is required");
  for (const auto& name : doc.at("methods")) {
    try {
      config.methods.push_back(MethodSpec::from_name(name.get<std::string>()));
    } catch (const std::invalid_argument& err) {
      throw ConfigError(std::string("methods: ") + err.what());
    }
    if (config.methods.back().loss == LossKind::BalancedSoftmax)
      throw ConfigError("methods: balanced_softmax is the discrete-label op, "
                        "not a regression training loss");
  }

  std::vector<DistKind> dists{DistKind::Normal};
  if (doc.contains("dists")) {
    dists.clear();
    for (const auto& name : doc.at("dists")) {
      try {
        dists.push_back(dist_kind_from_name(name.get<std::string>()));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("dists: ") + err.what());
      }
    }
  }
  std::vector<SkewLevel> skews{SkewLevel::High};
  if (doc.contains("skews")) {
    skews.clear();
    for (const auto& name : doc.at("skews")) {
      try {
        skews.push_back(skew_level_from_name(name.get<std::string>()));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("skews: ") + err.what());
      }
    }
  }
  if (dists.empty() || skews.empty()) throw ConfigError("dists/skews: must be non-empty");
  for (DistKind dist : dists)
    for (SkewLevel skew : skews) config.specs.push_back(BenchSpec{dist, skew});

  if (doc.contains("oracle")) {
    // per-kind coefficients derive from each spec's label range at run time,
    // so sweeps only pick the curve family here
    const json& oracle = doc.at("oracle");
    check_keys(oracle, "oracle", {"kind"});
    if (oracle.contains("kind")) {
      try {
        config.oracle = oracle_kind_from_name(oracle.at("kind").get<std::string>());
      } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("oracle.kind: ") + err.what());
      }
    }
  }

  if (doc.contains("seeds")) {
    config.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (config.seeds.empty()) throw ConfigError("seeds: must be non-empty");
  }
  config.n_train = get_or(doc, "n_train", config.n_train);
  if (config.n_train < 1) throw ConfigError("n_train: must be >= 1");

  if (doc.contains("eval")) parse_eval(doc.at("eval"), "eval", config.regions, config.n_test);
  if (doc.contains("prior")) {
    check_keys(doc.at("prior"), "prior", {"k"});
    config.gmm_components = get_or(doc.at("prior"), "k", config.gmm_components);
    if (config.gmm_components < 1) throw ConfigError("prior.k: must be >= 1");
  }
  if (doc.contains("binned")) {
    check_keys(doc.at("binned"), "binned", {"n_bins", "bandwidth"});
    config.n_bins = get_or(doc.at("binned"), "n_bins", config.n_bins);
    config.bin_bandwidth = get_or(doc.at("binned"), "bandwidth", config.bin_bandwidth);
    if (config.n_bins < 2) throw ConfigError("binned.n_bins: must be >= 2");
  }
  if (doc.contains("train")) {
    // sweeps choose the loss and sigma through their method list; only the
    // schedule may be overridden here, and only the keys actually given
    const json& train = doc.at("train");
    check_keys(train, "train", {"optimizer", "epochs", "batch_size"});
    if (train.contains("optimizer"))
      config.train_override.optimizer = parse_optimizer(train.at("optimizer"), "train.optimizer");
    if (train.contains("epochs")) {
      config.train_override.epochs = train.at("epochs").get<int>();
      if (*config.train_override.epochs < 1) throw ConfigError("train.epochs: must be >= 1");
    }
    if (train.contains("batch_size")) {
      config.train_override.batch_size = train.at("batch_size").get<int>();
      if (*config.train_override.batch_size < 1)
        throw ConfigError("train.batch_size: must be >= 1");
    }
  }
  config.jobs = get_or(doc, "jobs", 0);
  return config;
}

nlohmann::json preset_config(const std::string& name) {
  if (name == "table-synthetic") {
    return json::parse(R"({
      "methods": ["mse", "reweight_true", "gai_true", "bmc_true", "gai", "bmc"],
      "dists": ["normal", "exponential", "mvn"],
      "skews": ["low", "moderate", "high"],
      "seeds": [0, 1, 2],
      "n_train": 1024
    })");
  }
  if (name == "seed-study") {
    return json::parse(R"({
      "methods": ["mse", "reweight_true", "gai_true"],
      "dists": ["exponential"],
      "skews": ["high"],
      "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
      "n_train": 1024
    })");
  }
  throw ConfigError("unknown preset: " + name);
}

nlohmann::json load_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& err) {
    throw ConfigError(path + ": " + err.what());
  } catch (const std::runtime_error& err) {
    throw ConfigError(err.what());
  }
}

}  // namespace balreg
