#ifndef BALREG_CONFIG_HPP
#define BALREG_CONFIG_HPP

#include "balreg/dataset.hpp"
#include "balreg/metrics.hpp"
#include "balreg/sweep.hpp"
#include "balreg/train.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace balreg {

/// Invalid or malformed configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  LabelDistSpec spec;
  OracleFn oracle;
  OracleKind oracle_kind = OracleKind::Linear;
  int n = 1024;
  std::uint64_t seed = 0;
  Split split = Split::Train;
};

struct PriorConfig {
  std::string kind = "gmm";  // gmm | binned | none
  int k = 4;
  std::optional<std::uint64_t> seed;  // defaults to the dataset seed
  int n_bins = 100;
  double bandwidth = -1.0;  // < 0 selects 2 bin widths
};

struct RunConfig {
  DatasetConfig dataset;
  PriorConfig prior;
  TrainConfig train;
  bool train_explicit = false;  // optimizer/epochs given, or use the recipe
  bool reweight_true_density = false;
  RegionSpec regions;
  int n_test = 1000;
  std::string out_dir;
};

/// Parses and validates; unknown keys anywhere raise ConfigError naming the
/// offending path.
RunConfig parse_run_config(const nlohmann::json& doc);
SweepConfig parse_sweep_config(const nlohmann::json& doc);

/// Embedded sweep configs: "table-synthetic" (six methods across the nine
/// distribution/skew cells) and "seed-study" (three methods, ten seeds, the
/// exponential high-skew cell).
nlohmann::json preset_config(const std::string& name);

nlohmann::json load_json_file(const std::string& path);

}  // namespace balreg

#endif  // BALREG_CONFIG_HPP
