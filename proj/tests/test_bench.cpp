#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "balreg/dataset.hpp"
#include "balreg/metrics.hpp"
#include "balreg/rng.hpp"
#include "balreg/sweep.hpp"

#include <cmath>

using namespace balreg;

TEST_CASE("train sets satisfy the reconstruction identity for every oracle") {
  for (const OracleKind kind :
       {OracleKind::Linear, OracleKind::Sinusoid, OracleKind::Cubic, OracleKind::Logistic,
        OracleKind::PiecewiseLinear}) {
    const LabelDistSpec spec = make_dist_spec(DistKind::Normal, SkewLevel::Moderate);
    const OracleFn oracle = default_oracle(kind, spec.range);
    const SyntheticDataset data = generate(spec, oracle, 300, 21, Split::Train);
    double worst = 0.0;
    for (int i = 0; i < data.size(); ++i) {
      const double rebuilt = oracle_apply(oracle, data.inputs(i, 0)) + data.noise(i, 0);
      worst = std::max(worst, std::abs(data.labels(i, 0) - rebuilt));
    }
    INFO(oracle_kind_name(kind));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("identity oracle gives y - x = eps") {
  LabelDistSpec spec = make_dist_spec(DistKind::Normal, SkewLevel::Low);
  OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  oracle.a = 1.0;
  oracle.b = 0.0;
  const SyntheticDataset data = generate(spec, oracle, 500, 2, Split::Train);
  for (int i = 0; i < data.size(); ++i)
    CHECK(std::abs(data.labels(i, 0) - data.inputs(i, 0) - data.noise(i, 0)) < 1e-12);
}

TEST_CASE("test split is an even noiseless grid") {
  LabelDistSpec spec = make_dist_spec(DistKind::Exponential, SkewLevel::Low);
  const OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  const SyntheticDataset data = generate(spec, oracle, 101, 0, Split::Test);
  REQUIRE(data.size() == 101);
  for (int i = 0; i < 101; ++i) {
    CHECK(data.labels(i, 0) == doctest::Approx(0.1 * i * 1.0).epsilon(1e-12));
    CHECK(data.noise(i, 0) == 0.0);
  }
  CHECK(data.labels(0, 0) == 0.0);
  CHECK(data.labels(100, 0) == 10.0);
}

TEST_CASE("two-dimensional test split uses a square grid") {
  const LabelDistSpec spec = make_dist_spec(DistKind::Mvn, SkewLevel::High);
  const OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  const SyntheticDataset data = generate(spec, oracle, 1000, 0, Split::Test);
  CHECK(data.size() == 32 * 32);
  CHECK(data.labels.col(0).minCoeff() == -5.0);
  CHECK(data.labels.col(0).maxCoeff() == 5.0);
}

TEST_CASE("high-skew normal sampling matches its own moments") {
  const LabelDistSpec spec = make_dist_spec(DistKind::Normal, SkewLevel::High);
  const OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  const SyntheticDataset data = generate(spec, oracle, 1000000, 7, Split::Train);
  const double mean = data.labels.col(0).mean();
  const double stddev =
      std::sqrt((data.labels.col(0).array() - mean).square().sum() / data.size());
  CHECK(std::abs(mean) < 0.01);
  // clipping at +-5 is ten sigma out, so the configured std carries over
  CHECK(std::abs(stddev - 0.5) < 0.02 * 0.5);
}

TEST_CASE("generator rejects a non-invertible oracle") {
  LabelDistSpec spec = make_dist_spec(DistKind::Normal, SkewLevel::Low);
  OracleFn flat;
  flat.kind = OracleKind::Linear;
  flat.a = 0.0;
  CHECK_THROWS_AS(generate(spec, flat, 10, 0, Split::Train), std::invalid_argument);
  OracleFn wiggle;
  wiggle.kind = OracleKind::Sinusoid;
  wiggle.amp = 4.0;
  wiggle.freq = 0.5;  // amp * freq = 2 > 1, not monotone
  CHECK_THROWS_AS(generate(spec, wiggle, 10, 0, Split::Train), std::invalid_argument);
}

TEST_CASE("generation is deterministic per seed") {
  const LabelDistSpec spec = make_dist_spec(DistKind::Exponential, SkewLevel::High);
  const OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  const SyntheticDataset a = generate(spec, oracle, 256, 13, Split::Train);
  const SyntheticDataset b = generate(spec, oracle, 256, 13, Split::Train);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
  CHECK(a.noise == b.noise);
  const SyntheticDataset c = generate(spec, oracle, 256, 14, Split::Train);
  CHECK(a.labels != c.labels);
}

namespace {

ModelParams oracle_model(const OracleFn& oracle) {
  ModelParams model;
  model.kind = ModelKind::Linear;
  model.weights = {Mat::Constant(1, 1, oracle.a)};
  model.biases = {Vec::Constant(1, oracle.b)};
  model.noise = NoiseScale::fixed(1.0);
  return model;
}

}  // namespace

TEST_CASE("perfect model scores zero everywhere") {
  const LabelDistSpec spec = make_dist_spec(DistKind::Normal, SkewLevel::Low);
  OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  oracle.a = 1.7;
  oracle.b = -0.3;
  const SyntheticDataset test = generate(spec, oracle, 1000, 0, Split::Test);
  const EvalReport report = eval_model(oracle_model(oracle), test, RegionSpec{100});
  CHECK(report.mse_vs_oracle < 1e-12);
  CHECK(report.bmae < 1e-9);
  CHECK(report.marginal_hist_l1 == doctest::Approx(0.0));
  CHECK(report.empty_regions == 0);
}

TEST_CASE("constant midpoint predictor on two regions") {
  LabelDistSpec spec = make_dist_spec(DistKind::Exponential, SkewLevel::Low);  // range (0, 10)
  OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  const SyntheticDataset test = generate(spec, oracle, 1000, 0, Split::Test);
  ModelParams constant;
  constant.kind = ModelKind::Linear;
  constant.weights = {Mat::Zero(1, 1)};
  constant.biases = {Vec::Constant(1, 5.0)};
  const EvalReport report = eval_model(constant, test, RegionSpec{2});
  REQUIRE(report.per_region_mae.size() == 2);
  CHECK(report.per_region_mae[0] == doctest::Approx(2.5).epsilon(0.01));
  CHECK(report.per_region_mae[1] == doctest::Approx(2.5).epsilon(0.01));
  CHECK(report.bmae == doctest::Approx(2.5).epsilon(0.01));
}

TEST_CASE("balanced mae from hand-set region errors") {
  Mat labels(3, 1), preds(3, 1);
  labels << 10.0, 20.0, 75.0;   // two points in (0,50), one in (50,100)
  preds << 11.0, 23.0, 65.0;    // abs errors 1, 3 and 10
  const EvalReport report =
      compute_report(preds, labels, {{0.0, 100.0}}, RegionSpec{2});
  CHECK(report.per_region_mae[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(report.per_region_mae[1] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(report.bmae == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(report.mae == doctest::Approx(4.666666666666667).epsilon(1e-12));
}

TEST_CASE("bmae equals mae when regions hold equal counts") {
  Rng rng(4001);
  Mat labels(8, 1), preds(8, 1);
  const double positions[] = {0.1, 0.2, 0.35, 0.45, 0.6, 0.7, 0.85, 0.95};
  for (int i = 0; i < 8; ++i) {
    labels(i, 0) = positions[i] * 10.0;
    preds(i, 0) = labels(i, 0) + rng.uniform(-1.0, 1.0);
  }
  const EvalReport report = compute_report(preds, labels, {{0.0, 10.0}}, RegionSpec{4});
  CHECK(report.empty_regions == 0);
  CHECK(std::abs(report.bmae - report.mae) < 1e-12);
}

TEST_CASE("evaluation is pure") {
  const LabelDistSpec spec = make_dist_spec(DistKind::Normal, SkewLevel::Moderate);
  const OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  const SyntheticDataset test = generate(spec, oracle, 500, 0, Split::Test);
  ModelParams model;
  model.kind = ModelKind::Linear;
  model.weights = {Mat::Constant(1, 1, 0.8)};
  model.biases = {Vec::Constant(1, 0.1)};
  const EvalReport a = eval_model(model, test, RegionSpec{50});
  const EvalReport b = eval_model(model, test, RegionSpec{50});
  CHECK(a.mse_vs_oracle == b.mse_vs_oracle);
  CHECK(a.bmae == b.bmae);
  CHECK(a.marginal_hist_l1 == b.marginal_hist_l1);
}

TEST_CASE("eval_model rejects a train split") {
  const LabelDistSpec spec = make_dist_spec(DistKind::Normal, SkewLevel::Moderate);
  const OracleFn oracle = default_oracle(OracleKind::Linear, spec.range);
  const SyntheticDataset data = generate(spec, oracle, 50, 0, Split::Train);
  ModelParams model = oracle_model(oracle);
  CHECK_THROWS_AS(eval_model(model, data, RegionSpec{10}), std::invalid_argument);
}

TEST_CASE("comparison sweep smoke run and failure isolation") {
  SweepConfig config;
  config.methods = {MethodSpec::from_name("mse"), MethodSpec::from_name("bni_true"),
                    MethodSpec::from_name("bmc")};
  config.specs = {BenchSpec{DistKind::Normal, SkewLevel::Moderate}};
  config.seeds = {0};
  config.n_train = 128;
  config.n_test = 200;
  config.train_override.epochs = 50;
  config.jobs = 1;

  const std::vector<RunRow> rows = run_comparison(config);
  REQUIRE(rows.size() == 3);
  for (const RunRow& row : rows) {
    INFO(row.method, ": ", row.error);
    CHECK(row.ok);
    CHECK(std::isfinite(row.report.mse_vs_oracle));
  }
  CHECK(rows[0].n_train == 128);

  SweepConfig single = config;
  single.methods = {MethodSpec::from_name("mse")};

  // a diverging method fails its row without aborting the sweep
  SweepConfig mixed = config;
  mixed.methods = {MethodSpec::from_name("mse"), MethodSpec::from_name("gai_true")};
  mixed.train_override.optimizer = SgdSpec{1e25, 0.9};
  const std::vector<RunRow> mixed_rows = run_comparison(mixed);
  REQUIRE(mixed_rows.size() == 2);
  int failed = 0;
  for (const RunRow& row : mixed_rows)
    if (!row.ok) ++failed;
  CHECK(failed == 2);
  const std::string csv = rows_to_csv(mixed_rows);
  CHECK(csv.find("failed") != std::string::npos);
}

TEST_CASE("vanilla error grows with skew while the balanced loss stays low") {
  SweepConfig config;
  config.methods = {MethodSpec::from_name("mse"), MethodSpec::from_name("gai_true")};
  config.specs = {BenchSpec{DistKind::Normal, SkewLevel::Low},
                  BenchSpec{DistKind::Normal, SkewLevel::Moderate},
                  BenchSpec{DistKind::Normal, SkewLevel::High}};
  config.seeds = {0};
  config.jobs = 2;
  const std::vector<RunRow> rows = run_comparison(config);
  REQUIRE(rows.size() == 6);

  auto mse_of = [&](const std::string& method, const std::string& skew) {
    for (const RunRow& row : rows)
      if (row.method == method && row.skew == skew) {
        REQUIRE(row.ok);
        return row.report.mse_vs_oracle;
      }
    FAIL("row not found");
    return 0.0;
  };
  CHECK(mse_of("mse", "low") <= mse_of("mse", "moderate"));
  CHECK(mse_of("mse", "moderate") <= mse_of("mse", "high"));
  for (const char* skew : {"low", "moderate", "high"}) CHECK(mse_of("gai_true", skew) < 0.5);
}
