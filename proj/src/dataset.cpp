#include "balreg/dataset.hpp"

#include "balreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace balreg {

OracleKind oracle_kind_from_name(std::string_view name) {
  if (name == "linear") return OracleKind::Linear;
  if (name == "sinusoid") return OracleKind::Sinusoid;
  if (name == "cubic") return OracleKind::Cubic;
  if (name == "logistic") return OracleKind::Logistic;
  if (name == "piecewise_linear") return OracleKind::PiecewiseLinear;
  throw std::invalid_argument("unknown oracle kind: " + std::string(name));
}

std::string_view oracle_kind_name(OracleKind kind) {
  switch (kind) {
    case OracleKind::Linear: return "linear";
    case OracleKind::Sinusoid: return "sinusoid";
    case OracleKind::Cubic: return "cubic";
    case OracleKind::Logistic: return "logistic";
    case OracleKind::PiecewiseLinear: return "piecewise_linear";
  }
  throw std::logic_error("oracle_kind_name: bad enum value");
}

OracleFn default_oracle(OracleKind kind,
                        const std::vector<std::pair<double, double>>& label_range) {
  OracleFn oracle;
  oracle.kind = kind;
  if (kind == OracleKind::Logistic) {
    if (label_range.size() != 1)
      throw std::invalid_argument("default_oracle: logistic oracle is one-dimensional");
    // co-domain 8 label units beyond each edge keeps y - eps invertible
    const auto [lo, hi] = label_range.front();
    oracle.y0 = lo - 8.0;
    oracle.height = (hi - lo) + 16.0;
    oracle.k = 8.0 / (hi - lo);
  }
  return oracle;
}

double oracle_apply(const OracleFn& oracle, double x) {
  switch (oracle.kind) {
    case OracleKind::Linear: return oracle.a * x + oracle.b;
    case OracleKind::Sinusoid: return x + oracle.amp * std::sin(oracle.freq * x);
    case OracleKind::Cubic: return oracle.c3 * x * x * x + oracle.c1 * x;
    case OracleKind::Logistic:
      return oracle.y0 + oracle.height / (1.0 + std::exp(-oracle.k * x));
    case OracleKind::PiecewiseLinear:
      return x < 0.0 ? oracle.lo_slope * x : oracle.hi_slope * x;
  }
  throw std::logic_error("oracle_apply: bad enum value");
}

Vec oracle_apply(const OracleFn& oracle, const Vec& x) {
  if (oracle.kind != OracleKind::Linear && x.size() != 1)
    throw std::invalid_argument("oracle_apply: nonlinear oracles are one-dimensional");
  Vec y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = oracle_apply(oracle, x(i));
  return y;
}

namespace {

// Strictly increasing f: bracket then bisect, with a Newton-style polish via
// the secant of the final bracket. Resolves to ~1e-14 relative.
double invert_monotone(const OracleFn& oracle, double y) {
  double lo = -1.0, hi = 1.0;
  for (int i = 0; i < 200 && oracle_apply(oracle, lo) > y; ++i) lo *= 2.0;
  for (int i = 0; i < 200 && oracle_apply(oracle, hi) < y; ++i) hi *= 2.0;
  if (oracle_apply(oracle, lo) > y || oracle_apply(oracle, hi) < y)
    throw std::invalid_argument("oracle_invert: label outside the oracle's co-domain");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (oracle_apply(oracle, mid) < y)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double oracle_invert(const OracleFn& oracle, double y) {
  switch (oracle.kind) {
    case OracleKind::Linear:
      if (oracle.a == 0.0) throw std::invalid_argument("oracle_invert: zero slope");
      return (y - oracle.b) / oracle.a;
    case OracleKind::Logistic: {
      const double span = oracle.height;
      double t = (y - oracle.y0) / span;
      // clamp just inside the open co-domain; draws this far out are ~8 sigma
      t = std::clamp(t, 1e-12, 1.0 - 1e-12);
      return -std::log(1.0 / t - 1.0) / oracle.k;
    }
    case OracleKind::PiecewiseLinear:
      return y < 0.0 ? y / oracle.lo_slope : y / oracle.hi_slope;
    case OracleKind::Sinusoid:
    case OracleKind::Cubic:
      return invert_monotone(oracle, y);
  }
  throw std::logic_error("oracle_invert: bad enum value");
}

Vec oracle_invert(const OracleFn& oracle, const Vec& y) {
  Vec x(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) x(i) = oracle_invert(oracle, y(i));
  return x;
}

bool oracle_invertible_on(const OracleFn& oracle,
                          const std::vector<std::pair<double, double>>& range) {
  if (range.empty()) return false;
  if (oracle.kind != OracleKind::Linear && range.size() != 1) return false;
  switch (oracle.kind) {
    case OracleKind::Linear: return oracle.a != 0.0;
    case OracleKind::Sinusoid: return std::abs(oracle.amp * oracle.freq) < 1.0;
    case OracleKind::Cubic: return oracle.c3 > 0.0 && oracle.c1 >= 0.0;
    case OracleKind::Logistic:
      return oracle.k > 0.0 && oracle.height > 0.0 &&
             oracle.y0 < range[0].first && oracle.y0 + oracle.height > range[0].second;
    case OracleKind::PiecewiseLinear:
      return oracle.lo_slope > 0.0 && oracle.hi_slope > 0.0;
  }
  return false;
}

DistKind dist_kind_from_name(std::string_view name) {
  if (name == "normal") return DistKind::Normal;
  if (name == "exponential") return DistKind::Exponential;
  if (name == "mvn") return DistKind::Mvn;
  throw std::invalid_argument("unknown distribution kind: " + std::string(name));
}

std::string_view dist_kind_name(DistKind kind) {
  switch (kind) {
    case DistKind::Normal: return "normal";
    case DistKind::Exponential: return "exponential";
    case DistKind::Mvn: return "mvn";
  }
  throw std::logic_error("dist_kind_name: bad enum value");
}

SkewLevel skew_level_from_name(std::string_view name) {
  if (name == "low") return SkewLevel::Low;
  if (name == "moderate") return SkewLevel::Moderate;
  if (name == "high") return SkewLevel::High;
  throw std::invalid_argument("unknown skew level: " + std::string(name));
}

std::string_view skew_level_name(SkewLevel level) {
  switch (level) {
    case SkewLevel::Low: return "low";
    case SkewLevel::Moderate: return "moderate";
    case SkewLevel::High: return "high";
  }
  throw std::logic_error("skew_level_name: bad enum value");
}

double LabelDistSpec::pdf(const Eigen::Ref<const Vec>& y) const {
  if (y.size() != dim()) throw std::invalid_argument("LabelDistSpec::pdf: dimension mismatch");
  switch (kind) {
    case DistKind::Normal: {
      const double z = (y(0) - mean) / stddev;
      return std::exp(-0.5 * z * z) / (stddev * std::sqrt(2.0 * std::numbers::pi));
    }
    case DistKind::Exponential:
      return y(0) < offset ? 0.0 : rate * std::exp(-rate * (y(0) - offset));
    case DistKind::Mvn:
      return std::exp(log_gaussian_full(y, mvn_mean, mvn_cov));
  }
  throw std::logic_error("LabelDistSpec::pdf: bad enum value");
}

LabelDistSpec make_dist_spec(DistKind kind, SkewLevel skew) {
  LabelDistSpec spec;
  spec.kind = kind;
  spec.skew = skew;
  const int level = static_cast<int>(skew);  // 0 low, 1 moderate, 2 high
  switch (kind) {
    case DistKind::Normal: {
      const double stds[] = {2.0, 1.0, 0.5};
      spec.mean = 0.0;
      spec.stddev = stds[level];
      spec.range = {{-5.0, 5.0}};
      break;
    }
    case DistKind::Exponential: {
      const double rates[] = {0.5, 1.0, 2.0};
      spec.rate = rates[level];
      spec.offset = 0.0;
      spec.range = {{0.0, 10.0}};
      break;
    }
    case DistKind::Mvn: {
      const double scales[] = {2.0, 1.0, 0.5};
      spec.mvn_mean = Vec::Zero(2);
      spec.mvn_cov = scales[level] * Mat::Identity(2, 2);
      spec.range = {{-5.0, 5.0}, {-5.0, 5.0}};
      break;
    }
  }
  return spec;
}

namespace {

bool in_range(const Vec& y, const std::vector<std::pair<double, double>>& range) {
  for (Eigen::Index j = 0; j < y.size(); ++j)
    if (y(j) < range[static_cast<size_t>(j)].first ||
        y(j) > range[static_cast<size_t>(j)].second)
      return false;
  return true;
}

Vec sample_label(const LabelDistSpec& spec, Rng& rng) {
  const int d = spec.dim();
  Mat chol;
  if (spec.kind == DistKind::Mvn) chol = cholesky_with_jitter(spec.mvn_cov).matrixL();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Vec y(d);
    switch (spec.kind) {
      case DistKind::Normal: y(0) = rng.normal(spec.mean, spec.stddev); break;
      case DistKind::Exponential: y(0) = spec.offset + rng.exponential(spec.rate); break;
      case DistKind::Mvn: {
        Vec z(d);
        for (int j = 0; j < d; ++j) z(j) = rng.normal();
        y = spec.mvn_mean + chol * z;
        break;
      }
    }
    if (in_range(y, spec.range)) return y;
  }
  throw std::runtime_error("generate: rejection sampling failed; range has too little mass");
}

}  // namespace

SyntheticDataset generate(const LabelDistSpec& spec, const OracleFn& oracle, int n,
                          std::uint64_t seed, Split split) {
  if (n < 1) throw std::invalid_argument("generate: n must be >= 1");
  if (spec.dim() < 1) throw std::invalid_argument("generate: label range is empty");
  if (!oracle_invertible_on(oracle, spec.range))
    throw std::invalid_argument("generate: oracle is not invertible on the label range");
  const int d = spec.dim();

  SyntheticDataset data;
  data.oracle = oracle;
  data.seed = seed;
  data.split = split;
  data.label_range = spec.range;

  if (split == Split::Test) {
    // even grid over the range, noiseless; for d > 1 use the nearest per-axis
    // grid size so the total count is m^d
    const int m = d == 1 ? n
                         : std::max(2, static_cast<int>(std::llround(
                                            std::pow(static_cast<double>(n), 1.0 / d))));
    const int total = d == 1 ? n : static_cast<int>(std::llround(std::pow(m, d)));
    data.labels.resize(total, d);
    for (int i = 0; i < total; ++i) {
      int rem = i;
      for (int j = d - 1; j >= 0; --j) {
        const int idx = rem % m;
        rem /= m;
        const auto [lo, hi] = spec.range[static_cast<size_t>(j)];
        data.labels(i, j) = m == 1 ? lo : lo + (hi - lo) * idx / (m - 1);
      }
    }
    data.noise = Mat::Zero(data.labels.rows(), d);
    data.inputs.resize(data.labels.rows(), d);
    for (Eigen::Index i = 0; i < data.labels.rows(); ++i)
      data.inputs.row(i) = oracle_invert(oracle, Vec(data.labels.row(i).transpose())).transpose();
    return data;
  }

  Rng label_rng = Rng(seed).derive(0x6c6162);  // "lab"
  Rng noise_rng = Rng(seed).derive(0x657073);  // "eps"
  data.labels.resize(n, d);
  for (int i = 0; i < n; ++i) data.labels.row(i) = sample_label(spec, label_rng).transpose();
  data.noise.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) data.noise(i, j) = generator_noise_scale * noise_rng.normal();
  data.inputs.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const Vec clean = data.labels.row(i).transpose() - data.noise.row(i).transpose();
    data.inputs.row(i) = oracle_invert(oracle, clean).transpose();
  }
  return data;
}

}  // namespace balreg
