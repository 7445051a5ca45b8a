#ifndef BALREG_DATASET_HPP
#define BALREG_DATASET_HPP

#include "balreg/numerics.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace balreg {

enum class OracleKind { Linear, Sinusoid, Cubic, Logistic, PiecewiseLinear };

OracleKind oracle_kind_from_name(std::string_view name);
std::string_view oracle_kind_name(OracleKind kind);

/// Ground-truth invertible mapping f : X -> Y used by the generator.
/// Linear applies componentwise in any dimension; the nonlinear kinds are
/// one-dimensional, strictly increasing curves.
struct OracleFn {
  OracleKind kind = OracleKind::Linear;
  // linear: y = a x + b
  double a = 1.0;
  double b = 0.0;
  // sinusoid: y = x + amp sin(freq x); monotone while amp * freq < 1
  double amp = 2.0;
  double freq = 0.4;
  // cubic: y = c3 x^3 + c1 x
  double c3 = 0.04;
  double c1 = 0.2;
  // logistic: y = y0 + height / (1 + exp(-k x))
  double k = 0.8;
  double y0 = -13.0;
  double height = 26.0;
  // piecewise linear through the origin: slope lo_slope for x < 0, hi_slope above
  double lo_slope = 0.4;
  double hi_slope = 2.5;
};

/// Per-kind defaults with the logistic co-domain widened well past the label
/// range so noisy labels stay invertible.
OracleFn default_oracle(OracleKind kind,
                        const std::vector<std::pair<double, double>>& label_range);

double oracle_apply(const OracleFn& oracle, double x);
Vec oracle_apply(const OracleFn& oracle, const Vec& x);
double oracle_invert(const OracleFn& oracle, double y);
Vec oracle_invert(const OracleFn& oracle, const Vec& y);

/// True when f is strictly increasing and covers [lo, hi] per dimension.
bool oracle_invertible_on(const OracleFn& oracle,
                          const std::vector<std::pair<double, double>>& range);

enum class DistKind { Normal, Exponential, Mvn };
enum class SkewLevel { Low, Moderate, High };

DistKind dist_kind_from_name(std::string_view name);
std::string_view dist_kind_name(DistKind kind);
SkewLevel skew_level_from_name(std::string_view name);
std::string_view skew_level_name(SkewLevel level);

/// Training label distribution with a skew level and a per-dimension range.
/// Sampling rejects draws outside the range.
struct LabelDistSpec {
  DistKind kind = DistKind::Normal;
  SkewLevel skew = SkewLevel::High;
  std::vector<std::pair<double, double>> range;  // per dimension

  double mean = 0.0;   // normal
  double stddev = 1.0;
  double rate = 1.0;   // exponential
  double offset = 0.0;
  Vec mvn_mean;        // mvn
  Mat mvn_cov;

  int dim() const { return static_cast<int>(range.size()); }
  /// Analytic (unclipped) density of the nominal distribution.
  double pdf(const Eigen::Ref<const Vec>& y) const;
};

/// Benchmark constants per (distribution, skew level):
///   normal      std 2.0 / 1.0 / 0.5, mean 0, range (-5, 5)
///   exponential rate 0.5 / 1.0 / 2.0, offset 0, range (0, 10)
///   mvn         cov 2.0 / 1.0 / 0.5 * I, mean 0, range (-5, 5)^2
LabelDistSpec make_dist_spec(DistKind kind, SkewLevel skew);

enum class Split { Train, Test };

/// Synthetic regression data. Train: labels y drawn from the label
/// distribution, noise eps ~ N(0, I), inputs x = f^-1(y - eps), so that
/// y = f(x) + eps holds exactly. Test: labels on an even grid, eps = 0.
struct SyntheticDataset {
  Mat inputs;  // n x m
  Mat labels;  // n x d
  Mat noise;   // n x d
  OracleFn oracle;
  std::uint64_t seed = 0;
  Split split = Split::Train;
  std::vector<std::pair<double, double>> label_range;

  int size() const { return static_cast<int>(labels.rows()); }
  int label_dim() const { return static_cast<int>(labels.cols()); }
  int input_dim() const { return static_cast<int>(inputs.cols()); }
};

/// Injected noise scale of the generator (the "true" sigma).
inline constexpr double generator_noise_scale = 1.0;

SyntheticDataset generate(const LabelDistSpec& spec, const OracleFn& oracle, int n,
                          std::uint64_t seed, Split split);

}  // namespace balreg

#endif  // BALREG_DATASET_HPP
