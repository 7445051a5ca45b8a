#ifndef BALREG_VERIFY_HPP
#define BALREG_VERIFY_HPP

#include "balreg/losses.hpp"
#include "balreg/priors.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace balreg {

struct CheckResult {
  std::string name;
  bool pass = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  int cases = 0;
};

/// Grid-quadrature evaluation of the balanced loss integral; the independent
/// route the closed-form implementation is checked against.
double gai_loss_by_quadrature(const Vec& target, const Vec& pred, double sigma,
                              const GmmPrior& prior, int points_per_dim);

/// Analytic gradients of all six loss kinds vs central finite differences,
/// relative tolerance 1e-4 over 100 random instances per kind.
std::vector<CheckResult> verify_gradcheck(std::uint64_t seed);

/// Closed-form loss vs grid quadrature within 1e-6 on 50 random instances
/// (d <= 2, K <= 4).
std::vector<CheckResult> verify_quadrature(std::uint64_t seed);

/// Discrete statistical-conversion identity: reconverting the balanced
/// posterior equals direct Bayes on 1000 random tables, max error 1e-12.
std::vector<CheckResult> verify_theorem1(std::uint64_t seed);

/// Batch Monte-Carlo estimate of the prior integral vs the analytic value,
/// relative 1e-2 at N = 1e5 with fixed seeds.
std::vector<CheckResult> verify_bmc_convergence(std::uint64_t seed);

/// Suites: gradcheck, quadrature, theorem1, bmc-convergence, all.
/// Throws std::invalid_argument for an unknown suite name.
std::vector<CheckResult> run_verify_suite(const std::string& suite, std::uint64_t seed = 20240u);

}  // namespace balreg

#endif  // BALREG_VERIFY_HPP
