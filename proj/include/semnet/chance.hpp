#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semnet/matrix.hpp"
#include "semnet/semantics.hpp"

namespace semnet {

// Standard normal CDF via erfc.
double std_normal_cdf(double z);

// Inverse standard normal CDF. Throws std::domain_error unless 0 < alpha < 1.
double std_normal_quantile(double alpha);

// Deterministic equivalent of the random message throughput F = sum_i eta_i y_i
// at confidence alpha:
//   Fbar(x) = tau * sum_ij x_ij xi_ij - sigma * q * ||y||_2,  y_i = sum_j x_ij xi_ij
// with q = Phi^-1(alpha).
struct DeterministicObjective {
  double tau = 0.5;
  double sigma = 0.1;
  double alpha = 0.95;
  double q = 0.0;
  Matrix xi_t;  // msg/s at the minimum bandwidth, users x BSs
  double eps_norm = 0.0;

  std::size_t num_mu() const { return xi_t.rows(); }
  std::size_t num_bs() const { return xi_t.cols(); }
};

DeterministicObjective make_objective(const EtaModel& eta, double alpha, Matrix xi_t);

struct ObjectiveEval {
  double value = 0.0;
  Matrix gradient;
};

// Per-user message rates y_i = sum_j x_ij xi_ij.
std::vector<double> user_rates(const DeterministicObjective& obj, const Matrix& x);

// tau * sum(y) - sigma * q * ||y||_2 for explicit per-user rates.
double confidence_bound(double tau, double sigma, double q, std::span<const double> rates);

double objective_value(const DeterministicObjective& obj, const Matrix& x);
Matrix objective_gradient(const DeterministicObjective& obj, const Matrix& x);
ObjectiveEval evaluate(const DeterministicObjective& obj, const Matrix& x);

struct ChanceCheckOptions {
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  bool clamp = true;  // clamp eta into (0, 1) as the sampler does
};

// Empirical Pr{ sum_i eta_i y_i >= fbar } over independent eta draws.
double chance_check(std::span<const double> rates, double fbar, const EtaModel& eta,
                    const ChanceCheckOptions& options);

double chance_check(const DeterministicObjective& obj, const Matrix& x_binary, double fbar,
                    const EtaModel& eta, const ChanceCheckOptions& options);

}  // namespace semnet
