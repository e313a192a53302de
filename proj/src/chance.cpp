#include "semnet/chance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "semnet/rng.hpp"

namespace semnet {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

// Acklam's rational approximation, relative error about 1e-9.
double acklam_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > p_high) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double std_normal_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("std_normal_quantile: alpha must lie in (0, 1)");
  }
  if (alpha == 0.5) return 0.0;
  double z = acklam_quantile(alpha);
  // One Newton step against the erfc-based CDF.
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  z -= (std_normal_cdf(z) - alpha) / pdf;
  return z;
}

DeterministicObjective make_objective(const EtaModel& eta, double alpha, Matrix xi_t) {
  DeterministicObjective obj;
  obj.tau = eta.tau;
  obj.sigma = eta.sigma;
  obj.alpha = alpha;
  obj.q = std_normal_quantile(alpha);
  double max_xi = 0.0;
  for (double v : xi_t.data()) max_xi = std::max(max_xi, v);
  obj.eps_norm = 1e-12 * max_xi;
  obj.xi_t = std::move(xi_t);
  return obj;
}

std::vector<double> user_rates(const DeterministicObjective& obj, const Matrix& x) {
  require_shape(x, obj.num_mu(), obj.num_bs(), "user_rates");
  std::vector<double> y(obj.num_mu(), 0.0);
  for (std::size_t i = 0; i < obj.num_mu(); ++i) {
    for (std::size_t j = 0; j < obj.num_bs(); ++j) y[i] += x(i, j) * obj.xi_t(i, j);
  }
  return y;
}

double confidence_bound(double tau, double sigma, double q, std::span<const double> rates) {
  double sum = 0.0;
  double sq = 0.0;
  for (double y : rates) {
    sum += y;
    sq += y * y;
  }
  return tau * sum - sigma * q * std::sqrt(sq);
}

double objective_value(const DeterministicObjective& obj, const Matrix& x) {
  const auto y = user_rates(obj, x);
  return confidence_bound(obj.tau, obj.sigma, obj.q, y);
}

Matrix objective_gradient(const DeterministicObjective& obj, const Matrix& x) {
  return evaluate(obj, x).gradient;
}

ObjectiveEval evaluate(const DeterministicObjective& obj, const Matrix& x) {
  const auto y = user_rates(obj, x);
  double sum = 0.0;
  double sq = 0.0;
  for (double v : y) {
    sum += v;
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  const double risk = obj.sigma * obj.q / std::max(norm, obj.eps_norm > 0.0 ? obj.eps_norm : 1e-300);

  ObjectiveEval out{obj.tau * sum - obj.sigma * obj.q * norm, Matrix(x.rows(), x.cols())};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double xi = obj.xi_t(i, j);
      out.gradient(i, j) = obj.tau * xi - risk * y[i] * xi;
    }
  }
  return out;
}

double chance_check(std::span<const double> rates, double fbar, const EtaModel& eta,
                    const ChanceCheckOptions& options) {
  if (options.trials == 0) throw std::invalid_argument("chance_check: trials must be >= 1");
  auto gen = make_stream(options.seed, Stream::kChanceCheck);
  std::normal_distribution<double> normal(eta.tau, eta.sigma);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < options.trials; ++t) {
    double f = 0.0;
    for (double y : rates) {
      double e = eta.sigma > 0.0 ? normal(gen) : eta.tau;
      if (options.clamp) e = std::clamp(e, kEtaClampEps, 1.0 - kEtaClampEps);
      f += e * y;
    }
    if (f >= fbar) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(options.trials);
}

double chance_check(const DeterministicObjective& obj, const Matrix& x_binary, double fbar,
                    const EtaModel& eta, const ChanceCheckOptions& options) {
  const auto y = user_rates(obj, x_binary);
  return chance_check(y, fbar, eta, options);
}

}  // namespace semnet
