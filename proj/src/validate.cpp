#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "semnet/errors.hpp"
#include "semnet/harness.hpp"
#include "semnet/rng.hpp"

namespace semnet {

namespace {

ValidationCheck make_check(std::string name, bool passed, std::string detail) {
  return {std::move(name), passed, std::move(detail)};
}

// Random row-stochastic point over the full BS set.
Matrix random_association(std::mt19937_64& gen, std::size_t m, std::size_t l) {
  Matrix x(m, l);
  for (std::size_t i = 0; i < m; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      x(i, j) = 0.05 + uniform01(gen);
      sum += x(i, j);
    }
    for (std::size_t j = 0; j < l; ++j) x(i, j) /= sum;
  }
  return x;
}

DeterministicObjective random_objective(std::mt19937_64& gen, const ScenarioConfig& config,
                                        std::size_t m, std::size_t l) {
  Matrix xi(m, l);
  for (double& v : xi.data()) v = 1.0 + 20.0 * uniform01(gen);
  return make_objective(config.eta, config.alpha, std::move(xi));
}

}  // namespace

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ValidationReport validate(const ScenarioConfig& config, const ValidateOptions& options) {
  validate_config(config);
  ValidationReport report;
  auto gen = make_stream(config.seed, Stream::kValidate);

  {
    // Quantile accuracy on a fixed grid plus the configured alpha.
    std::vector<double> alphas = {0.01, 0.1, 0.5, 0.55, 0.75, 0.9, 0.95, 0.975, 0.99, config.alpha};
    double worst = 0.0;
    for (double a : alphas) worst = std::max(worst, std::abs(std_normal_cdf(std_normal_quantile(a)) - a));
    report.checks.push_back(make_check("quantile_accuracy", worst < 1e-10,
                                       "max |Phi(q) - alpha| = " + format_number(worst)));
    if (config.alpha == 0.5) {
      const double q = std_normal_quantile(0.5);
      report.checks.push_back(make_check("quantile_median", q == 0.0, "q = " + format_number(q)));
    }
  }

  {
    double worst = 0.0;
    for (std::size_t p = 0; p < options.gradient_points; ++p) {
      const std::size_t m = 1 + gen() % 10;
      const std::size_t l = 1 + gen() % 5;
      const auto obj = random_objective(gen, config, m, l);
      Matrix x = random_association(gen, m, l);
      const Matrix g = objective_gradient(obj, x);
      double gmax = 0.0;
      for (double v : g.data()) gmax = std::max(gmax, std::abs(v));
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double h = 1e-6;
        const double saved = x.data()[k];
        x.data()[k] = saved + h;
        const double up = objective_value(obj, x);
        x.data()[k] = saved - h;
        const double down = objective_value(obj, x);
        x.data()[k] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max(std::abs(g.data()[k]), 1e-3 * gmax);
        if (denom > 0.0) worst = std::max(worst, std::abs(fd - g.data()[k]) / denom);
      }
    }
    report.checks.push_back(make_check("gradient_finite_difference", worst <= 1e-6,
                                       "max relative error " + format_number(worst)));
  }

  if (config.alpha >= 0.5) {
    double worst = 0.0;
    for (std::size_t p = 0; p < options.gradient_points; ++p) {
      const std::size_t m = 1 + gen() % 10;
      const std::size_t l = 1 + gen() % 5;
      const auto obj = random_objective(gen, config, m, l);
      const Matrix a = random_association(gen, m, l);
      const Matrix b = random_association(gen, m, l);
      const double lambda = uniform01(gen);
      Matrix mix(m, l);
      for (std::size_t k = 0; k < mix.size(); ++k) {
        mix.data()[k] = lambda * a.data()[k] + (1.0 - lambda) * b.data()[k];
      }
      const double gap = lambda * objective_value(obj, a) + (1.0 - lambda) * objective_value(obj, b) -
                         objective_value(obj, mix);
      worst = std::max(worst, gap);
    }
    report.checks.push_back(make_check("objective_concavity", worst <= 1e-9,
                                       "max chord excess " + format_number(worst)));
  }

  // Full scenario on the first seed: feasibility and bound checks per method.
  const std::uint64_t seed = config.seed;
  Scenario scenario;
  try {
    scenario = build_scenario(config, seed);
  } catch (const std::exception& e) {
    report.checks.push_back(make_check("scenario_build", false, e.what()));
    return report;
  }
  std::vector<MethodOutcome> outcomes;
  for (const auto& method : config.methods) {
    try {
      outcomes.push_back(run_method(config, scenario, method, seed));
    } catch (const std::exception& e) {
      report.checks.push_back(make_check("solve_" + method, false, e.what()));
    }
  }
  for (const auto& o : outcomes) {
    const bool kb = o.method == "two-stage" ||
                    (config.baseline_respects_kb && !o.method.ends_with("-any"));
    std::string problem = check_association(o.association, scenario.instance, kb);
    if (problem.empty()) problem = check_allocation(o.association, o.allocation, scenario.instance);
    report.checks.push_back(make_check("feasibility_" + o.method, problem.empty(),
                                       problem.empty() ? "ok" : problem));

    const auto& perf = o.performance;
    if (config.eta.sigma == 0.0) {
      report.checks.push_back(make_check("risk_term_zero_" + o.method, perf.fbar == perf.expected_stm,
                                         "fbar " + format_number(perf.fbar) + " vs expected " +
                                             format_number(perf.expected_stm)));
    } else if (config.alpha > 0.5) {
      report.checks.push_back(make_check("fbar_below_mean_" + o.method,
                                         perf.fbar <= perf.expected_stm,
                                         "fbar " + format_number(perf.fbar) + " <= " +
                                             format_number(perf.expected_stm)));
    }
  }

  // Empirical confidence at the two-stage solution.
  const auto two_stage = std::find_if(outcomes.begin(), outcomes.end(),
                                      [](const auto& o) { return o.method == "two-stage"; });
  if (two_stage != outcomes.end() && two_stage->performance.served > 0 &&
      config.eta.sigma > 0.0 && options.chance_trials > 0) {
    const auto& perf = two_stage->performance;
    const double p = chance_check(perf.per_mu_message_rate, perf.fbar, config.eta,
                                  {options.chance_trials, seed, true});
    const double n = static_cast<double>(options.chance_trials);
    const double band = 3.0 * std::sqrt(config.alpha * (1.0 - config.alpha) / n);
    report.checks.push_back(make_check("confidence_calibration", std::abs(p - config.alpha) <= band,
                                       "empirical " + format_number(p) + " vs alpha " +
                                           format_number(config.alpha) + " +/- " +
                                           format_number(band)));
    if (config.alpha == 0.5) {
      double mean = 0.0;
      for (double y : perf.per_mu_message_rate) mean += y;
      mean *= config.eta.tau;
      report.checks.push_back(make_check("median_bound_is_mean", perf.fbar == mean,
                                         "fbar " + format_number(perf.fbar) + " vs mean " +
                                             format_number(mean)));
    }
  }

  // Oracle gaps on tiny instances.
  {
    std::size_t good = 0;
    std::size_t dominated = 0;
    std::string failure;
    for (std::size_t t = 0; t < options.oracle_instances; ++t) {
      const auto tiny = make_tiny_instance(config.seed * 1000 + t, config.eta, config.alpha,
                                           config.bitrate_threshold);
      try {
        const auto sol = solve_two_stage(tiny.instance, config.barrier);
        const double mine = solution_fbar(tiny.instance, sol.association, sol.allocation);
        const auto oracle = oracle_enumerate(tiny.instance, tiny.quantum);
        const auto quantized = quantize_allocation(sol.association, sol.allocation, tiny.instance,
                                                   tiny.quantum);
        const double mine_q = solution_fbar(tiny.instance, sol.association, quantized);
        // The bound only applies when both serve the same number of users.
        if (sol.association.unserved().size() != oracle.association.unserved().size() ||
            oracle.fbar >= mine_q - 1e-9 * std::max(1.0, std::abs(oracle.fbar))) {
          ++dominated;
        }
        const double ratio = oracle.fbar > 0.0 ? mine / oracle.fbar : 1.0;
        report.oracle_ratios.push_back(ratio);
        if (ratio >= 0.85) ++good;
      } catch (const std::exception& e) {
        failure = e.what();
      }
    }
    const std::size_t n = options.oracle_instances;
    std::ostringstream detail;
    detail << good << "/" << n << " instances within 0.85 of the oracle";
    if (!failure.empty()) detail << "; error: " << failure;
    report.checks.push_back(
        make_check("oracle_gap", failure.empty() && n > 0 && good * 10 >= n * 9, detail.str()));
    report.checks.push_back(make_check("oracle_upper_bound", dominated == n,
                                       std::to_string(dominated) + "/" + std::to_string(n) +
                                           " quantized two-stage solutions bounded by the oracle"));
  }

  {
    // Same config twice must give byte-identical CSV.
    ScenarioConfig single = config;
    single.num_seeds = 1;
    std::ostringstream a;
    std::ostringstream b;
    try {
      write_results_csv(a, single, run_scenario(single));
      write_results_csv(b, single, run_scenario(single));
      report.checks.push_back(make_check("determinism", a.str() == b.str(),
                                         a.str() == b.str() ? "identical CSV" : "CSV differs"));
    } catch (const std::exception& e) {
      report.checks.push_back(make_check("determinism", false, e.what()));
    }
  }
  return report;
}

void write_validation_table(std::ostream& out, const ValidationReport& report) {
  out << "check,status,detail\n";
  for (const auto& c : report.checks) {
    out << c.name << ',' << (c.passed ? "PASS" : "FAIL") << ",\"" << c.detail << "\"\n";
  }
}

nlohmann::json validation_json(const ValidationReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  std::vector<double> sorted = report.oracle_ratios;
  std::sort(sorted.begin(), sorted.end());
  nlohmann::json gaps = {{"ratios", report.oracle_ratios}};
  if (!sorted.empty()) {
    gaps["min"] = sorted.front();
    gaps["median"] = sorted[sorted.size() / 2];
    gaps["max"] = sorted.back();
  }
  return {{"passed", report.passed()}, {"checks", checks}, {"oracle_gap", gaps}};
}

}  // namespace semnet
