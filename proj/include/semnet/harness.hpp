#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "semnet/metrics.hpp"
#include "semnet/solver.hpp"
#include "semnet/topology.hpp"

namespace semnet {

struct KnowledgeParams {
  int num_domains = 4;
  int kb_per_bs = 2;
  int needs_per_mu = 1;
};

struct SweepSpec {
  std::string variable;  // num_mus | alpha | tau | num_bss
  std::vector<double> values;
};

struct ScenarioConfig {
  std::string scenario_id = "default";
  TopologyParams topology;
  KnowledgeParams knowledge;
  double kappa = kDefaultKappa;
  EtaModel eta;
  double alpha = 0.95;
  double bitrate_threshold = 1e4;  // bit/s
  BarrierParams barrier;
  bool admission = true;  // block users up front when budgets cannot hold everyone
  // Baselines pick the strongest BS within the feasible set; the "-any"
  // method variants ignore the feasible sets.
  bool baseline_respects_kb = true;
  std::vector<std::string> methods = {"two-stage", "max-sinr-wf", "max-sinr-even"};
  std::uint64_t seed = 1;
  std::optional<int> num_seeds;  // defaults: 1 for a single run, 20 for sweeps
  std::size_t chance_trials = 0;  // > 0 adds an empirical confidence check per run
  std::optional<SweepSpec> sweep;

  std::vector<std::uint64_t> seeds(int fallback_count) const;
};

// Reads a config document; unspecified fields keep their defaults. Throws
// ConfigError naming the offending field (or line/column for JSON syntax).
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ScenarioConfig& config);
void validate_config(const ScenarioConfig& config);

bool is_known_method(const std::string& method);

// Everything derived from one (config, seed) pair.
struct Scenario {
  Topology topology;
  KnowledgeModel knowledge;
  FeasibleSets feasible;
  ChannelState channel;
  B2mProfile b2m;
  UaInstance instance;
};

Scenario build_scenario(const ScenarioConfig& config, std::uint64_t seed);

struct MethodOutcome {
  std::string method;
  std::uint64_t seed = 0;
  Association association;
  Allocation allocation;
  PerformanceReport performance;
  std::size_t blocked = 0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double relaxed_residual = 0.0;
  std::vector<double> barrier_trace;
  std::vector<double> r_trace;
  double realized_stm = 0.0;  // one eta draw
  std::size_t eta_clamped = 0;
  std::optional<double> chance_probability;
  std::vector<std::size_t> bs_users;
  std::vector<double> bs_min_load;   // sum of nT over served users, Hz
  std::vector<double> bs_allocated;  // Hz
  std::vector<double> bs_budget;     // Hz
};

MethodOutcome run_method(const ScenarioConfig& config, const Scenario& scenario,
                         const std::string& method, std::uint64_t seed);

struct ScenarioResult {
  std::vector<MethodOutcome> outcomes;  // ordered by (seed, method)
};

ScenarioResult run_scenario(const ScenarioConfig& config);

void write_results_csv(std::ostream& out, const ScenarioConfig& config,
                       const ScenarioResult& result);
void write_trace_csv(std::ostream& out, const ScenarioResult& result);
nlohmann::json report_json(const ScenarioConfig& config, const ScenarioResult& result);

struct SweepRow {
  std::string variable;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string method;
  double expected_stm = 0.0;
  double fbar = 0.0;
  std::size_t unserved = 0;
};

// Applies one sweep value to a copy of the config.
ScenarioConfig with_sweep_value(const ScenarioConfig& config, const std::string& variable,
                                double value);

std::vector<SweepRow> sweep(const ScenarioConfig& config, const std::string& variable,
                            const std::vector<double>& values);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
// Mean and standard deviation across seeds per (value, method).
void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepRow>& rows);

std::string format_number(double v);

// Small random instance for exhaustive cross-checks: 2-3 BSs, 3-6 users,
// budgets of a few minimum-bandwidth units.
struct TinyInstance {
  UaInstance instance;
  double quantum = 0.0;  // finest grid the oracle can enumerate
};
TinyInstance make_tiny_instance(std::uint64_t seed, const EtaModel& eta, double alpha,
                                double bitrate_threshold = 1e4);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<double> oracle_ratios;  // two-stage Fbar / oracle Fbar
  bool passed() const;
};

struct ValidateOptions {
  std::size_t gradient_points = 20;
  std::size_t oracle_instances = 20;
  std::size_t chance_trials = 100000;
};

ValidationReport validate(const ScenarioConfig& config, const ValidateOptions& options = {});
void write_validation_table(std::ostream& out, const ValidationReport& report);
nlohmann::json validation_json(const ValidationReport& report);

}  // namespace semnet
