#include "semnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "semnet/errors.hpp"
#include "semnet/rng.hpp"

namespace semnet {

std::string format_number(double v) { return fmt::format("{:.12g}", v); }

Scenario build_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  Scenario s;
  s.topology = generate_topology(config.topology, seed);
  s.knowledge = assign_knowledge(config.knowledge.num_domains, config.knowledge.kb_per_bs,
                                 config.knowledge.needs_per_mu, s.topology, seed);
  s.feasible = feasible_bs_sets(s.knowledge);
  s.channel = compute_sinr(s.topology);
  s.b2m = uniform_b2m(s.topology.num_mu(), config.kappa);
  std::vector<double> budgets;
  for (const auto& bs : s.topology.base_stations) budgets.push_back(bs.bandwidth_hz);
  s.instance = make_ua_instance(s.channel, s.feasible, std::move(budgets), s.b2m, config.eta,
                                config.alpha, config.bitrate_threshold);
  return s;
}

MethodOutcome run_method(const ScenarioConfig& config, const Scenario& scenario,
                         const std::string& method, std::uint64_t seed) {
  const UaInstance& inst = scenario.instance;
  MethodOutcome out;
  out.method = method;
  out.seed = seed;

  if (method == "two-stage") {
    TwoStageSolution sol;
    if (config.admission) {
      sol = solve_two_stage(inst, config.barrier);
    } else {
      sol.relaxed = solve_relaxed_ua(inst, config.barrier);
      sol.rounded = round_association(sol.relaxed, inst);
      sol.association = repair_overload(sol.rounded, sol.relaxed, inst);
      sol.allocation = allocate_residual(sol.association, inst);
    }
    out.association = std::move(sol.association);
    out.allocation = std::move(sol.allocation);
    out.blocked = sol.blocked.size();
    out.outer_iterations = sol.relaxed.outer_iterations;
    out.inner_iterations = sol.relaxed.inner_iterations;
    out.relaxed_residual = sol.relaxed.residual;
    out.barrier_trace = std::move(sol.relaxed.barrier_trace);
    out.r_trace = std::move(sol.relaxed.r_trace);
  } else if (method.starts_with("max-sinr-")) {
    const bool restrict = config.baseline_respects_kb && !method.ends_with("-any");
    out.association = baseline_max_sinr(scenario.channel, scenario.feasible, inst, restrict);
    const auto mode = method.starts_with("max-sinr-wf") ? BandwidthMode::kWaterfill
                                                        : BandwidthMode::kEven;
    out.allocation = baseline_ba(out.association, inst, mode);
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }

  out.performance = evaluate_performance(out.association, out.allocation, scenario.b2m,
                                         scenario.channel, inst.objective);
  const auto eta = sample_eta(config.eta, inst.num_mu(), seed);
  out.eta_clamped = eta.clamped;
  out.realized_stm = realized_stm(out.association, out.allocation, scenario.b2m,
                                  scenario.channel, eta.eta);
  if (config.chance_trials > 0) {
    out.chance_probability =
        chance_check(out.performance.per_mu_message_rate, out.performance.fbar, config.eta,
                     {config.chance_trials, seed, true});
  }

  const std::size_t l = inst.num_bs();
  out.bs_users.assign(l, 0);
  out.bs_min_load.assign(l, 0.0);
  out.bs_allocated.assign(l, 0.0);
  out.bs_budget = inst.budgets;
  for (std::size_t i = 0; i < inst.num_mu(); ++i) {
    const int s = out.association.serving[i];
    if (s == kUnserved) continue;
    const auto j = static_cast<std::size_t>(s);
    ++out.bs_users[j];
    out.bs_min_load[j] += inst.n_t(i, j);
    out.bs_allocated[j] += out.allocation.n(i, j);
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  validate_config(config);
  ScenarioResult result;
  for (std::uint64_t seed : config.seeds(1)) {
    const Scenario scenario = build_scenario(config, seed);
    for (const auto& method : config.methods) {
      result.outcomes.push_back(run_method(config, scenario, method, seed));
    }
  }
  return result;
}

void write_results_csv(std::ostream& out, const ScenarioConfig& config,
                       const ScenarioResult& result) {
  out << "scenario_id,seed,method,alpha,tau,sigma,M,expected_stm,fbar,bit_throughput,unserved\n";
  for (const auto& o : result.outcomes) {
    out << config.scenario_id << ',' << o.seed << ',' << o.method << ','
        << format_number(config.alpha) << ',' << format_number(config.eta.tau) << ','
        << format_number(config.eta.sigma) << ',' << o.association.num_mu() << ','
        << format_number(o.performance.expected_stm) << ',' << format_number(o.performance.fbar)
        << ',' << format_number(o.performance.bit_throughput) << ',' << o.performance.unserved
        << '\n';
  }
}

void write_trace_csv(std::ostream& out, const ScenarioResult& result) {
  out << "seed,method,outer_iteration,r,barrier_value\n";
  for (const auto& o : result.outcomes) {
    for (std::size_t k = 0; k < o.barrier_trace.size(); ++k) {
      out << o.seed << ',' << o.method << ',' << k << ',' << format_number(o.r_trace[k]) << ','
          << format_number(o.barrier_trace[k]) << '\n';
    }
  }
}

nlohmann::json report_json(const ScenarioConfig& config, const ScenarioResult& result) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& o : result.outcomes) {
    nlohmann::json per_bs = nlohmann::json::array();
    for (std::size_t j = 0; j < o.bs_budget.size(); ++j) {
      per_bs.push_back({{"bs", j},
                        {"users", o.bs_users[j]},
                        {"min_bandwidth_load_hz", o.bs_min_load[j]},
                        {"allocated_hz", o.bs_allocated[j]},
                        {"budget_hz", o.bs_budget[j]}});
    }
    double max_kkt = 0.0;
    for (double v : o.allocation.kkt_residual) max_kkt = std::max(max_kkt, v);
    nlohmann::json run = {
        {"seed", o.seed},
        {"method", o.method},
        {"expected_stm", o.performance.expected_stm},
        {"fbar", o.performance.fbar},
        {"bit_throughput", o.performance.bit_throughput},
        {"realized_stm", o.realized_stm},
        {"eta_clamped", o.eta_clamped},
        {"served", o.performance.served},
        {"unserved", o.association.unserved()},
        {"blocked_at_admission", o.blocked},
        {"per_bs", per_bs},
        {"iterations",
         {{"barrier_outer", o.outer_iterations},
          {"barrier_inner", o.inner_iterations},
          {"residual_allocation", o.allocation.iterations}}},
        {"kkt",
         {{"relaxed_projected_gradient", o.relaxed_residual},
          {"residual_allocation_max_hz", max_kkt}}},
    };
    if (o.chance_probability) run["chance_probability"] = *o.chance_probability;
    runs.push_back(std::move(run));
  }
  return {{"scenario_id", config.scenario_id}, {"config", config_to_json(config)}, {"runs", runs}};
}

ScenarioConfig with_sweep_value(const ScenarioConfig& config, const std::string& variable,
                                double value) {
  ScenarioConfig c = config;
  if (variable == "num_mus") {
    c.topology.num_mus = static_cast<int>(std::lround(value));
  } else if (variable == "alpha") {
    c.alpha = value;
  } else if (variable == "tau") {
    c.eta.tau = value;
  } else if (variable == "num_bss") {
    // Total BS count; small cells keep the 1:2 pico-to-femto mix.
    const int small = static_cast<int>(std::lround(value)) - c.topology.num_macro;
    if (small < 0) throw ConfigError("sweep value num_bss below the macro count");
    c.topology.num_pico = static_cast<int>(std::lround(small / 3.0));
    c.topology.num_femto = small - c.topology.num_pico;
  } else {
    throw ConfigError("unsupported sweep variable '" + variable + "'");
  }
  validate_config(c);
  return c;
}

std::vector<SweepRow> sweep(const ScenarioConfig& config, const std::string& variable,
                            const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  const auto seeds = config.seeds(20);
  for (double value : values) {
    const ScenarioConfig cell = with_sweep_value(config, variable, value);
    for (std::uint64_t seed : seeds) {
      const Scenario scenario = build_scenario(cell, seed);
      for (const auto& method : cell.methods) {
        const auto o = run_method(cell, scenario, method, seed);
        rows.push_back({variable, value, seed, method, o.performance.expected_stm,
                        o.performance.fbar, o.performance.unserved});
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "variable,value,seed,method,expected_stm,fbar,unserved\n";
  for (const auto& r : rows) {
    out << r.variable << ',' << format_number(r.value) << ',' << r.seed << ',' << r.method << ','
        << format_number(r.expected_stm) << ',' << format_number(r.fbar) << ',' << r.unserved
        << '\n';
  }
}

void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  struct Acc {
    std::vector<double> stm, fbar, unserved;
  };
  // Preserve first-appearance order of (value, method).
  std::vector<std::pair<double, std::string>> order;
  std::map<std::pair<double, std::string>, Acc> acc;
  std::string variable;
  for (const auto& r : rows) {
    variable = r.variable;
    const auto key = std::make_pair(r.value, r.method);
    if (!acc.count(key)) order.push_back(key);
    auto& a = acc[key];
    a.stm.push_back(r.expected_stm);
    a.fbar.push_back(r.fbar);
    a.unserved.push_back(static_cast<double>(r.unserved));
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return std::make_pair(mean, sd);
  };
  out << "variable,value,method,seeds,mean_expected_stm,std_expected_stm,mean_fbar,std_fbar,"
         "mean_unserved\n";
  for (const auto& key : order) {
    const auto& a = acc[key];
    const auto [stm_mean, stm_sd] = stats(a.stm);
    const auto [fbar_mean, fbar_sd] = stats(a.fbar);
    out << variable << ',' << format_number(key.first) << ',' << key.second << ','
        << a.stm.size() << ',' << format_number(stm_mean) << ',' << format_number(stm_sd) << ','
        << format_number(fbar_mean) << ',' << format_number(fbar_sd) << ','
        << format_number(stats(a.unserved).first) << '\n';
  }
}

TinyInstance make_tiny_instance(std::uint64_t seed, const EtaModel& eta, double alpha,
                                double bitrate_threshold) {
  auto gen = make_stream(seed, Stream::kValidate);
  TopologyParams params;
  params.region_radius_m = 150.0;
  params.num_macro = 1;
  params.num_pico = static_cast<int>(gen() % 2);
  params.num_femto = 1;
  params.num_mus = 3 + static_cast<int>(gen() % 4);
  const Topology topo = generate_topology(params, seed);
  const KnowledgeModel kb = assign_knowledge(3, 2, 1, topo, seed);
  const FeasibleSets fs = feasible_bs_sets(kb);
  const ChannelState channel = compute_sinr(topo);
  const B2mProfile b2m = uniform_b2m(topo.num_mu());

  // Budgets sized so the users' minimum bandwidths compete for them.
  std::vector<double> feasible_nt;
  for (std::size_t i = 0; i < topo.num_mu(); ++i) {
    for (std::size_t j : fs.sets[i]) {
      feasible_nt.push_back(bitrate_threshold / std::log2(1.0 + channel.gamma(i, j)));
    }
  }
  std::sort(feasible_nt.begin(), feasible_nt.end());
  const double median = feasible_nt[feasible_nt.size() / 2];
  const double per_bs = static_cast<double>(topo.num_mu()) / static_cast<double>(topo.num_bs());
  std::vector<double> budgets(topo.num_bs());
  for (auto& b : budgets) b = median * per_bs * (1.0 + 1.5 * uniform01(gen));

  TinyInstance tiny;
  tiny.instance = make_ua_instance(channel, fs, budgets, b2m, eta, alpha, bitrate_threshold);
  tiny.quantum = oracle_quantum(tiny.instance);
  return tiny;
}

}  // namespace semnet
