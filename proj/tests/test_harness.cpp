#include <algorithm>
#include <sstream>
#include <string>

#include "doctest.h"
#include "semnet/errors.hpp"
#include "semnet/harness.hpp"

using namespace semnet;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("empty document gives the defaults") {
  const ScenarioConfig c = parse_config("{}");
  CHECK(c.topology.num_mus == 200);
  CHECK(c.topology.num_pico == 5);
  CHECK(c.topology.num_femto == 10);
  CHECK(c.topology.bandwidth_hz == 2e6);
  CHECK(c.alpha == 0.95);
  CHECK(c.eta.tau == 0.5);
  CHECK(c.eta.sigma == 0.1);
  CHECK(c.bitrate_threshold == 1e4);
  CHECK(c.methods == std::vector<std::string>{"two-stage", "max-sinr-wf", "max-sinr-even"});
  CHECK(c.seeds(20).size() == 20);
  CHECK(c.seeds(1) == std::vector<std::uint64_t>{1});
}

TEST_CASE("config round trip") {
  const ScenarioConfig c = parse_config(R"({"alpha": 0.75, "eta": {"tau": 0.3},
      "topology": {"num_mus": 40}, "methods": ["two-stage"], "num_seeds": 3,
      "sweep": {"variable": "tau", "values": [0.3, 0.7]}})");
  const auto j = config_to_json(c);
  const ScenarioConfig back = parse_config(j.dump());
  CHECK(config_to_json(back) == j);
  CHECK(back.alpha == 0.75);
  CHECK(back.topology.num_mus == 40);
  CHECK(back.num_seeds == 3);
  REQUIRE(back.sweep);
  CHECK(back.sweep->values == std::vector<double>{0.3, 0.7});
}

TEST_CASE("malformed config reports where") {
  const std::string bad = "{\n  \"alpha\": 0.9,\n  \"eta\": {\"tau\": }\n}";
  const auto msg = config_error(bad);
  CHECK(contains(msg, "line 3"));
  CHECK(contains(config_error(R"({"topology": {"num_mu": 10}})"), "topology.num_mu"));
  CHECK(contains(config_error(R"({"alpha": "high"})"), "alpha"));
  CHECK(contains(config_error(R"({"alpha": 1.0})"), "alpha"));
  CHECK(contains(config_error(R"({"eta": {"tau": 0}})"), "eta.tau"));
  CHECK(contains(config_error(R"({"eta": {"sigma": -1}})"), "eta.sigma"));
  CHECK(contains(config_error(R"({"bitrate_threshold_bps": 0})"), "bitrate_threshold_bps"));
  CHECK(contains(config_error(R"({"methods": ["two-stage", "magic"]})"), "magic"));
  CHECK(contains(config_error(R"({"sweep": {"variable": "kappa", "values": [1]}})"), "sweep.variable"));
  CHECK(contains(config_error(R"({"sweep": {"variable": "tau", "values": []}})"), "sweep.values"));
  CHECK(contains(config_error(R"({"knowledge": {"num_domains": 2, "kb_per_bs": 3}})"), "kb_per_bs"));
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("no users: every metric is zero") {
  ScenarioConfig c;
  c.topology.num_mus = 0;
  const auto result = run_scenario(c);
  REQUIRE(result.outcomes.size() == 3);
  for (const auto& o : result.outcomes) {
    CHECK(o.performance.expected_stm == 0.0);
    CHECK(o.performance.fbar == 0.0);
    CHECK(o.performance.bit_throughput == 0.0);
    CHECK(o.performance.unserved == 0);
  }
  std::ostringstream csv;
  write_results_csv(csv, c, result);
  CHECK(contains(csv.str(), "scenario_id,seed,method,alpha,tau,sigma,M,expected_stm,fbar,bit_throughput,unserved"));
}

TEST_CASE("default scenario: one row per method, two-stage ahead") {
  ScenarioConfig c;
  const auto result = run_scenario(c);
  REQUIRE(result.outcomes.size() == 3);
  CHECK(result.outcomes[0].method == "two-stage");
  const double mine = result.outcomes[0].performance.expected_stm;
  CHECK(mine >= result.outcomes[1].performance.expected_stm);
  CHECK(mine >= result.outcomes[2].performance.expected_stm);
  for (const auto& o : result.outcomes) {
    CHECK(o.performance.fbar <= o.performance.expected_stm);
    for (std::size_t j = 0; j < o.bs_budget.size(); ++j) CHECK(o.bs_allocated[j] <= o.bs_budget[j] * (1 + 1e-9));
  }
  const auto report = report_json(c, result);
  CHECK(report.contains("config"));
  CHECK(report.contains("runs"));
}

TEST_CASE("results are reproducible") {
  ScenarioConfig c;
  c.topology.num_mus = 60;
  c.num_seeds = 2;
  std::ostringstream a, b;
  write_results_csv(a, c, run_scenario(c));
  write_results_csv(b, c, run_scenario(c));
  CHECK(a.str() == b.str());
  ScenarioConfig other = c;
  other.seed = 9;
  std::ostringstream d;
  write_results_csv(d, other, run_scenario(other));
  CHECK(a.str() != d.str());
}

TEST_CASE("sweep values") {
  ScenarioConfig c;
  const auto bss = with_sweep_value(c, "num_bss", 11);
  CHECK(bss.topology.num_macro + bss.topology.num_pico + bss.topology.num_femto == 11);
  CHECK(bss.topology.num_pico == 3);
  CHECK(with_sweep_value(c, "num_bss", 16).topology.num_pico == 5);
  CHECK(with_sweep_value(c, "alpha", 0.55).alpha == 0.55);
  CHECK(with_sweep_value(c, "tau", 0.3).eta.tau == 0.3);
  CHECK(with_sweep_value(c, "num_mus", 80).topology.num_mus == 80);
  CHECK_THROWS_AS(with_sweep_value(c, "kappa", 1.0), ConfigError);
  CHECK_THROWS_AS(with_sweep_value(c, "alpha", 1.5), ConfigError);
}

TEST_CASE("sweep keeps base stations and seeds fixed across values") {
  ScenarioConfig c;
  const auto a = build_scenario(with_sweep_value(c, "num_mus", 40), 3);
  const auto b = build_scenario(with_sweep_value(c, "num_mus", 120), 3);
  CHECK(a.topology.base_stations == b.topology.base_stations);
  CHECK(a.knowledge.bs_kbs == b.knowledge.bs_kbs);

  c.num_seeds = 2;
  c.methods = {"two-stage"};
  const auto rows = sweep(c, "tau", {0.3, 0.7});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].seed == rows[2].seed);
  CHECK(rows[1].seed == rows[3].seed);
  for (int k = 0; k < 2; ++k) CHECK(rows[k + 2].expected_stm > rows[k].expected_stm);
  std::ostringstream csv, summary;
  write_sweep_csv(csv, rows);
  write_sweep_summary_csv(summary, rows);
  CHECK(contains(csv.str(), "variable,value,seed,method,expected_stm,fbar,unserved\n"));
  CHECK(contains(summary.str(), "tau,0.7,two-stage,2,"));
  CHECK_THROWS_AS(sweep(c, "tau", {}), ConfigError);
}

TEST_CASE("validation suite on the default config") {
  ScenarioConfig c;
  ValidateOptions o;
  o.chance_trials = 20000;
  const auto report = validate(c, o);
  for (const auto& check : report.checks) {
    INFO(check.name << ": " << check.detail);
    CHECK(check.passed);
  }
  CHECK(report.oracle_ratios.size() == o.oracle_instances);
  const auto j = validation_json(report);
  CHECK(j.at("passed") == report.passed());
}

TEST_CASE("validation at the median and without variance") {
  ScenarioConfig median;
  median.alpha = 0.5;
  median.topology.num_mus = 60;
  ValidateOptions o;
  o.oracle_instances = 5;
  o.chance_trials = 20000;
  const auto r = validate(median, o);
  auto find = [](const ValidationReport& rep, const std::string& name) {
    return std::find_if(rep.checks.begin(), rep.checks.end(), [&](const auto& c) { return c.name == name; });
  };
  REQUIRE(find(r, "quantile_median") != r.checks.end());
  CHECK(find(r, "quantile_median")->passed);
  REQUIRE(find(r, "median_bound_is_mean") != r.checks.end());
  CHECK(find(r, "median_bound_is_mean")->passed);

  ScenarioConfig flat;
  flat.eta.sigma = 0.0;
  flat.topology.num_mus = 60;
  const auto f = validate(flat, o);
  REQUIRE(find(f, "risk_term_zero_two-stage") != f.checks.end());
  for (const auto& c : f.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1e-7) == "1e-07");
  CHECK(format_number(123456.789) == "123456.789");
}

}  // TEST_SUITE
