// Command-line front end: gen | solve | sweep | validate.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "semnet/errors.hpp"
#include "semnet/harness.hpp"

namespace fs = std::filesystem;
using namespace semnet;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string methods;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Scenario config (JSON)");
  cmd->add_option("--out", opts.out_dir, "Output directory (stdout when omitted)");
  cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
  cmd->add_option("--methods", opts.methods,
                  "Comma-separated methods: two-stage,max-sinr-wf,max-sinr-even");
}

ScenarioConfig resolve_config(const CommonOptions& opts) {
  ScenarioConfig config = opts.config_path.empty() ? ScenarioConfig{} : load_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (!opts.methods.empty()) {
    config.methods.clear();
    std::stringstream ss(opts.methods);
    std::string m;
    while (std::getline(ss, m, ',')) {
      if (!m.empty()) config.methods.push_back(m);
    }
  }
  validate_config(config);
  return config;
}

// Writes to <out>/<name>, or to stdout when no directory was given.
void emit(const CommonOptions& opts, const std::string& name, const std::string& content) {
  if (opts.out_dir.empty()) {
    std::cout << content;
    return;
  }
  fs::create_directories(opts.out_dir);
  const fs::path path = fs::path(opts.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  std::cerr << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic HetNet user association and bandwidth allocation"};
  app.require_subcommand(1);

  CommonOptions gen_opts, solve_opts, sweep_opts, validate_opts;
  bool trace = false;
  std::string sweep_variable;
  std::vector<double> sweep_values;
  std::size_t oracle_instances = 20;

  auto* gen_cmd = app.add_subcommand("gen", "Generate a scenario and emit topology JSON");
  add_common(gen_cmd, gen_opts);

  auto* solve_cmd = app.add_subcommand("solve", "Run every method on one scenario");
  add_common(solve_cmd, solve_opts);
  solve_cmd->add_flag("--trace", trace, "Also write the per-iteration barrier trace CSV");

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter across seeds");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--variable", sweep_variable, "num_mus | alpha | tau | num_bss");
  sweep_cmd->add_option("--values", sweep_values, "Values to sweep")->delimiter(',');

  auto* validate_cmd = app.add_subcommand("validate", "Run the invariant suite");
  add_common(validate_cmd, validate_opts);
  validate_cmd->add_option("--oracle-instances", oracle_instances, "Tiny instances for the oracle gap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      const auto config = resolve_config(gen_opts);
      const auto scenario = build_scenario(config, config.seed);
      nlohmann::json doc = {{"seed", config.seed},
                            {"topology", scenario.topology},
                            {"knowledge", scenario.knowledge},
                            {"b2m", scenario.b2m}};
      emit(gen_opts, "topology.json", doc.dump(2) + "\n");
    } else if (solve_cmd->parsed()) {
      const auto config = resolve_config(solve_opts);
      const auto result = run_scenario(config);
      std::ostringstream csv;
      write_results_csv(csv, config, result);
      emit(solve_opts, "results.csv", csv.str());
      if (!solve_opts.out_dir.empty()) {
        emit(solve_opts, "report.json", report_json(config, result).dump(2) + "\n");
        if (trace) {
          std::ostringstream t;
          write_trace_csv(t, result);
          emit(solve_opts, "trace.csv", t.str());
        }
      }
    } else if (sweep_cmd->parsed()) {
      auto config = resolve_config(sweep_opts);
      if (!sweep_variable.empty() || !sweep_values.empty()) {
        config.sweep = SweepSpec{sweep_variable, sweep_values};
        validate_config(config);
      }
      if (!config.sweep) throw ConfigError("sweep needs --variable/--values or a 'sweep' config block");
      const auto rows = sweep(config, config.sweep->variable, config.sweep->values);
      std::ostringstream csv;
      write_sweep_csv(csv, rows);
      emit(sweep_opts, "sweep.csv", csv.str());
      if (!sweep_opts.out_dir.empty()) {
        std::ostringstream summary;
        write_sweep_summary_csv(summary, rows);
        emit(sweep_opts, "sweep_summary.csv", summary.str());
      }
    } else if (validate_cmd->parsed()) {
      const auto config = resolve_config(validate_opts);
      ValidateOptions options;
      options.oracle_instances = oracle_instances;
      const auto report = validate(config, options);
      std::ostringstream table;
      write_validation_table(table, report);
      emit(validate_opts, "validate.csv", table.str());
      if (!validate_opts.out_dir.empty()) {
        emit(validate_opts, "validate.json", validation_json(report).dump(2) + "\n");
      }
      return report.passed() ? 0 : 3;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible scenario: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
