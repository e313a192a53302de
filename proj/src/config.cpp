#include <fstream>
#include <set>
#include <sstream>

#include "semnet/errors.hpp"
#include "semnet/harness.hpp"

namespace semnet {

namespace {

using nlohmann::json;

// Typed field access with dotted-path diagnostics; rejects unknown keys.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void read(const std::string& key, T& target) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected true/false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      target = it->template get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError("field '" + field(key) + "': " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError("field '" + field(key) + "': " + e.what());
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown field '" + field(key) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "field '" + path_ + "'"; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void read_topology(const json& node, TopologyParams& t) {
  Reader r(node, "topology");
  r.read("region_radius_m", t.region_radius_m);
  r.read("num_macro", t.num_macro);
  r.read("num_pico", t.num_pico);
  r.read("num_femto", t.num_femto);
  r.read("num_mus", t.num_mus);
  r.read("bandwidth_hz", t.bandwidth_hz);
  r.read("noise_dbm", t.noise_dbm);
  if (const json* p = r.child("tx_power_dbm")) {
    Reader pr(*p, "topology.tx_power_dbm");
    pr.read("macro", t.powers.macro_dbm);
    pr.read("pico", t.powers.pico_dbm);
    pr.read("femto", t.powers.femto_dbm);
    pr.finish();
  }
  r.finish();
}

}  // namespace

std::vector<std::uint64_t> ScenarioConfig::seeds(int fallback_count) const {
  const int count = num_seeds.value_or(fallback_count);
  std::vector<std::uint64_t> out;
  for (int k = 0; k < count; ++k) out.push_back(seed + static_cast<std::uint64_t>(k));
  return out;
}

bool is_known_method(const std::string& method) {
  static const std::set<std::string> known = {"two-stage",      "max-sinr-wf",
                                              "max-sinr-even",  "max-sinr-wf-any",
                                              "max-sinr-even-any"};
  return known.count(method) > 0;
}

ScenarioConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                      ": " + e.what());
  }

  ScenarioConfig c;
  Reader r(doc, "");
  r.read("scenario_id", c.scenario_id);
  if (const json* t = r.child("topology")) read_topology(*t, c.topology);
  if (const json* k = r.child("knowledge")) {
    Reader kr(*k, "knowledge");
    kr.read("num_domains", c.knowledge.num_domains);
    kr.read("kb_per_bs", c.knowledge.kb_per_bs);
    kr.read("needs_per_mu", c.knowledge.needs_per_mu);
    kr.finish();
  }
  r.read("b2m_kappa", c.kappa);
  if (const json* e = r.child("eta")) {
    Reader er(*e, "eta");
    er.read("tau", c.eta.tau);
    er.read("sigma", c.eta.sigma);
    er.finish();
  }
  r.read("alpha", c.alpha);
  r.read("bitrate_threshold_bps", c.bitrate_threshold);
  if (const json* b = r.child("barrier")) {
    Reader br(*b, "barrier");
    br.read("r0", c.barrier.r0);
    br.read("mu", c.barrier.mu);
    br.read("r_min", c.barrier.r_min);
    br.read("tol", c.barrier.tol);
    br.read("max_inner_iterations", c.barrier.max_inner_iterations);
    br.finish();
  }
  r.read("admission", c.admission);
  r.read("baseline_respects_kb", c.baseline_respects_kb);
  if (const json* m = r.child("methods")) {
    if (!m->is_array()) throw ConfigError("field 'methods': expected an array of strings");
    c.methods.clear();
    for (const auto& v : *m) {
      if (!v.is_string()) throw ConfigError("field 'methods': expected an array of strings");
      c.methods.push_back(v.get<std::string>());
    }
  }
  r.read("seed", c.seed);
  int num_seeds = 0;
  r.read("num_seeds", num_seeds);
  if (num_seeds != 0) c.num_seeds = num_seeds;
  r.read("chance_trials", c.chance_trials);
  if (const json* s = r.child("sweep")) {
    Reader sr(*s, "sweep");
    SweepSpec spec;
    sr.read("variable", spec.variable);
    sr.read("values", spec.values);
    sr.finish();
    c.sweep = spec;
  }
  r.finish();
  validate_config(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void validate_config(const ScenarioConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("field '" + field + "': " + why);
  };
  const auto& t = c.topology;
  if (!(t.region_radius_m > 0.0)) fail("topology.region_radius_m", "must be > 0");
  if (t.num_macro < 0 || t.num_pico < 0 || t.num_femto < 0) fail("topology", "BS counts must be >= 0");
  if (t.num_macro + t.num_pico + t.num_femto == 0) fail("topology", "needs at least one BS");
  if (t.num_mus < 0) fail("topology.num_mus", "must be >= 0");
  if (!(t.bandwidth_hz > 0.0)) fail("topology.bandwidth_hz", "must be > 0");
  const auto& k = c.knowledge;
  if (k.num_domains < 1) fail("knowledge.num_domains", "must be >= 1");
  if (k.kb_per_bs < 1 || k.kb_per_bs > k.num_domains) fail("knowledge.kb_per_bs", "must lie in [1, num_domains]");
  if (k.needs_per_mu < 1 || k.needs_per_mu > k.num_domains) fail("knowledge.needs_per_mu", "must lie in [1, num_domains]");
  if (!(c.kappa > 0.0)) fail("b2m_kappa", "must be > 0");
  if (!(c.eta.tau > 0.0 && c.eta.tau < 1.0)) fail("eta.tau", "must lie in (0, 1)");
  if (!(c.eta.sigma >= 0.0)) fail("eta.sigma", "must be >= 0");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail("alpha", "must lie in (0, 1)");
  if (!(c.bitrate_threshold > 0.0)) fail("bitrate_threshold_bps", "must be > 0");
  if (!(c.barrier.mu > 1.0)) fail("barrier.mu", "must be > 1");
  if (!(c.barrier.r_min > 0.0)) fail("barrier.r_min", "must be > 0");
  if (!(c.barrier.tol > 0.0)) fail("barrier.tol", "must be > 0");
  if (c.barrier.max_inner_iterations < 1) fail("barrier.max_inner_iterations", "must be >= 1");
  if (c.methods.empty()) fail("methods", "must name at least one method");
  for (const auto& m : c.methods) {
    if (!is_known_method(m)) fail("methods", "unknown method '" + m + "'");
  }
  if (c.num_seeds && *c.num_seeds < 1) fail("num_seeds", "must be >= 1");
  if (c.sweep) {
    const auto& v = c.sweep->variable;
    if (v != "num_mus" && v != "alpha" && v != "tau" && v != "num_bss") {
      fail("sweep.variable", "must be one of num_mus, alpha, tau, num_bss");
    }
    if (c.sweep->values.empty()) fail("sweep.values", "must be non-empty");
  }
}

nlohmann::json config_to_json(const ScenarioConfig& c) {
  json j = {
      {"scenario_id", c.scenario_id},
      {"topology",
       {{"region_radius_m", c.topology.region_radius_m},
        {"num_macro", c.topology.num_macro},
        {"num_pico", c.topology.num_pico},
        {"num_femto", c.topology.num_femto},
        {"num_mus", c.topology.num_mus},
        {"tx_power_dbm",
         {{"macro", c.topology.powers.macro_dbm},
          {"pico", c.topology.powers.pico_dbm},
          {"femto", c.topology.powers.femto_dbm}}},
        {"bandwidth_hz", c.topology.bandwidth_hz},
        {"noise_dbm", c.topology.noise_dbm}}},
      {"knowledge",
       {{"num_domains", c.knowledge.num_domains},
        {"kb_per_bs", c.knowledge.kb_per_bs},
        {"needs_per_mu", c.knowledge.needs_per_mu}}},
      {"b2m_kappa", c.kappa},
      {"eta", {{"tau", c.eta.tau}, {"sigma", c.eta.sigma}}},
      {"alpha", c.alpha},
      {"bitrate_threshold_bps", c.bitrate_threshold},
      {"barrier",
       {{"r0", c.barrier.r0},
        {"mu", c.barrier.mu},
        {"r_min", c.barrier.r_min},
        {"tol", c.barrier.tol},
        {"max_inner_iterations", c.barrier.max_inner_iterations}}},
      {"admission", c.admission},
      {"baseline_respects_kb", c.baseline_respects_kb},
      {"methods", c.methods},
      {"seed", c.seed},
      {"chance_trials", c.chance_trials},
  };
  if (c.num_seeds) j["num_seeds"] = *c.num_seeds;
  if (c.sweep) j["sweep"] = {{"variable", c.sweep->variable}, {"values", c.sweep->values}};
  return j;
}

}  // namespace semnet
