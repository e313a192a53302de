#include "semnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "semnet/errors.hpp"
#include "semnet/rng.hpp"

namespace semnet {

std::string to_string(Tier tier) {
  switch (tier) {
    case Tier::kMacro:
      return "macro";
    case Tier::kPico:
      return "pico";
    case Tier::kFemto:
      return "femto";
  }
  return "unknown";
}

Tier tier_from_string(const std::string& name) {
  if (name == "macro") return Tier::kMacro;
  if (name == "pico") return Tier::kPico;
  if (name == "femto") return Tier::kFemto;
  throw ConfigError("unknown tier '" + name + "'");
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double TierPowers::of(Tier tier) const {
  switch (tier) {
    case Tier::kMacro:
      return macro_dbm;
    case Tier::kPico:
      return pico_dbm;
    case Tier::kFemto:
      return femto_dbm;
  }
  return 0.0;
}

namespace {

Point uniform_in_disc(std::mt19937_64& gen, double radius) {
  // sqrt of a uniform radius fraction gives uniform area density.
  const double r = radius * std::sqrt(uniform01(gen));
  const double theta = 2.0 * std::numbers::pi * uniform01(gen);
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace

Topology generate_topology(const TopologyParams& params, std::uint64_t seed) {
  if (!(params.region_radius_m > 0.0)) throw ConfigError("region_radius must be > 0");
  if (params.num_macro < 0 || params.num_pico < 0 || params.num_femto < 0 ||
      params.num_mus < 0) {
    throw ConfigError("node counts must be >= 0");
  }
  if (params.num_macro + params.num_pico + params.num_femto == 0) {
    throw ConfigError("topology needs at least one base station");
  }
  if (!(params.bandwidth_hz > 0.0)) throw ConfigError("bandwidth budget must be > 0");

  Topology topo;
  topo.region_radius_m = params.region_radius_m;
  topo.noise_dbm = params.noise_dbm;

  auto bs_gen = make_stream(seed, Stream::kBsPlacement);
  auto add_tier = [&](Tier tier, int count) {
    for (int k = 0; k < count; ++k) {
      BaseStation bs;
      bs.id = static_cast<int>(topo.base_stations.size());
      bs.tier = tier;
      bs.position = (tier == Tier::kMacro && k == 0)
                        ? Point{0.0, 0.0}
                        : uniform_in_disc(bs_gen, params.region_radius_m);
      bs.tx_power_dbm = params.powers.of(tier);
      bs.bandwidth_hz = params.bandwidth_hz;
      topo.base_stations.push_back(bs);
    }
  };
  add_tier(Tier::kMacro, params.num_macro);
  add_tier(Tier::kPico, params.num_pico);
  add_tier(Tier::kFemto, params.num_femto);

  auto mu_gen = make_stream(seed, Stream::kMuPlacement);
  topo.users.reserve(static_cast<std::size_t>(params.num_mus));
  for (int i = 0; i < params.num_mus; ++i) {
    topo.users.push_back({i, uniform_in_disc(mu_gen, params.region_radius_m)});
  }
  return topo;
}

double path_loss_db(Tier tier, double distance_m) {
  const double d = std::max(distance_m, kMinDistanceM);
  switch (tier) {
    case Tier::kMacro:
    case Tier::kPico:
      return 34.0 + 40.0 * std::log10(d);
    case Tier::kFemto:
      return 37.0 + 30.0 * std::log10(d);
  }
  return 0.0;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

ChannelState compute_sinr(const Topology& topology) {
  const std::size_t m = topology.num_mu();
  const std::size_t l = topology.num_bs();
  const double noise_w = dbm_to_watts(topology.noise_dbm);

  Matrix received(m, l);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const auto& bs = topology.base_stations[j];
      const double d = distance(topology.users[i].position, bs.position);
      received(i, j) = dbm_to_watts(bs.tx_power_dbm - path_loss_db(bs.tier, d));
    }
  }

  ChannelState state{Matrix(m, l)};
  for (std::size_t i = 0; i < m; ++i) {
    double total = 0.0;
    for (double p : received.row(i)) total += p;
    for (std::size_t j = 0; j < l; ++j) {
      const double interference = std::max(total - received(i, j), 0.0);
      state.gamma(i, j) = received(i, j) / (noise_w + interference);
    }
  }
  return state;
}

double bit_rate(double bandwidth_hz, double gamma) {
  if (bandwidth_hz < 0.0) throw std::domain_error("bit_rate: negative bandwidth");
  return bandwidth_hz * std::log2(1.0 + gamma);
}

void to_json(nlohmann::json& j, const Topology& topology) {
  nlohmann::json bss = nlohmann::json::array();
  for (const auto& bs : topology.base_stations) {
    bss.push_back({{"id", bs.id},
                   {"tier", to_string(bs.tier)},
                   {"x", bs.position.x},
                   {"y", bs.position.y},
                   {"tx_power_dbm", bs.tx_power_dbm},
                   {"bandwidth_hz", bs.bandwidth_hz}});
  }
  nlohmann::json mus = nlohmann::json::array();
  for (const auto& mu : topology.users) {
    mus.push_back({{"id", mu.id}, {"x", mu.position.x}, {"y", mu.position.y}});
  }
  j = {{"region_radius_m", topology.region_radius_m},
       {"noise_dbm", topology.noise_dbm},
       {"base_stations", std::move(bss)},
       {"users", std::move(mus)}};
}

void from_json(const nlohmann::json& j, Topology& topology) {
  topology = Topology{};
  topology.region_radius_m = j.at("region_radius_m").get<double>();
  topology.noise_dbm = j.at("noise_dbm").get<double>();
  for (const auto& b : j.at("base_stations")) {
    BaseStation bs;
    bs.id = b.at("id").get<int>();
    bs.tier = tier_from_string(b.at("tier").get<std::string>());
    bs.position = {b.at("x").get<double>(), b.at("y").get<double>()};
    bs.tx_power_dbm = b.at("tx_power_dbm").get<double>();
    bs.bandwidth_hz = b.at("bandwidth_hz").get<double>();
    if (!(bs.bandwidth_hz > 0.0)) throw ConfigError("base station bandwidth must be > 0");
    topology.base_stations.push_back(bs);
  }
  for (const auto& u : j.at("users")) {
    topology.users.push_back(
        {u.at("id").get<int>(), {u.at("x").get<double>(), u.at("y").get<double>()}});
  }
  if (topology.base_stations.empty()) throw ConfigError("topology has no base stations");
}

}  // namespace semnet
