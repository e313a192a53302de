#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "semnet/matrix.hpp"

namespace semnet {

enum class Tier { kMacro, kPico, kFemto };

std::string to_string(Tier tier);
Tier tier_from_string(const std::string& name);

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

struct BaseStation {
  int id = 0;
  Tier tier = Tier::kMacro;
  Point position;
  double tx_power_dbm = 0.0;
  double bandwidth_hz = 0.0;  // budget N_j
  friend bool operator==(const BaseStation&, const BaseStation&) = default;
};

struct MobileUser {
  int id = 0;
  Point position;
  friend bool operator==(const MobileUser&, const MobileUser&) = default;
};

struct Topology {
  double region_radius_m = 0.0;
  std::vector<BaseStation> base_stations;
  std::vector<MobileUser> users;
  double noise_dbm = 0.0;

  std::size_t num_bs() const { return base_stations.size(); }
  std::size_t num_mu() const { return users.size(); }
  friend bool operator==(const Topology&, const Topology&) = default;
};

struct TierPowers {
  double macro_dbm = 43.0;
  double pico_dbm = 35.0;
  double femto_dbm = 20.0;
  double of(Tier tier) const;
};

struct TopologyParams {
  double region_radius_m = 500.0;
  int num_macro = 1;
  int num_pico = 5;
  int num_femto = 10;
  int num_mus = 200;
  TierPowers powers;
  double bandwidth_hz = 2e6;
  double noise_dbm = -111.45;
};

// Linear-scale SINR per (user, base station) link.
struct ChannelState {
  Matrix gamma;
};

inline constexpr double kMinDistanceM = 1.0;

// Throws ConfigError on negative counts, non-positive radius/budget, or zero BSs.
// The first macro sits at the origin; every other node is uniform in the disc.
// BS and MU positions come from separate streams of `seed`, so changing the
// user count does not move any base station.
Topology generate_topology(const TopologyParams& params, std::uint64_t seed);

double path_loss_db(Tier tier, double distance_m);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Every non-serving BS interferes at full power on the shared band.
ChannelState compute_sinr(const Topology& topology);

// Shannon rate n*log2(1+gamma); throws std::domain_error for n < 0.
double bit_rate(double bandwidth_hz, double gamma);

void to_json(nlohmann::json& j, const Topology& topology);
void from_json(const nlohmann::json& j, Topology& topology);

}  // namespace semnet
