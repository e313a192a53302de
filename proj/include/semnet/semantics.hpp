#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "json.hpp"
#include "semnet/topology.hpp"

namespace semnet {

// Knowledge domains are numbered 1..num_domains. Each set is kept sorted.
struct KnowledgeModel {
  int num_domains = 1;
  std::vector<std::vector<int>> bs_kbs;
  std::vector<std::vector<int>> mu_needs;
  friend bool operator==(const KnowledgeModel&, const KnowledgeModel&) = default;
};

// Per-user list of admissible BS indices, ascending.
struct FeasibleSets {
  std::vector<std::vector<std::size_t>> sets;

  std::size_t num_mu() const { return sets.size(); }
  bool contains(std::size_t i, std::size_t j) const;
};

// Perfect-matching bit-to-message map S_i(b) = kappa_i * b.
struct B2mProfile {
  std::vector<double> kappa;  // messages per bit, one per user
};

inline constexpr double kDefaultKappa = 1.0 / 1600.0;

struct EtaModel {
  double tau = 0.5;
  double sigma = 0.1;
};

struct EtaSample {
  std::vector<double> eta;
  std::size_t clamped = 0;
};

inline constexpr double kEtaClampEps = 1e-9;

KnowledgeModel assign_knowledge(int num_domains, int kb_per_bs, int needs_per_mu,
                                const Topology& topology, std::uint64_t seed);

// All BSs sharing the largest knowledge overlap with each user.
FeasibleSets feasible_bs_sets(const KnowledgeModel& model);

// Every user may use every BS.
FeasibleSets all_feasible(std::size_t num_mu, std::size_t num_bs);

B2mProfile uniform_b2m(std::size_t num_mu, double kappa = kDefaultKappa);

double b2m_rate(const B2mProfile& profile, std::size_t i, double bits_per_s);

// S^M_i(b) = eta_i * S^P_i(b).
double matched_rate(const B2mProfile& profile, std::size_t i, double eta, double bits_per_s);

// Draws from N(tau, sigma^2), clamped into (eps, 1 - eps).
EtaSample sample_eta(const EtaModel& model, std::size_t num_mu, std::uint64_t seed);

// Same, drawing from an existing generator.
EtaSample sample_eta(const EtaModel& model, std::size_t num_mu, std::mt19937_64& gen);

void validate(const EtaModel& model);

void to_json(nlohmann::json& j, const KnowledgeModel& model);
void from_json(const nlohmann::json& j, KnowledgeModel& model);
void to_json(nlohmann::json& j, const B2mProfile& profile);
void from_json(const nlohmann::json& j, B2mProfile& profile);

}  // namespace semnet
