#pragma once

#include <span>
#include <vector>

#include "semnet/semantics.hpp"
#include "semnet/solver.hpp"
#include "semnet/topology.hpp"

namespace semnet {

struct PerformanceReport {
  double expected_stm = 0.0;  // msg/s
  double fbar = 0.0;          // alpha-confidence lower bound, msg/s
  double bit_throughput = 0.0;
  std::size_t served = 0;
  std::size_t unserved = 0;
  std::vector<double> per_mu_message_rate;  // S_i(b_i), msg/s
};

// Perfect-matching message rate of every user under (assoc, alloc).
std::vector<double> message_rates(const Association& assoc, const Allocation& alloc,
                                  const B2mProfile& b2m, const ChannelState& channel);

double expected_stm(const Association& assoc, const Allocation& alloc, const B2mProfile& b2m,
                    const ChannelState& channel, double tau);

double realized_stm(const Association& assoc, const Allocation& alloc, const B2mProfile& b2m,
                    const ChannelState& channel, std::span<const double> eta);

double bit_throughput(const Association& assoc, const Allocation& alloc,
                      const ChannelState& channel);

PerformanceReport evaluate_performance(const Association& assoc, const Allocation& alloc,
                                       const B2mProfile& b2m, const ChannelState& channel,
                                       const DeterministicObjective& objective);

// Confidence bound of (assoc, alloc) evaluated from the instance's own rate data.
double solution_fbar(const UaInstance& inst, const Association& assoc, const Allocation& alloc);

struct OracleResult {
  Association association;
  Allocation allocation;
  double fbar = 0.0;
  std::size_t associations_checked = 0;
};

inline constexpr std::size_t kOracleMaxUsers = 8;
inline constexpr std::size_t kOracleMaxBs = 4;

// Exhaustive search over every association (each user to a feasible BS or
// unserved) and every allocation n_ij = nT_ij + k_ij * quantum with
// sum_i n_ij <= N_j. Maximizes the number of served users first, then Fbar.
// Throws std::invalid_argument for instances larger than 8 users x 4 BSs or
// quanta too fine to enumerate.
OracleResult oracle_enumerate(const UaInstance& inst, double quantum);

// Default quantum: the smallest minimum bandwidth in the instance.
double default_quantum(const UaInstance& inst);

// Finest quantum the oracle can enumerate: the default quantum, doubled until
// every BS's worst-case composition count fits the search limit.
double oracle_quantum(const UaInstance& inst);

// Rounds each served user's extra bandwidth down to the quantum grid.
Allocation quantize_allocation(const Association& assoc, const Allocation& alloc,
                               const UaInstance& inst, double quantum);

}  // namespace semnet
