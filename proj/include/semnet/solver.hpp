#pragma once

#include <span>
#include <vector>

#include "semnet/chance.hpp"
#include "semnet/matrix.hpp"
#include "semnet/semantics.hpp"
#include "semnet/topology.hpp"

namespace semnet {

// Relaxed-association problem data. Users flagged in `blocked` are excluded
// from association (their rows stay zero) and end up unserved.
struct UaInstance {
  DeterministicObjective objective;
  FeasibleSets feasible;
  std::vector<double> budgets;  // N_j, Hz
  Matrix n_t;                   // minimum bandwidth per link, Hz
  Matrix efficiency;            // log2(1 + gamma), bit/s/Hz
  std::vector<double> kappa;    // B2M slope per user, msg/bit
  std::vector<bool> blocked;

  std::size_t num_mu() const { return n_t.rows(); }
  std::size_t num_bs() const { return n_t.cols(); }
};

// Builds nT_ij = threshold / log2(1 + gamma_ij) and xiT_ij = kappa_i * threshold.
UaInstance make_ua_instance(const ChannelState& channel, const FeasibleSets& feasible,
                            std::vector<double> budgets, const B2mProfile& b2m,
                            const EtaModel& eta, double alpha, double bitrate_threshold);

struct BarrierParams {
  double r0 = 0.0;  // <= 0 selects max(1, |Fbar(x0)|)
  double mu = 10.0;
  double r_min = 1e-6;
  double tol = 1e-6;
  int max_inner_iterations = 20000;
};

struct RelaxedAssociation {
  Matrix x;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double residual = 0.0;            // final projected-gradient norm (scaled)
  std::vector<double> barrier_trace;  // W(x, r) at the end of each outer step
  std::vector<double> r_trace;
};

inline constexpr int kUnserved = -1;

// Single-BS association; serving[i] is a BS index or kUnserved.
struct Association {
  std::vector<int> serving;

  std::size_t num_mu() const { return serving.size(); }
  Matrix to_matrix(std::size_t num_bs) const;
  std::vector<std::size_t> unserved() const;
  std::vector<std::size_t> users_of(std::size_t bs) const;
};

struct Allocation {
  Matrix n;                          // Hz, zero off served links
  std::vector<double> kkt_residual;  // per BS, Hz
  int iterations = 0;
};

// Euclidean projection of `v` onto {w >= 0, sum w = total}.
void project_simplex(std::span<double> v, double total);

// Per-BS load sum_i x_ij nT_ij.
std::vector<double> bs_loads(const UaInstance& inst, const Matrix& x);

// Strictly interior starting point: the uniform split over each feasible set,
// or a mix with a greedy least-loaded assignment when the uniform split
// overloads a budget. Throws InfeasibleError naming overloaded BSs.
Matrix interior_start(const UaInstance& inst);

// Drops links whose minimum bandwidth exceeds the BS budget (they can never
// carry an association) and blocks users left without any link.
UaInstance prune_unusable_links(const UaInstance& inst);

// Users to block so that a strictly interior point exists. Greedy: assigns
// users to their least-loaded feasible BS and drops the most bandwidth-hungry
// users from any BS still over budget.
std::vector<std::size_t> admission_blocklist(const UaInstance& inst);

// Barrier-method solution of the relaxed association problem.
RelaxedAssociation solve_relaxed_ua(const UaInstance& inst, const BarrierParams& params = {});

// W(x, r) = Fbar(x) + r * sum_j log(N_j - load_j); -inf outside the interior.
double barrier_objective(const UaInstance& inst, const Matrix& x, double r);

Association round_association(const RelaxedAssociation& xs, const UaInstance& inst);
Association round_association(const Matrix& x, const FeasibleSets& fs, const Matrix& xi_t,
                              const std::vector<bool>& blocked = {});

// Moves users off over-budget BSs, most bandwidth-hungry first, to their next
// preferred BS (by `weights`, among `candidates`) with room; blocks them if
// none has room.
Association repair_with_weights(Association assoc, const Matrix& weights,
                                const FeasibleSets& candidates, const Matrix& n_t,
                                std::span<const double> budgets);

Association repair_overload(const Association& assoc, const RelaxedAssociation& xs,
                            const UaInstance& inst);

struct ResidualOptions {
  double kkt_tol = 1e-8;  // relative to N_j
  int max_iterations = 100000;
};

// Per-BS split of the leftover bandwidth maximizing the confidence bound of
// the BS's message throughput.
Allocation allocate_residual(const Association& assoc, const UaInstance& inst,
                             const ResidualOptions& options = {});

// Per-BS objective tau*sum(s) - sigma*q*||s|| at bandwidths `n` for users `users`.
double residual_objective(const UaInstance& inst, std::size_t bs,
                          std::span<const std::size_t> users, std::span<const double> n);

Association baseline_max_sinr(const ChannelState& channel, const FeasibleSets& fs,
                              const UaInstance& inst, bool restrict_to_feasible = false);

enum class BandwidthMode { kEven, kWaterfill };

Allocation baseline_ba(const Association& assoc, const UaInstance& inst, BandwidthMode mode);

// Water-filling on u_i(n) = n*log2(1 + c_i/n) with floors; exposed for tests.
std::vector<double> waterfill(std::span<const double> c, std::span<const double> floors,
                              double total);

// Bandwidth-capacity utility used by the water-filling baseline.
double waterfill_utility(double n, double c);

struct TwoStageSolution {
  std::vector<std::size_t> blocked;  // refused before the relaxed solve (incl. unusable links)
  RelaxedAssociation relaxed;
  Association rounded;
  Association association;
  Allocation allocation;
};

// Admission, relaxed solve, rounding, repair, residual allocation.
TwoStageSolution solve_two_stage(const UaInstance& inst, const BarrierParams& params = {},
                                 const ResidualOptions& residual = {});

// Asserts single association within feasible sets and per-BS budgets; returns
// a description of the first violation or an empty string.
std::string check_association(const Association& assoc, const UaInstance& inst,
                              bool require_feasible_sets = true);
std::string check_allocation(const Association& assoc, const Allocation& alloc,
                             const UaInstance& inst, double rel_tol = 1e-9);

}  // namespace semnet
