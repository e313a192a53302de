#include "semnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace semnet {

std::vector<double> message_rates(const Association& assoc, const Allocation& alloc,
                                  const B2mProfile& b2m, const ChannelState& channel) {
  std::vector<double> y(assoc.num_mu(), 0.0);
  for (std::size_t i = 0; i < assoc.num_mu(); ++i) {
    if (assoc.serving[i] == kUnserved) continue;
    const auto j = static_cast<std::size_t>(assoc.serving[i]);
    y[i] = b2m_rate(b2m, i, bit_rate(alloc.n(i, j), channel.gamma(i, j)));
  }
  return y;
}

double expected_stm(const Association& assoc, const Allocation& alloc, const B2mProfile& b2m,
                    const ChannelState& channel, double tau) {
  double total = 0.0;
  for (double y : message_rates(assoc, alloc, b2m, channel)) total += y;
  return tau * total;
}

double realized_stm(const Association& assoc, const Allocation& alloc, const B2mProfile& b2m,
                    const ChannelState& channel, std::span<const double> eta) {
  if (eta.size() != assoc.num_mu()) throw std::invalid_argument("realized_stm: eta size mismatch");
  const auto y = message_rates(assoc, alloc, b2m, channel);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += eta[i] * y[i];
  return total;
}

double bit_throughput(const Association& assoc, const Allocation& alloc,
                      const ChannelState& channel) {
  double total = 0.0;
  for (std::size_t i = 0; i < assoc.num_mu(); ++i) {
    if (assoc.serving[i] == kUnserved) continue;
    const auto j = static_cast<std::size_t>(assoc.serving[i]);
    total += bit_rate(alloc.n(i, j), channel.gamma(i, j));
  }
  return total;
}

PerformanceReport evaluate_performance(const Association& assoc, const Allocation& alloc,
                                       const B2mProfile& b2m, const ChannelState& channel,
                                       const DeterministicObjective& objective) {
  PerformanceReport report;
  report.per_mu_message_rate = message_rates(assoc, alloc, b2m, channel);
  double total = 0.0;
  for (double y : report.per_mu_message_rate) total += y;
  report.expected_stm = objective.tau * total;
  report.fbar = confidence_bound(objective.tau, objective.sigma, objective.q,
                                 report.per_mu_message_rate);
  report.bit_throughput = bit_throughput(assoc, alloc, channel);
  report.unserved = assoc.unserved().size();
  report.served = assoc.num_mu() - report.unserved;
  return report;
}

double solution_fbar(const UaInstance& inst, const Association& assoc, const Allocation& alloc) {
  std::vector<double> y(assoc.num_mu(), 0.0);
  for (std::size_t i = 0; i < assoc.num_mu(); ++i) {
    if (assoc.serving[i] == kUnserved) continue;
    const auto j = static_cast<std::size_t>(assoc.serving[i]);
    y[i] = inst.kappa[i] * inst.efficiency(i, j) * alloc.n(i, j);
  }
  const auto& obj = inst.objective;
  return confidence_bound(obj.tau, obj.sigma, obj.q, y);
}

double default_quantum(const UaInstance& inst) {
  double q = std::numeric_limits<double>::infinity();
  for (double v : inst.n_t.data()) q = std::min(q, v);
  return q;
}

Allocation quantize_allocation(const Association& assoc, const Allocation& alloc,
                               const UaInstance& inst, double quantum) {
  Allocation out{Matrix(inst.num_mu(), inst.num_bs()), alloc.kkt_residual, alloc.iterations};
  for (std::size_t i = 0; i < assoc.num_mu(); ++i) {
    if (assoc.serving[i] == kUnserved) continue;
    const auto j = static_cast<std::size_t>(assoc.serving[i]);
    const double extra = std::max(alloc.n(i, j) - inst.n_t(i, j), 0.0);
    out.n(i, j) = inst.n_t(i, j) + std::floor(extra / quantum + 1e-9) * quantum;
  }
  return out;
}

namespace {

constexpr std::size_t kMaxCompositions = 2'000'000;

// Non-dominated per-BS outcome: sum and sum of squares of message rates.
struct BsOutcome {
  double sum = 0.0;
  double sq = 0.0;
  std::vector<int> units;
};

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t a = 1; a <= k; ++a) r = r * static_cast<double>(n - k + a) / static_cast<double>(a);
  return r;
}

}  // namespace

double oracle_quantum(const UaInstance& inst) {
  double q = default_quantum(inst);
  for (std::size_t j = 0; j < inst.num_bs(); ++j) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < inst.num_mu(); ++i) {
      if (!(inst.blocked.size() > i && inst.blocked[i]) && inst.feasible.contains(i, j)) ++k;
    }
    while (binomial(static_cast<std::size_t>(std::floor(inst.budgets[j] / q)) + k, k) >
           static_cast<double>(kMaxCompositions)) {
      q *= 2.0;
    }
  }
  return q;
}

namespace {

// Every way to give at most `units` quanta to `users`, reduced to the
// (sum, sq) outcomes that can be optimal for the sign of the risk weight.
std::vector<BsOutcome> bs_frontier(const UaInstance& inst, std::size_t bs,
                                   const std::vector<std::size_t>& users, int units,
                                   double quantum, double risk_weight) {
  const std::size_t k = users.size();
  if (binomial(static_cast<std::size_t>(units) + k, k) > static_cast<double>(kMaxCompositions)) {
    throw std::invalid_argument("oracle_enumerate: quantum too fine for exhaustive search");
  }
  std::vector<double> slope(k);
  for (std::size_t a = 0; a < k; ++a) slope[a] = inst.kappa[users[a]] * inst.efficiency(users[a], bs);

  std::vector<BsOutcome> all;
  std::vector<int> current(k, 0);
  auto emit = [&]() {
    BsOutcome o;
    for (std::size_t a = 0; a < k; ++a) {
      const double s = slope[a] * (inst.n_t(users[a], bs) + current[a] * quantum);
      o.sum += s;
      o.sq += s * s;
    }
    o.units = current;
    all.push_back(std::move(o));
  };
  auto recurse = [&](auto&& self, std::size_t a, int left) -> void {
    if (a == k) {
      emit();
      return;
    }
    for (int u = 0; u <= left; ++u) {
      current[a] = u;
      self(self, a + 1, left - u);
    }
    current[a] = 0;
  };
  recurse(recurse, 0, units);

  // Larger sum always helps; smaller sq helps when the risk weight is
  // positive, larger sq when it is negative.
  std::stable_sort(all.begin(), all.end(), [](const BsOutcome& a, const BsOutcome& b) {
    return a.sum > b.sum;
  });
  std::vector<BsOutcome> front;
  double best_sq = risk_weight >= 0.0 ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
  for (auto& o : all) {
    if (risk_weight == 0.0) {
      if (front.empty()) front.push_back(std::move(o));
      continue;
    }
    const bool better = risk_weight > 0.0 ? o.sq < best_sq : o.sq > best_sq;
    if (better) {
      best_sq = o.sq;
      front.push_back(std::move(o));
    }
  }
  return front;
}

void search_associations(const UaInstance& inst, double quantum,
                         const std::vector<std::vector<int>>& options, double risk_weight,
                         std::map<std::pair<std::size_t, unsigned>, std::vector<BsOutcome>>& cache,
                         OracleResult& best);

}  // namespace

OracleResult oracle_enumerate(const UaInstance& inst, double quantum) {
  const std::size_t m = inst.num_mu();
  const std::size_t l = inst.num_bs();
  if (m > kOracleMaxUsers || l > kOracleMaxBs) {
    throw std::invalid_argument("oracle_enumerate: instance exceeds 8 users x 4 BSs");
  }
  if (!(quantum > 0.0)) throw std::invalid_argument("oracle_enumerate: quantum must be > 0");
  const auto& obj = inst.objective;
  const double risk_weight = obj.sigma * obj.q;

  std::map<std::pair<std::size_t, unsigned>, std::vector<BsOutcome>> cache;
  OracleResult best;
  best.fbar = -std::numeric_limits<double>::infinity();
  // Serving as many users as the budgets allow comes first; Fbar ranks
  // associations with the same number of served users.
  std::vector<std::vector<int>> options(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (inst.blocked.empty() || !inst.blocked[i]) {
      for (std::size_t j : inst.feasible.sets[i]) options[i].push_back(static_cast<int>(j));
    }
    options[i].push_back(kUnserved);
  }
  search_associations(inst, quantum, options, risk_weight, cache, best);
  return best;
}

namespace {

void search_associations(const UaInstance& inst, double quantum,
                         const std::vector<std::vector<int>>& options, double risk_weight,
                         std::map<std::pair<std::size_t, unsigned>, std::vector<BsOutcome>>& cache,
                         OracleResult& best) {
  const std::size_t m = inst.num_mu();
  const std::size_t l = inst.num_bs();
  const auto& obj = inst.objective;
  std::vector<std::size_t> pick(m, 0);
  std::vector<int> serving(m, kUnserved);
  std::size_t best_served = 0;

  while (true) {
    for (std::size_t i = 0; i < m; ++i) serving[i] = options[i][pick[i]];

    std::vector<unsigned> mask(l, 0);
    std::vector<double> load(l, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (serving[i] == kUnserved) continue;
      const auto j = static_cast<std::size_t>(serving[i]);
      mask[j] |= 1u << i;
      load[j] += inst.n_t(i, j);
    }
    bool feasible = true;
    for (std::size_t j = 0; j < l; ++j) feasible = feasible && load[j] <= inst.budgets[j];

    const auto served = static_cast<std::size_t>(
        std::count_if(serving.begin(), serving.end(), [](int j) { return j != kUnserved; }));
    if (feasible && served >= best_served) {
      ++best.associations_checked;
      if (served > best_served) {
        best_served = served;
        best.fbar = -std::numeric_limits<double>::infinity();
      }
      std::vector<const std::vector<BsOutcome>*> fronts;
      std::vector<std::size_t> active;
      for (std::size_t j = 0; j < l; ++j) {
        if (mask[j] == 0) continue;
        auto key = std::make_pair(j, mask[j]);
        auto it = cache.find(key);
        if (it == cache.end()) {
          std::vector<std::size_t> users;
          for (std::size_t i = 0; i < m; ++i) {
            if (mask[j] & (1u << i)) users.push_back(i);
          }
          const int units = static_cast<int>(std::floor((inst.budgets[j] - load[j]) / quantum + 1e-9));
          it = cache.emplace(key, bs_frontier(inst, j, users, std::max(units, 0), quantum, risk_weight)).first;
        }
        fronts.push_back(&it->second);
        active.push_back(j);
      }

      // Odometer over the per-BS frontiers.
      std::vector<std::size_t> idx(fronts.size(), 0);
      while (true) {
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t f = 0; f < fronts.size(); ++f) {
          sum += (*fronts[f])[idx[f]].sum;
          sq += (*fronts[f])[idx[f]].sq;
        }
        const double value = obj.tau * sum - risk_weight * std::sqrt(sq);
        if (value > best.fbar) {
          best.fbar = value;
          best.association.serving = serving;
          best.allocation = Allocation{Matrix(m, l), std::vector<double>(l, 0.0), 0};
          for (std::size_t f = 0; f < fronts.size(); ++f) {
            const auto& outcome = (*fronts[f])[idx[f]];
            const std::size_t j = active[f];
            std::size_t a = 0;
            for (std::size_t i = 0; i < m; ++i) {
              if (mask[j] & (1u << i)) {
                best.allocation.n(i, j) = inst.n_t(i, j) + outcome.units[a++] * quantum;
              }
            }
          }
        }
        std::size_t f = 0;
        while (f < fronts.size() && ++idx[f] == fronts[f]->size()) idx[f++] = 0;
        if (f == fronts.size()) break;
      }
    }

    std::size_t i = 0;
    while (i < m && ++pick[i] == options[i].size()) pick[i++] = 0;
    if (i == m) break;
  }
}

}  // namespace

}  // namespace semnet
