#include "semnet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "ascent.hpp"
#include "semnet/errors.hpp"

namespace semnet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Minimum relative slack for a start point to count as strictly interior.
constexpr double kInteriorMargin = 1e-9;

bool is_blocked(const UaInstance& inst, std::size_t i) {
  return !inst.blocked.empty() && inst.blocked[i];
}

std::vector<double> slacks(const UaInstance& inst, const std::vector<double>& x) {
  const std::size_t m = inst.num_mu();
  const std::size_t l = inst.num_bs();
  std::vector<double> s(inst.budgets);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < l; ++j) s[j] -= x[i * l + j] * inst.n_t(i, j);
  }
  return s;
}

double min_relative(const std::vector<double>& slack, std::span<const double> budgets) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < slack.size(); ++j) worst = std::min(worst, slack[j] / budgets[j]);
  return worst;
}

// Greedy least-loaded assignment of every unblocked user; returns BS per user.
std::vector<int> greedy_pattern(const UaInstance& inst) {
  const std::size_t m = inst.num_mu();
  std::vector<std::size_t> order;
  std::vector<double> hunger(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (is_blocked(inst, i) || inst.feasible.sets[i].empty()) continue;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t j : inst.feasible.sets[i]) lo = std::min(lo, inst.n_t(i, j));
    hunger[i] = lo;
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return hunger[a] > hunger[b]; });

  std::vector<double> load(inst.num_bs(), 0.0);
  std::vector<int> pattern(m, kUnserved);
  for (std::size_t i : order) {
    std::size_t best = inst.feasible.sets[i].front();
    double best_slack = kNegInf;
    for (std::size_t j : inst.feasible.sets[i]) {
      const double s = (inst.budgets[j] - load[j] - inst.n_t(i, j)) / inst.budgets[j];
      if (s > best_slack) {
        best_slack = s;
        best = j;
      }
    }
    load[best] += inst.n_t(i, best);
    pattern[i] = static_cast<int>(best);
  }
  return pattern;
}

std::vector<double> uniform_point(const UaInstance& inst) {
  const std::size_t l = inst.num_bs();
  std::vector<double> x(inst.num_mu() * l, 0.0);
  for (std::size_t i = 0; i < inst.num_mu(); ++i) {
    if (is_blocked(inst, i)) continue;
    const auto& set = inst.feasible.sets[i];
    for (std::size_t j : set) x[i * l + j] = 1.0 / static_cast<double>(set.size());
  }
  return x;
}

std::vector<double> pattern_point(const UaInstance& inst, const std::vector<int>& pattern) {
  const std::size_t l = inst.num_bs();
  std::vector<double> x(inst.num_mu() * l, 0.0);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != kUnserved) x[i * l + static_cast<std::size_t>(pattern[i])] = 1.0;
  }
  return x;
}

void project_rows(const UaInstance& inst, std::vector<double>& x, std::vector<double>& scratch) {
  const std::size_t l = inst.num_bs();
  for (std::size_t i = 0; i < inst.num_mu(); ++i) {
    double* row = x.data() + i * l;
    if (is_blocked(inst, i)) {
      std::fill(row, row + l, 0.0);
      continue;
    }
    const auto& set = inst.feasible.sets[i];
    scratch.resize(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) scratch[k] = row[set[k]];
    project_simplex(scratch, 1.0);
    std::fill(row, row + l, 0.0);
    for (std::size_t k = 0; k < set.size(); ++k) row[set[k]] = scratch[k];
  }
}

double barrier_value(const UaInstance& inst, const std::vector<double>& x, double r) {
  const auto& obj = inst.objective;
  const std::size_t l = inst.num_bs();
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < inst.num_mu(); ++i) {
    double y = 0.0;
    for (std::size_t j = 0; j < l; ++j) y += x[i * l + j] * obj.xi_t(i, j);
    sum += y;
    sq += y * y;
  }
  double barrier = 0.0;
  for (double s : slacks(inst, x)) {
    if (!(s > 0.0)) return kNegInf;
    barrier += std::log(s);
  }
  return obj.tau * sum - obj.sigma * obj.q * std::sqrt(sq) + r * barrier;
}

std::vector<double> barrier_gradient(const UaInstance& inst, const std::vector<double>& x,
                                     double r) {
  const auto& obj = inst.objective;
  const std::size_t m = inst.num_mu();
  const std::size_t l = inst.num_bs();
  std::vector<double> y(m, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < l; ++j) y[i] += x[i * l + j] * obj.xi_t(i, j);
    sq += y[i] * y[i];
  }
  const double norm = std::max(std::sqrt(sq), obj.eps_norm > 0.0 ? obj.eps_norm : 1e-300);
  const double risk = obj.sigma * obj.q / norm;
  const auto slack = slacks(inst, x);

  std::vector<double> g(m * l, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (is_blocked(inst, i)) continue;
    for (std::size_t j : inst.feasible.sets[i]) {
      const double xi = obj.xi_t(i, j);
      g[i * l + j] = obj.tau * xi - risk * y[i] * xi - r * inst.n_t(i, j) / slack[j];
    }
  }
  return g;
}

}  // namespace

Matrix Association::to_matrix(std::size_t num_bs) const {
  Matrix x(serving.size(), num_bs);
  for (std::size_t i = 0; i < serving.size(); ++i) {
    if (serving[i] != kUnserved) x(i, static_cast<std::size_t>(serving[i])) = 1.0;
  }
  return x;
}

std::vector<std::size_t> Association::unserved() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < serving.size(); ++i) {
    if (serving[i] == kUnserved) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Association::users_of(std::size_t bs) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < serving.size(); ++i) {
    if (serving[i] == static_cast<int>(bs)) out.push_back(i);
  }
  return out;
}

UaInstance make_ua_instance(const ChannelState& channel, const FeasibleSets& feasible,
                            std::vector<double> budgets, const B2mProfile& b2m,
                            const EtaModel& eta, double alpha, double bitrate_threshold) {
  const std::size_t m = channel.gamma.rows();
  const std::size_t l = channel.gamma.cols();
  if (budgets.size() != l) throw std::invalid_argument("make_ua_instance: budget count mismatch");
  if (feasible.num_mu() != m) throw std::invalid_argument("make_ua_instance: feasible set count mismatch");
  if (b2m.kappa.size() != m) throw std::invalid_argument("make_ua_instance: b2m profile size mismatch");
  if (!(bitrate_threshold > 0.0)) throw ConfigError("bit-rate threshold must be > 0");

  UaInstance inst;
  inst.feasible = feasible;
  inst.budgets = std::move(budgets);
  inst.n_t = Matrix(m, l);
  inst.efficiency = Matrix(m, l);
  inst.kappa = b2m.kappa;
  inst.blocked.assign(m, false);
  Matrix xi_t(m, l);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const double eff = std::log2(1.0 + channel.gamma(i, j));
      inst.efficiency(i, j) = eff;
      inst.n_t(i, j) = bitrate_threshold / eff;
      xi_t(i, j) = b2m_rate(b2m, i, bit_rate(inst.n_t(i, j), channel.gamma(i, j)));
    }
  }
  inst.objective = make_objective(eta, alpha, std::move(xi_t));
  return inst;
}

void project_simplex(std::span<double> v, double total) {
  if (v.empty()) return;
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - total) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  for (double& e : v) e = std::max(e - theta, 0.0);
}

std::vector<double> bs_loads(const UaInstance& inst, const Matrix& x) {
  require_shape(x, inst.num_mu(), inst.num_bs(), "bs_loads");
  std::vector<double> load(inst.num_bs(), 0.0);
  for (std::size_t i = 0; i < inst.num_mu(); ++i) {
    for (std::size_t j = 0; j < inst.num_bs(); ++j) load[j] += x(i, j) * inst.n_t(i, j);
  }
  return load;
}

Matrix interior_start(const UaInstance& inst) {
  const std::size_t m = inst.num_mu();
  const std::size_t l = inst.num_bs();
  Matrix start(m, l);
  auto uniform = uniform_point(inst);
  const auto s_uniform = slacks(inst, uniform);
  if (min_relative(s_uniform, inst.budgets) > kInteriorMargin) {
    start.data() = std::move(uniform);
    return start;
  }

  const auto pattern = greedy_pattern(inst);
  const auto greedy = pattern_point(inst, pattern);
  const auto s_greedy = slacks(inst, greedy);
  if (!(min_relative(s_greedy, inst.budgets) > kInteriorMargin)) {
    std::vector<std::size_t> overloaded;
    std::ostringstream msg;
    msg << "no strictly interior association: budget exhausted at BS";
    for (std::size_t j = 0; j < l; ++j) {
      if (!(s_greedy[j] / inst.budgets[j] > kInteriorMargin)) {
        overloaded.push_back(j);
        msg << ' ' << j;
      }
    }
    throw InfeasibleError(msg.str(), std::move(overloaded));
  }

  // Slack is affine in the mixing weight, so the best mix lies on a fine grid
  // point up to 1% of the achievable margin.
  double best_lambda = 1.0;
  double best_margin = min_relative(s_greedy, inst.budgets);
  for (int k = 0; k < 100; ++k) {
    const double lambda = k / 100.0;
    std::vector<double> s(l);
    for (std::size_t j = 0; j < l; ++j) s[j] = (1.0 - lambda) * s_uniform[j] + lambda * s_greedy[j];
    const double margin = min_relative(s, inst.budgets);
    if (margin > best_margin) {
      best_margin = margin;
      best_lambda = lambda;
    }
  }
  for (std::size_t k = 0; k < start.size(); ++k) {
    start.data()[k] = (1.0 - best_lambda) * uniform[k] + best_lambda * greedy[k];
  }
  return start;
}

namespace {

std::vector<std::size_t> admission_pass(const UaInstance& inst) {
  if (min_relative(slacks(inst, uniform_point(inst)), inst.budgets) > kInteriorMargin) return {};
  const auto pattern = greedy_pattern(inst);
  std::vector<double> load(inst.num_bs(), 0.0);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != kUnserved) {
      const auto j = static_cast<std::size_t>(pattern[i]);
      load[j] += inst.n_t(i, j);
    }
  }
  std::vector<std::size_t> blocked;
  for (std::size_t j = 0; j < inst.num_bs(); ++j) {
    if ((inst.budgets[j] - load[j]) / inst.budgets[j] > kInteriorMargin) continue;
    std::vector<std::size_t> users;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      if (pattern[i] == static_cast<int>(j)) users.push_back(i);
    }
    // Most bandwidth-hungry first; ties drop the higher index.
    std::sort(users.begin(), users.end(), [&](std::size_t a, std::size_t b) {
      if (inst.n_t(a, j) != inst.n_t(b, j)) return inst.n_t(a, j) > inst.n_t(b, j);
      return a > b;
    });
    for (std::size_t i : users) {
      if ((inst.budgets[j] - load[j]) / inst.budgets[j] > kInteriorMargin) break;
      load[j] -= inst.n_t(i, j);
      blocked.push_back(i);
    }
  }
  return blocked;
}

}  // namespace

std::vector<std::size_t> admission_blocklist(const UaInstance& inst) {
  // Blocking changes the greedy order, so repeat until the pattern fits.
  UaInstance work = inst;
  work.blocked.resize(inst.num_mu(), false);
  std::vector<std::size_t> blocked;
  for (;;) {
    const auto pass = admission_pass(work);
    if (pass.empty()) break;
    for (std::size_t i : pass) {
      work.blocked[i] = true;
      blocked.push_back(i);
    }
  }
  std::sort(blocked.begin(), blocked.end());
  return blocked;
}

UaInstance prune_unusable_links(const UaInstance& inst) {
  UaInstance out = inst;
  out.blocked.assign(inst.num_mu(), false);
  for (std::size_t i = 0; i < inst.num_mu(); ++i) {
    if (is_blocked(inst, i)) {
      out.blocked[i] = true;
      continue;
    }
    auto& set = out.feasible.sets[i];
    std::erase_if(set, [&](std::size_t j) { return inst.n_t(i, j) > inst.budgets[j]; });
    if (set.empty()) out.blocked[i] = true;
  }
  return out;
}

double barrier_objective(const UaInstance& inst, const Matrix& x, double r) {
  require_shape(x, inst.num_mu(), inst.num_bs(), "barrier_objective");
  return barrier_value(inst, x.data(), r);
}

RelaxedAssociation solve_relaxed_ua(const UaInstance& inst, const BarrierParams& params) {
  const std::size_t m = inst.num_mu();
  const std::size_t l = inst.num_bs();
  RelaxedAssociation out;
  out.x = Matrix(m, l);
  if (m == 0) return out;
  for (std::size_t i = 0; i < m; ++i) {
    if (!is_blocked(inst, i) && inst.feasible.sets[i].empty()) {
      throw std::invalid_argument("solve_relaxed_ua: user " + std::to_string(i) +
                                  " has an empty feasible set");
    }
  }
  if (!(params.mu > 1.0) || !(params.r_min > 0.0) || !(params.tol > 0.0)) {
    throw ConfigError("barrier parameters need mu > 1, r_min > 0 and tol > 0");
  }

  const Matrix start = interior_start(inst);
  std::vector<double> x = start.data();
  double r = params.r0 > 0.0 ? params.r0
                             : std::max(1.0, std::abs(objective_value(inst.objective, start)));

  // Fixed normalisation for the stationarity test: the largest gradient
  // entry at the start of the path.
  double scale = 0.0;
  for (double v : barrier_gradient(inst, x, r)) scale = std::max(scale, std::abs(v));
  scale = std::max(scale, 1e-300);

  std::vector<double> scratch;
  std::vector<double> probe;
  auto project = [&](std::vector<double>& v) { project_rows(inst, v, scratch); };
  auto residual = [&](const std::vector<double>& point, const std::vector<double>& g) {
    probe.resize(point.size());
    for (std::size_t k = 0; k < point.size(); ++k) probe[k] = point[k] + g[k] / scale;
    project(probe);
    double worst = 0.0;
    for (std::size_t k = 0; k < point.size(); ++k) worst = std::max(worst, std::abs(probe[k] - point[k]));
    return worst;
  };

  double step = 1.0 / scale;
  while (true) {
    detail::AscentOptions opt;
    opt.tol = params.tol;
    opt.max_iterations = params.max_inner_iterations;
    opt.initial_step = step;
    const auto result = detail::projected_ascent(
        x, [&](const std::vector<double>& p) { return barrier_value(inst, p, r); },
        [&](const std::vector<double>& p) { return barrier_gradient(inst, p, r); }, project,
        residual, opt);
    out.inner_iterations += result.iterations;
    ++out.outer_iterations;
    out.residual = result.residual;
    out.r_trace.push_back(r);
    out.barrier_trace.push_back(barrier_value(inst, x, r));
    if (!result.converged && !result.stalled) {
      throw SolverError("barrier inner loop hit the iteration cap at r = " + std::to_string(r) +
                            " (residual " + std::to_string(result.residual) + ")",
                        out.barrier_trace);
    }
    if (r / params.mu < params.r_min) break;
    r /= params.mu;
  }
  out.x.data() = std::move(x);
  return out;
}

Association round_association(const Matrix& x, const FeasibleSets& fs, const Matrix& xi_t,
                              const std::vector<bool>& blocked) {
  constexpr double kTie = 1e-12;
  Association out;
  out.serving.assign(x.rows(), kUnserved);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!blocked.empty() && blocked[i]) continue;
    const auto& set = fs.sets[i];
    if (set.empty()) continue;
    std::size_t best = set.front();
    for (std::size_t j : set) {
      if (x(i, j) > x(i, best) + kTie) {
        best = j;
      } else if (std::abs(x(i, j) - x(i, best)) <= kTie && xi_t(i, j) > xi_t(i, best)) {
        best = j;
      }
    }
    out.serving[i] = static_cast<int>(best);
  }
  return out;
}

Association round_association(const RelaxedAssociation& xs, const UaInstance& inst) {
  return round_association(xs.x, inst.feasible, inst.objective.xi_t, inst.blocked);
}

Association repair_with_weights(Association assoc, const Matrix& weights,
                                const FeasibleSets& candidates, const Matrix& n_t,
                                std::span<const double> budgets) {
  const std::size_t l = budgets.size();
  auto load_of = [&](std::size_t j) {
    double load = 0.0;
    for (std::size_t i = 0; i < assoc.serving.size(); ++i) {
      if (assoc.serving[i] == static_cast<int>(j)) load += n_t(i, j);
    }
    return load;
  };
  std::vector<double> load(l);
  for (std::size_t j = 0; j < l; ++j) load[j] = load_of(j);

  while (true) {
    std::size_t worst = l;
    double worst_excess = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      const double excess = load[j] - budgets[j];
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = j;
      }
    }
    if (worst == l) break;

    std::size_t victim = assoc.serving.size();
    for (std::size_t i = 0; i < assoc.serving.size(); ++i) {
      if (assoc.serving[i] != static_cast<int>(worst)) continue;
      if (victim == assoc.serving.size() || n_t(i, worst) >= n_t(victim, worst)) victim = i;
    }

    std::vector<std::size_t> options;
    for (std::size_t j : candidates.sets[victim]) {
      if (j != worst) options.push_back(j);
    }
    std::stable_sort(options.begin(), options.end(), [&](std::size_t a, std::size_t b) {
      return weights(victim, a) > weights(victim, b);
    });
    int target = kUnserved;
    for (std::size_t j : options) {
      if (budgets[j] - load[j] >= n_t(victim, j)) {
        target = static_cast<int>(j);
        break;
      }
    }
    assoc.serving[victim] = target;
    load[worst] = load_of(worst);
    if (target != kUnserved) load[static_cast<std::size_t>(target)] = load_of(static_cast<std::size_t>(target));
  }
  return assoc;
}

Association repair_overload(const Association& assoc, const RelaxedAssociation& xs,
                            const UaInstance& inst) {
  return repair_with_weights(assoc, xs.x, inst.feasible, inst.n_t, inst.budgets);
}

double residual_objective(const UaInstance& inst, std::size_t bs,
                          std::span<const std::size_t> users, std::span<const double> n) {
  std::vector<double> rates(users.size());
  for (std::size_t k = 0; k < users.size(); ++k) {
    rates[k] = inst.kappa[users[k]] * inst.efficiency(users[k], bs) * n[k];
  }
  const auto& obj = inst.objective;
  return confidence_bound(obj.tau, obj.sigma, obj.q, rates);
}

Allocation allocate_residual(const Association& assoc, const UaInstance& inst,
                             const ResidualOptions& options) {
  const std::size_t l = inst.num_bs();
  const auto& obj = inst.objective;
  Allocation out{Matrix(inst.num_mu(), l), std::vector<double>(l, 0.0), 0};

  for (std::size_t j = 0; j < l; ++j) {
    const auto users = assoc.users_of(j);
    if (users.empty()) continue;
    const double budget = inst.budgets[j];
    const std::size_t k = users.size();
    std::vector<double> floor(k);
    std::vector<double> slope(k);  // msg/s per Hz
    double floor_sum = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      floor[a] = inst.n_t(users[a], j);
      slope[a] = inst.kappa[users[a]] * inst.efficiency(users[a], j);
      floor_sum += floor[a];
    }
    const double spare = budget - floor_sum;
    std::vector<double> extra(k, 0.0);
    if (spare > 0.0 && k == 1) {
      extra[0] = spare;
    } else if (spare > 0.0) {
      extra.assign(k, spare / static_cast<double>(k));
      auto rates = [&](const std::vector<double>& r) {
        std::vector<double> s(k);
        for (std::size_t a = 0; a < k; ++a) s[a] = slope[a] * (floor[a] + r[a]);
        return s;
      };
      auto value = [&](const std::vector<double>& r) {
        return confidence_bound(obj.tau, obj.sigma, obj.q, rates(r));
      };
      auto grad = [&](const std::vector<double>& r) {
        const auto s = rates(r);
        double sq = 0.0;
        for (double v : s) sq += v * v;
        const double risk = obj.sigma * obj.q / std::max(std::sqrt(sq), 1e-300);
        std::vector<double> g(k);
        for (std::size_t a = 0; a < k; ++a) g[a] = slope[a] * (obj.tau - risk * s[a]);
        return g;
      };
      auto project = [&](std::vector<double>& r) { project_simplex(r, spare); };
      std::vector<double> probe;
      auto residual = [&](const std::vector<double>& r, const std::vector<double>& g) {
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax == 0.0) return 0.0;
        probe.resize(k);
        for (std::size_t a = 0; a < k; ++a) probe[a] = r[a] + g[a] * budget / gmax;
        project(probe);
        double worst = 0.0;
        for (std::size_t a = 0; a < k; ++a) worst = std::max(worst, std::abs(probe[a] - r[a]));
        return worst;
      };
      double gmax = 0.0;
      for (double v : grad(extra)) gmax = std::max(gmax, std::abs(v));
      detail::AscentOptions opt;
      opt.tol = options.kkt_tol * budget;
      opt.max_iterations = options.max_iterations;
      opt.initial_step = gmax > 0.0 ? spare / gmax : 1.0;
      const auto result = detail::projected_ascent(extra, value, grad, project, residual, opt);
      out.iterations += result.iterations;
      out.kkt_residual[j] = result.residual;
    }

    double total = 0.0;
    std::size_t largest = 0;
    for (std::size_t a = 0; a < k; ++a) {
      out.n(users[a], j) = floor[a] + extra[a];
      total += out.n(users[a], j);
      if (out.n(users[a], j) > out.n(users[largest], j)) largest = a;
    }
    // Absorb rounding so the budget is met exactly.
    if (spare > 0.0) out.n(users[largest], j) += budget - total;
  }
  return out;
}

Association baseline_max_sinr(const ChannelState& channel, const FeasibleSets& fs,
                              const UaInstance& inst, bool restrict_to_feasible) {
  const std::size_t m = channel.gamma.rows();
  const std::size_t l = channel.gamma.cols();
  const FeasibleSets candidates = restrict_to_feasible ? fs : all_feasible(m, l);
  Association assoc;
  assoc.serving.assign(m, kUnserved);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& set = candidates.sets[i];
    if (set.empty()) continue;
    std::size_t best = set.front();
    for (std::size_t j : set) {
      if (channel.gamma(i, j) > channel.gamma(i, best)) best = j;
    }
    assoc.serving[i] = static_cast<int>(best);
  }
  return repair_with_weights(std::move(assoc), channel.gamma, candidates, inst.n_t, inst.budgets);
}

double waterfill_utility(double n, double c) {
  if (n <= 0.0) return 0.0;
  return n * std::log2(1.0 + c / n);
}

namespace {

// Marginal utility d/dn [n log2(1 + c/n)] as a function of z = c/n.
double marginal(double z) { return std::log2(1.0 + z) - z / ((1.0 + z) * std::numbers::ln2); }

// z with marginal(z) = level, by bisection in log space.
double marginal_inverse(double level) {
  double lo = -80.0;
  double hi = 80.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (marginal(std::exp(mid)) < level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

std::vector<double> floored_even(std::span<const double> floors, double total) {
  std::vector<double> sorted(floors.begin(), floors.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // Largest users pinned at their floor, the rest share the remainder.
  double remaining = total;
  std::size_t pinned = 0;
  double level = total / static_cast<double>(floors.size());
  while (pinned < sorted.size()) {
    level = remaining / static_cast<double>(sorted.size() - pinned);
    if (sorted[pinned] <= level) break;
    remaining -= sorted[pinned];
    ++pinned;
  }
  std::vector<double> out(floors.size());
  for (std::size_t a = 0; a < floors.size(); ++a) out[a] = std::max(floors[a], level);
  return out;
}

}  // namespace

std::vector<double> waterfill(std::span<const double> c, std::span<const double> floors,
                              double total) {
  const std::size_t k = c.size();
  double floor_sum = 0.0;
  for (double f : floors) floor_sum += f;
  if (floor_sum >= total) return {floors.begin(), floors.end()};

  auto allocate = [&](double level) {
    const double z = marginal_inverse(level);
    std::vector<double> n(k);
    for (std::size_t a = 0; a < k; ++a) n[a] = std::max(floors[a], c[a] / z);
    return n;
  };
  auto sum_at = [&](double level) {
    double s = 0.0;
    for (double v : allocate(level)) s += v;
    return s;
  };
  // The allocated total falls as the water level rises.
  double lo = 0.0;
  double hi = 1.0;
  while (sum_at(hi) > total && hi < 1e6) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sum_at(mid) > total) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * hi) break;
  }
  auto n = allocate(hi);
  // Hand the bisection gap to the users above their floor, proportionally.
  double free_sum = 0.0;
  double sum = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    sum += n[a];
    if (n[a] > floors[a]) free_sum += n[a];
  }
  if (free_sum > 0.0) {
    const double factor = 1.0 + (total - sum) / free_sum;
    for (std::size_t a = 0; a < k; ++a) {
      if (n[a] > floors[a]) n[a] *= factor;
    }
  }
  return n;
}

Allocation baseline_ba(const Association& assoc, const UaInstance& inst, BandwidthMode mode) {
  const std::size_t l = inst.num_bs();
  Allocation out{Matrix(inst.num_mu(), l), std::vector<double>(l, 0.0), 0};
  for (std::size_t j = 0; j < l; ++j) {
    const auto users = assoc.users_of(j);
    if (users.empty()) continue;
    std::vector<double> floors(users.size());
    std::vector<double> c(users.size());
    for (std::size_t a = 0; a < users.size(); ++a) {
      floors[a] = inst.n_t(users[a], j);
      c[a] = (std::exp2(inst.efficiency(users[a], j)) - 1.0) * floors[a];
    }
    const auto n = mode == BandwidthMode::kEven ? floored_even(floors, inst.budgets[j])
                                                : waterfill(c, floors, inst.budgets[j]);
    for (std::size_t a = 0; a < users.size(); ++a) out.n(users[a], j) = n[a];
  }
  return out;
}

TwoStageSolution solve_two_stage(const UaInstance& inst, const BarrierParams& params,
                                 const ResidualOptions& residual) {
  TwoStageSolution sol;
  UaInstance admitted = prune_unusable_links(inst);
  const auto refused = admission_blocklist(admitted);
  for (std::size_t i : refused) admitted.blocked[i] = true;
  for (std::size_t i = 0; i < admitted.num_mu(); ++i) {
    if (admitted.blocked[i] && !is_blocked(inst, i)) sol.blocked.push_back(i);
  }

  sol.relaxed = solve_relaxed_ua(admitted, params);
  sol.rounded = round_association(sol.relaxed, admitted);
  sol.association = repair_overload(sol.rounded, sol.relaxed, admitted);
  sol.allocation = allocate_residual(sol.association, admitted, residual);
  return sol;
}

std::string check_association(const Association& assoc, const UaInstance& inst,
                              bool require_feasible_sets) {
  std::ostringstream msg;
  if (assoc.num_mu() != inst.num_mu()) return "association size mismatch";
  std::vector<double> load(inst.num_bs(), 0.0);
  for (std::size_t i = 0; i < assoc.num_mu(); ++i) {
    const int s = assoc.serving[i];
    if (s == kUnserved) continue;
    if (s < 0 || static_cast<std::size_t>(s) >= inst.num_bs()) {
      msg << "user " << i << " served by invalid BS " << s;
      return msg.str();
    }
    const auto j = static_cast<std::size_t>(s);
    if (require_feasible_sets && !inst.feasible.contains(i, j)) {
      msg << "user " << i << " served by BS " << j << " outside its feasible set";
      return msg.str();
    }
    load[j] += inst.n_t(i, j);
  }
  for (std::size_t j = 0; j < inst.num_bs(); ++j) {
    if (load[j] > inst.budgets[j] * (1.0 + 1e-9)) {
      msg << "BS " << j << " minimum-bandwidth load " << load[j] << " exceeds budget "
          << inst.budgets[j];
      return msg.str();
    }
  }
  return {};
}

std::string check_allocation(const Association& assoc, const Allocation& alloc,
                             const UaInstance& inst, double rel_tol) {
  std::ostringstream msg;
  require_shape(alloc.n, inst.num_mu(), inst.num_bs(), "check_allocation");
  std::vector<double> used(inst.num_bs(), 0.0);
  std::vector<int> count(inst.num_bs(), 0);
  for (std::size_t i = 0; i < inst.num_mu(); ++i) {
    for (std::size_t j = 0; j < inst.num_bs(); ++j) {
      const double n = alloc.n(i, j);
      const bool serving = assoc.serving[i] == static_cast<int>(j);
      if (!serving && n != 0.0) {
        msg << "user " << i << " holds bandwidth on non-serving BS " << j;
        return msg.str();
      }
      if (serving) {
        if (n < inst.n_t(i, j) - rel_tol * inst.budgets[j]) {
          msg << "user " << i << " below its minimum bandwidth on BS " << j;
          return msg.str();
        }
        used[j] += n;
        ++count[j];
      }
    }
  }
  for (std::size_t j = 0; j < inst.num_bs(); ++j) {
    if (count[j] > 0 && std::abs(used[j] - inst.budgets[j]) > rel_tol * inst.budgets[j]) {
      msg << "BS " << j << " allocates " << used[j] << " Hz of its " << inst.budgets[j] << " Hz budget";
      return msg.str();
    }
  }
  return {};
}

}  // namespace semnet
