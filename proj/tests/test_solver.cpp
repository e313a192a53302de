#include <algorithm>
#include <cmath>
#include <numeric>

#include "ascent.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "semnet/errors.hpp"
#include "semnet/harness.hpp"
#include "semnet/metrics.hpp"
#include "semnet/rng.hpp"
#include "semnet/solver.hpp"

using namespace semnet;

namespace {

// Instance from an explicit SINR matrix. With threshold b the minimum
// bandwidth of a link is b / log2(1 + gamma).
UaInstance instance(const Matrix& gamma, FeasibleSets fs, std::vector<double> budgets,
                    EtaModel eta = {}, double alpha = 0.95, double threshold = 1e4,
                    double kappa = 1e-3) {
  ChannelState ch{gamma};
  return make_ua_instance(ch, fs, std::move(budgets), uniform_b2m(gamma.rows(), kappa), eta, alpha,
                          threshold);
}

Matrix rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Simplex projection through bisection on the shift theta.
std::vector<double> project_by_bisection(std::vector<double> v, double total) {
  double lo = *std::min_element(v.begin(), v.end()) - total;
  double hi = *std::max_element(v.begin(), v.end());
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double x : v) s += std::max(x - mid, 0.0);
    (s > total ? lo : hi) = mid;
  }
  for (double& x : v) x = std::max(x - 0.5 * (lo + hi), 0.0);
  return v;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("simplex projection") {
  auto gen = make_stream(2, Stream::kValidate);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + gen() % 7;
    std::vector<double> v(n);
    for (double& x : v) x = 4.0 * uniform01(gen) - 2.0;
    const double total = 0.1 + 3.0 * uniform01(gen);
    auto w = v;
    project_simplex(w, total);
    const auto ref = project_by_bisection(v, total);
    CHECK(sum(w) == doctest::Approx(total).epsilon(1e-12));
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(w[k] >= 0.0);
      CHECK(w[k] == doctest::Approx(ref[k]).epsilon(1e-9).scale(total));
    }
  }
  std::vector<double> inside = {0.2, 0.3, 0.5};
  project_simplex(inside, 1.0);
  CHECK(inside[0] == doctest::Approx(0.2));
  CHECK(inside[2] == doctest::Approx(0.5));
}

TEST_CASE("minimum bandwidths and constant stage-one weights") {
  const auto inst = instance(rows_of({{3.0, 1.0}, {15.0, 7.0}}), all_feasible(2, 2), {2e6, 2e6});
  CHECK(inst.n_t(0, 0) == doctest::Approx(1e4 / 2.0));
  CHECK(inst.n_t(0, 1) == doctest::Approx(1e4));
  CHECK(inst.n_t(1, 0) == doctest::Approx(1e4 / 4.0));
  CHECK(inst.efficiency(1, 1) == doctest::Approx(3.0));
  // kappa * threshold on every feasible link.
  for (double v : inst.objective.xi_t.data()) CHECK(v == doctest::Approx(10.0));
}

TEST_CASE("forced association") {
  FeasibleSets fs{{{1}}};
  const auto inst = instance(rows_of({{50.0, 2.0, 9.0}}), fs, {2e6, 2e6, 2e6});
  const auto xs = solve_relaxed_ua(inst);
  CHECK(xs.x(0, 0) == 0.0);
  CHECK(xs.x(0, 1) == 1.0);
  CHECK(xs.x(0, 2) == 0.0);
}

TEST_CASE("symmetric instance reaches the enumerated optimum") {
  const auto inst = instance(rows_of({{10.0, 10.0}, {10.0, 10.0}}), all_feasible(2, 2), {2e6, 2e6});
  const auto xs = solve_relaxed_ua(inst);
  double best = -1e300;
  for (int a : {0, 1}) {
    for (int b : {0, 1}) {
      Matrix x(2, 2);
      x(0, a) = 1.0;
      x(1, b) = 1.0;
      best = std::max(best, objective_value(inst.objective, x));
    }
  }
  Matrix split(2, 2, 0.5);
  best = std::max(best, objective_value(inst.objective, split));
  CHECK(objective_value(inst.objective, xs.x) == doctest::Approx(best).epsilon(1e-6));
  // Each user splits evenly at the analytic centre.
  CHECK(xs.x(0, 0) == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("a tight budget pushes mass to the other BS") {
  // Both users need exactly N_A on A (gamma = 1 there), far less on B.
  const double threshold = 1e5;
  const auto inst = instance(rows_of({{1.0, 0.5}, {1.0, 0.5}}), all_feasible(2, 2),
                             {threshold, 10 * threshold}, EtaModel{}, 0.95, threshold);
  CHECK(inst.n_t(0, 0) == doctest::Approx(inst.budgets[0]));
  const auto xs = solve_relaxed_ua(inst);
  CHECK(xs.x(0, 0) + xs.x(1, 0) < 1.0);
  const auto load = bs_loads(inst, xs.x);
  CHECK(load[0] < inst.budgets[0]);
  CHECK(load[1] < inst.budgets[1]);
}

TEST_CASE("relaxed iterate is row-stochastic and interior") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto tiny = make_tiny_instance(seed, EtaModel{}, 0.95);
    const auto admitted = prune_unusable_links(tiny.instance);
    UaInstance inst = admitted;
    for (std::size_t i : admission_blocklist(admitted)) inst.blocked[i] = true;
    const auto xs = solve_relaxed_ua(inst);
    for (std::size_t i = 0; i < inst.num_mu(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < inst.num_bs(); ++j) {
        if (inst.blocked[i] || !inst.feasible.contains(i, j)) CHECK(xs.x(i, j) == 0.0);
        s += xs.x(i, j);
      }
      if (!inst.blocked[i]) CHECK(std::abs(s - 1.0) <= 1e-9);
    }
    const auto load = bs_loads(inst, xs.x);
    for (std::size_t j = 0; j < inst.num_bs(); ++j) CHECK(load[j] <= inst.budgets[j] + 1e-9);
    CHECK(xs.residual <= 1e-6);
    CHECK(xs.r_trace.back() <= 1e-6 * 10.0);
  }
}

TEST_CASE("relaxed value bounds every binary association") {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const auto tiny = make_tiny_instance(seed, EtaModel{}, 0.95);
    UaInstance inst = prune_unusable_links(tiny.instance);
    for (std::size_t i : admission_blocklist(inst)) inst.blocked[i] = true;
    const auto xs = solve_relaxed_ua(inst);
    const double relaxed = objective_value(inst.objective, xs.x);
    std::vector<std::vector<int>> options(inst.num_mu());
    for (std::size_t i = 0; i < inst.num_mu(); ++i) {
      if (inst.blocked[i]) {
        options[i] = {kUnserved};
      } else {
        for (auto j : inst.feasible.sets[i]) options[i].push_back(static_cast<int>(j));
      }
    }
    oracle::for_each_assignment(options, [&](const std::vector<int>& pick) {
      Association a{pick};
      if (!check_association(a, inst).empty()) return;
      CHECK(objective_value(inst.objective, a.to_matrix(inst.num_bs())) <= relaxed + 1e-6 * std::abs(relaxed));
    });
  }
}

TEST_CASE("barrier value never drops along accepted iterates") {
  const auto tiny = make_tiny_instance(3, EtaModel{}, 0.95);
  UaInstance inst = prune_unusable_links(tiny.instance);
  for (std::size_t i : admission_blocklist(inst)) inst.blocked[i] = true;
  const std::size_t m = inst.num_mu();
  const std::size_t l = inst.num_bs();
  const double r = 5.0;
  auto value = [&](const std::vector<double>& v) {
    Matrix x(m, l);
    x.data() = v;
    return barrier_objective(inst, x, r);
  };
  std::vector<double> accepted;
  auto grad = [&](const std::vector<double>& v) {
    Matrix x(m, l);
    x.data() = v;
    accepted.push_back(barrier_objective(inst, x, r));
    const auto load = bs_loads(inst, x);
    Matrix g = objective_gradient(inst.objective, x);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < l; ++j) g(i, j) -= r * inst.n_t(i, j) / (inst.budgets[j] - load[j]);
    }
    return g.data();
  };
  auto project = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> row;
      for (auto j : inst.feasible.sets[i]) row.push_back(v[i * l + j]);
      if (!inst.blocked[i]) project_simplex(row, 1.0);
      for (std::size_t j = 0; j < l; ++j) v[i * l + j] = 0.0;
      std::size_t k = 0;
      if (!inst.blocked[i]) {
        for (auto j : inst.feasible.sets[i]) v[i * l + j] = row[k++];
      }
    }
  };
  auto residual = [&](const std::vector<double>& v, const std::vector<double>& g) {
    auto moved = v;
    for (std::size_t k = 0; k < v.size(); ++k) moved[k] += g[k];
    project(moved);
    double worst = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) worst = std::max(worst, std::abs(moved[k] - v[k]));
    return worst;
  };
  std::vector<double> x = interior_start(inst).data();
  detail::projected_ascent(x, value, grad, project, residual, {1e-9, 500, 1.0, 1e-4});
  REQUIRE(accepted.size() > 1);
  for (std::size_t k = 1; k < accepted.size(); ++k) CHECK(accepted[k] >= accepted[k - 1]);
}

TEST_CASE("no interior point names the overloaded BS") {
  FeasibleSets fs{{{0}, {0, 1}}};
  const auto inst = instance(rows_of({{1.0, 1.0}, {1.0, 1.0}}), fs, {5e3, 1e6});
  try {
    interior_start(inst);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.overloaded() == std::vector<std::size_t>{0});
  }
  // The pipeline drops the link instead and serves the other user.
  const auto sol = solve_two_stage(inst);
  CHECK(sol.association.serving[0] == kUnserved);
  CHECK(sol.association.serving[1] == 1);
}

TEST_CASE("bad barrier parameters") {
  const auto inst = instance(rows_of({{3.0}}), all_feasible(1, 1), {1e6});
  BarrierParams p;
  p.mu = 1.0;
  CHECK_THROWS_AS(solve_relaxed_ua(inst, p), ConfigError);
}

TEST_CASE("rounding") {
  const Matrix xi(3, 3, 1.0);
  FeasibleSets fs{{{0, 1, 2}, {0, 1}, {0, 1, 2}}};
  Matrix x = rows_of({{0.2, 0.7, 0.1}, {0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}});
  const auto a = round_association(x, fs, xi);
  CHECK(a.serving == std::vector<int>{1, 0, 2});
  // Ties prefer the larger weight before the lower index.
  Matrix xi2 = xi;
  xi2(1, 1) = 2.0;
  CHECK(round_association(x, fs, xi2).serving[1] == 1);
  // Binary input is a fixed point.
  const Matrix binary = a.to_matrix(3);
  CHECK(round_association(binary, fs, xi).serving == a.serving);
  CHECK(round_association(x, fs, xi, {false, true, false}).serving[1] == kUnserved);
}

TEST_CASE("repair moves the hungriest user on a tie to the largest index") {
  const Matrix n_t(3, 2, 1e6);
  FeasibleSets fs{{{0, 1}, {0, 1}, {0, 1}}};
  Matrix weights = rows_of({{0.6, 0.4}, {0.6, 0.4}, {0.6, 0.4}});
  const std::vector<double> budgets = {2e6, 2e6};
  const auto fixed = repair_with_weights(Association{{0, 0, 0}}, weights, fs, n_t, budgets);
  CHECK(fixed.serving == std::vector<int>{0, 0, 1});
  // Nothing to do.
  const auto same = repair_with_weights(Association{{0, 1, 0}}, weights, fs, n_t, budgets);
  CHECK(same.serving == std::vector<int>{0, 1, 0});
}

TEST_CASE("repair picks the largest minimum bandwidth and the most-overloaded BS first") {
  Matrix n_t = rows_of({{1e6, 1e6}, {1.5e6, 1e6}, {0.8e6, 1e6}});
  FeasibleSets fs{{{0, 1}, {0, 1}, {0, 1}}};
  const Matrix weights(3, 2, 0.5);
  const auto fixed = repair_with_weights(Association{{0, 0, 0}}, weights, fs, n_t,
                                         std::vector<double>{2e6, 2e6});
  CHECK(fixed.serving == std::vector<int>{0, 1, 0});
}

TEST_CASE("repair leaves a user unserved without alternatives") {
  const Matrix n_t(2, 2, 1e6);
  FeasibleSets fs{{{0}, {0}}};
  const Matrix weights(2, 2, 0.5);
  const auto fixed = repair_with_weights(Association{{0, 0}}, weights, fs, n_t,
                                         std::vector<double>{1e6, 5e6});
  CHECK(fixed.serving == std::vector<int>{0, kUnserved});
}

TEST_CASE("residual allocation: single user takes the whole budget") {
  const auto inst = instance(rows_of({{7.0, 2.0}}), all_feasible(1, 2), {2e6, 1e6});
  const auto alloc = allocate_residual(Association{{0}}, inst);
  CHECK(alloc.n(0, 0) == doctest::Approx(2e6).epsilon(1e-12));
  CHECK(alloc.n(0, 1) == 0.0);
}

TEST_CASE("residual allocation: zero variance gives the spare to the best user") {
  const auto inst = instance(rows_of({{3.0}, {15.0}, {7.0}}), all_feasible(3, 1), {1e6},
                             EtaModel{0.5, 0.0});
  const auto alloc = allocate_residual(Association{{0, 0, 0}}, inst);
  const double spare = 1e6 - inst.n_t(0, 0) - inst.n_t(1, 0) - inst.n_t(2, 0);
  CHECK(alloc.n(1, 0) == doctest::Approx(inst.n_t(1, 0) + spare).epsilon(1e-8));
  CHECK(alloc.n(0, 0) == doctest::Approx(inst.n_t(0, 0)).epsilon(1e-8));
  CHECK(alloc.n(2, 0) == doctest::Approx(inst.n_t(2, 0)).epsilon(1e-8));
}

TEST_CASE("residual allocation: risk-averse split matches a grid search") {
  for (double alpha : {0.9, 0.95, 0.99}) {
    const auto inst = instance(rows_of({{40.0}, {25.0}}), all_feasible(2, 1), {1e6},
                               EtaModel{0.5, 0.3}, alpha);
    const auto alloc = allocate_residual(Association{{0, 0}}, inst);
    const double spare = 1e6 - inst.n_t(0, 0) - inst.n_t(1, 0);
    const std::vector<std::size_t> users = {0, 1};
    auto f = [&](double s) {
      const double n[2] = {inst.n_t(0, 0) + s, inst.n_t(1, 0) + spare - s};
      return residual_objective(inst, 0, users, n);
    };
    const double best = oracle::grid_argmax(f, 0.0, spare);
    CHECK(best > 0.0);
    CHECK(best < spare);
    CHECK(std::abs(alloc.n(0, 0) - inst.n_t(0, 0) - best) <= 1e-4 * 1e6);
    CHECK(alloc.n(0, 0) + alloc.n(1, 0) == doctest::Approx(1e6).epsilon(1e-12));
    CHECK(alloc.kkt_residual[0] <= 1e-8 * 1e6);
  }
}

TEST_CASE("residual allocation never loses to the even split") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto tiny = make_tiny_instance(seed, EtaModel{0.5, 0.25}, 0.95);
    const auto sol = solve_two_stage(tiny.instance);
    const auto& inst = tiny.instance;
    for (std::size_t j = 0; j < inst.num_bs(); ++j) {
      const auto users = sol.association.users_of(j);
      if (users.empty()) continue;
      double floors = 0.0;
      for (auto i : users) floors += inst.n_t(i, j);
      std::vector<double> even(users.size()), got(users.size());
      for (std::size_t k = 0; k < users.size(); ++k) {
        even[k] = inst.n_t(users[k], j) + (inst.budgets[j] - floors) / users.size();
        got[k] = sol.allocation.n(users[k], j);
      }
      CHECK(residual_objective(inst, j, users, got) >=
            residual_objective(inst, j, users, even) - 1e-9 * std::abs(residual_objective(inst, j, users, even)));
    }
  }
}

TEST_CASE("max-SINR association") {
  const Matrix gamma = rows_of({{5.0, 20.0, 1.0}, {4.0, 4.0, 4.0}, {30.0, 2.0, 1.0}});
  const auto inst = instance(gamma, all_feasible(3, 3), {2e6, 2e6, 2e6});
  const auto a = baseline_max_sinr(ChannelState{gamma}, all_feasible(3, 3), inst);
  CHECK(a.serving == std::vector<int>{1, 0, 0});

  // Restricted to the feasible sets.
  FeasibleSets fs{{{0, 2}, {2}, {1}}};
  const auto inst_fs = instance(gamma, fs, {2e6, 2e6, 2e6});
  CHECK(baseline_max_sinr(ChannelState{gamma}, fs, inst_fs, true).serving == std::vector<int>{0, 2, 1});
}

TEST_CASE("max-SINR spills excess users to the next-strongest BS with room") {
  // Threshold 1e6 with gamma 3 on BS 0 means 0.5 MHz each; BS 0 fits two.
  const Matrix gamma = rows_of({{3.0, 1.0}, {3.0, 1.0}, {3.0, 1.0}});
  const auto inst = instance(gamma, all_feasible(3, 2), {1e6, 4e6}, EtaModel{}, 0.95, 1e6);
  const auto a = baseline_max_sinr(ChannelState{gamma}, all_feasible(3, 2), inst);
  CHECK(std::count(a.serving.begin(), a.serving.end(), 0) == 2);
  CHECK(std::count(a.serving.begin(), a.serving.end(), 1) == 1);
  CHECK(check_association(a, inst).empty());
}

TEST_CASE("even split") {
  const Matrix gamma(4, 1, 100.0);
  const auto inst = instance(gamma, all_feasible(4, 1), {2e6});
  const auto alloc = baseline_ba(Association{{0, 0, 0, 0}}, inst, BandwidthMode::kEven);
  for (std::size_t i = 0; i < 4; ++i) CHECK(alloc.n(i, 0) == doctest::Approx(5e5).epsilon(1e-12));
}

TEST_CASE("water-filling") {
  const std::vector<double> c_same = {3e4, 3e4, 3e4};
  const std::vector<double> floor_same = {1e4, 1e4, 1e4};
  for (double v : waterfill(c_same, floor_same, 3e5)) CHECK(v == doctest::Approx(1e5).epsilon(1e-9));

  const std::vector<double> c = {2e6, 2e5};
  const std::vector<double> floors = {5e4, 2e4};
  const double total = 1e6;
  const auto n = waterfill(c, floors, total);
  CHECK(n[0] + n[1] == doctest::Approx(total).epsilon(1e-12));
  auto f = [&](double a) { return waterfill_utility(a, c[0]) + waterfill_utility(total - a, c[1]); };
  const double best = oracle::grid_argmax(f, floors[0], total - floors[1]);
  CHECK(std::abs(n[0] - best) <= 1e-4 * total);
  CHECK(n[1] >= floors[1]);
  CHECK(waterfill_utility(1e5, 3e5) == doctest::Approx(1e5 * std::log2(4.0)));
}

TEST_CASE("water-filling respects binding floors") {
  const std::vector<double> c = {1e7, 1e3};
  const std::vector<double> floors = {1e4, 3e5};
  const auto n = waterfill(c, floors, 5e5);
  CHECK(n[1] == doctest::Approx(3e5));
  CHECK(n[0] == doctest::Approx(2e5));
}

TEST_CASE("pipeline outputs are feasible and reproducible") {
  ScenarioConfig config;
  config.topology.num_mus = 120;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = build_scenario(config, seed);
    const auto a = solve_two_stage(s.instance);
    const auto b = solve_two_stage(s.instance);
    CHECK(a.association.serving == b.association.serving);
    CHECK(a.allocation.n == b.allocation.n);
    CHECK(check_association(a.association, s.instance) == "");
    CHECK(check_allocation(a.association, a.allocation, s.instance) == "");
    for (const auto mode : {BandwidthMode::kEven, BandwidthMode::kWaterfill}) {
      const auto assoc = baseline_max_sinr(s.channel, s.feasible, s.instance, true);
      CHECK(check_association(assoc, s.instance) == "");
      CHECK(check_allocation(assoc, baseline_ba(assoc, s.instance, mode), s.instance) == "");
    }
  }
}

TEST_CASE("feasibility checks catch violations") {
  const auto inst = instance(rows_of({{3.0, 3.0}, {3.0, 3.0}}), FeasibleSets{{{0}, {0, 1}}}, {9e3, 1e6});
  CHECK_FALSE(check_association(Association{{1, 1}}, inst).empty());
  CHECK(check_association(Association{{1, 1}}, inst, false).empty());
  CHECK_FALSE(check_association(Association{{0, 0}}, inst).empty());
  Allocation alloc{Matrix(2, 2), {0.0, 0.0}, 0};
  alloc.n(0, 0) = 1e3;  // below the minimum bandwidth
  alloc.n(1, 1) = 1e6;
  CHECK_FALSE(check_allocation(Association{{0, 1}}, alloc, inst).empty());
}

}  // TEST_SUITE
