#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace semnet::detail {

struct AscentOptions {
  double tol = 1e-6;
  int max_iterations = 10000;
  double initial_step = 1.0;
  double armijo = 1e-4;
};

struct AscentResult {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool stalled = false;  // no improving step found before tol was met
};

// Monotone projected gradient ascent with Barzilai-Borwein step proposals and
// Armijo backtracking along the projection arc. `value` may return -inf to
// reject points outside the domain. Stops when `residual(x, g) <= tol`, when
// no step of representable size improves the objective, or at the cap.
template <class Value, class Grad, class Project, class Residual>
AscentResult projected_ascent(std::vector<double>& x, Value&& value, Grad&& grad,
                              Project&& project, Residual&& residual,
                              const AscentOptions& opt) {
  AscentResult out;
  double f = value(x);
  std::vector<double> g = grad(x);
  out.residual = residual(x, g);
  if (out.residual <= opt.tol) {
    out.converged = true;
    return out;
  }

  double step = opt.initial_step;
  std::vector<double> trial(x.size());
  for (out.iterations = 0; out.iterations < opt.max_iterations;) {
    bool accepted = false;
    double f_trial = f;
    for (int backtrack = 0; backtrack < 80; ++backtrack) {
      for (std::size_t k = 0; k < x.size(); ++k) trial[k] = x[k] + step * g[k];
      project(trial);
      double ascent = 0.0;
      double moved = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = trial[k] - x[k];
        ascent += g[k] * d;
        moved = std::max(moved, std::abs(d));
      }
      if (moved == 0.0) break;
      f_trial = value(trial);
      if (std::isfinite(f_trial) && f_trial >= f + opt.armijo * ascent) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++out.iterations;
    if (!accepted) {
      out.stalled = true;
      break;
    }

    std::vector<double> g_trial = grad(trial);
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double s = trial[k] - x[k];
      ss += s * s;
      sy += s * (g_trial[k] - g[k]);
    }
    // Ascent on a concave function: sy <= 0 along the step.
    step = sy < 0.0 ? ss / -sy : step * 4.0;
    step = std::clamp(step, 1e-300, 1e300);

    x.swap(trial);
    g.swap(g_trial);
    f = f_trial;
    out.residual = residual(x, g);
    if (out.residual <= opt.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace semnet::detail
