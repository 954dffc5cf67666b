#ifndef PLASTHOM_LBFGS_HPP
#define PLASTHOM_LBFGS_HPP

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <string>
#include <vector>

namespace plasthom {

// First-order minimization with Armijo backtracking. memory = 0 degrades to
// plain gradient descent; memory > 0 adds the L-BFGS two-loop direction
// (still gradient-only). A feasibility projection hook runs after every
// trial step so iterates stay on the constraint set.
struct MinimizeOptions {
  int max_iterations = 10000;
  int memory = 8;
  double grad_tol = 1e-12;      // on ||g||_inf relative to 1 + |f|
  double f_rel_tol = 1e-12;     // relative decrease per accepted step
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int ls_max_steps = 48;
  double initial_step = 1.0;
};

struct MinimizeResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Eval: double(const std::vector<double>& x, std::vector<double>* grad);
//       grad == nullptr requests a value-only evaluation; +inf means
//       infeasible (the line search backs off).
// Project: void(std::vector<double>& x); retraction onto the feasible set.
template <typename Eval, typename Project>
MinimizeResult minimize(std::vector<double>& x, Eval&& eval, Project&& project,
                        const MinimizeOptions& opts = {}) {
  const std::size_t n = x.size();
  const double inf = std::numeric_limits<double>::infinity();

  project(x);
  std::vector<double> g(n, 0.0);
  double f = eval(x, &g);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  MinimizeResult res;
  res.value = f;
  if (n == 0) {
    res.converged = true;
    return res;
  }

  std::vector<double> d(n), x_new(n), g_new(n);
  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it + 1;

    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax <= opts.grad_tol * (1.0 + std::abs(f))) {
      res.converged = true;
      break;
    }

    // Two-loop recursion on the stored curvature pairs.
    d = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      double sd = 0.0;
      for (std::size_t i = 0; i < n; ++i) sd += s_hist[k][i] * d[i];
      alpha[k] = rho_hist[k] * sd;
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      double yy = 0.0, sy = 0.0;
      const auto& sl = s_hist.back();
      const auto& yl = y_hist.back();
      for (std::size_t i = 0; i < n; ++i) {
        yy += yl[i] * yl[i];
        sy += sl[i] * yl[i];
      }
      const double scale = (yy > 0.0) ? sy / yy : 1.0;
      for (double& v : d) v *= scale;
      for (std::size_t k = 0; k < s_hist.size(); ++k) {
        double yd = 0.0;
        for (std::size_t i = 0; i < n; ++i) yd += y_hist[k][i] * d[i];
        const double beta = rho_hist[k] * yd;
        for (std::size_t i = 0; i < n; ++i)
          d[i] += (alpha[k] - beta) * s_hist[k][i];
      }
    }
    for (double& v : d) v = -v;

    double dg = 0.0;
    for (std::size_t i = 0; i < n; ++i) dg += d[i] * g[i];
    if (!(dg < 0.0)) {
      // Not a descent direction (stale curvature); fall back to steepest.
      dg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = -g[i];
        dg -= g[i] * g[i];
      }
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Armijo backtracking with projection inside the trial.
    double step = s_hist.empty() ? opts.initial_step /
                                       std::max(1.0, std::sqrt(-dg))
                                 : opts.initial_step;
    double f_new = inf;
    bool accepted = false;
    for (int ls = 0; ls < opts.ls_max_steps; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      project(x_new);
      f_new = eval(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= f + opts.armijo_c * step * dg) {
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) {
      // No further progress measurable in double precision.
      res.converged = true;
      break;
    }

    f_new = eval(x_new, &g_new);

    std::vector<double> s_vec(n), y_vec(n);
    double sy = 0.0, ss = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s_vec[i] = x_new[i] - x[i];
      y_vec[i] = g_new[i] - g[i];
      sy += s_vec[i] * y_vec[i];
      ss += s_vec[i] * s_vec[i];
      yy += y_vec[i] * y_vec[i];
    }
    if (opts.memory > 0 && sy > 1e-12 * std::sqrt(ss * yy)) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double decrease = f - f_new;
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    res.value = f;
    if (decrease <= opts.f_rel_tol * (std::abs(f) + 1e-30)) {
      res.converged = true;
      break;
    }
  }
  res.value = f;
  return res;
}

}  // namespace plasthom

#endif
