#ifndef PLASTHOM_CELL_HPP
#define PLASTHOM_CELL_HPP

#include <cmath>
#include <string>
#include <vector>

#include "plasthom/energy.hpp"
#include "plasthom/errors.hpp"
#include "plasthom/grid.hpp"
#include "plasthom/lbfgs.hpp"
#include "plasthom/materials.hpp"
#include "plasthom/reduce.hpp"

namespace plasthom {

struct OptimizerConfig {
  int max_iterations = 2000;
  double grad_tol = 1e-10;
  double f_rel_tol = 1e-13;
  double armijo_c = 1e-4;
  double backtrack = 0.5;

  MinimizeOptions to_minimize_options() const {
    MinimizeOptions m;
    m.max_iterations = max_iterations;
    m.grad_tol = grad_tol;
    m.f_rel_tol = f_rel_tol;
    m.armijo_c = armijo_c;
    m.backtrack = backtrack;
    return m;
  }
};

struct CellProblemConfig {
  std::vector<double> lambda_ladder{1.0, 2.0, 4.0};
  int resolution = 8;  // cells per unit length
  int dimension = 2;   // grid dimension of the solve
  OptimizerConfig optimizer;

  void validate() const {
    if (lambda_ladder.empty()) {
      throw ConfigError("CellProblemConfig: empty lambda ladder");
    }
    for (std::size_t i = 0; i < lambda_ladder.size(); ++i) {
      if (!(lambda_ladder[i] > 0.0)) {
        throw ConfigError("CellProblemConfig: lambda values must be > 0");
      }
      if (i > 0 && !(lambda_ladder[i] > lambda_ladder[i - 1])) {
        throw ConfigError("CellProblemConfig: lambda ladder must be "
                          "strictly increasing");
      }
    }
    if (resolution < 8) {
      throw ConfigError("CellProblemConfig: resolution >= 8 per unit length");
    }
    if (dimension != 2 && dimension != 3) {
      throw ConfigError("CellProblemConfig: dimension 2 or 3");
    }
  }
};

struct WhomCellResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  DeformationField minimizer;  // fluctuation (zero boundary), d comps/node
  GridDomain domain;
};

namespace detail {

// Interior-node DOF map for zero-Dirichlet fluctuations: dof[node] is the
// index into the unknown vector, or -1 on the boundary.
inline std::vector<long> interior_dof_map(const GridDomain& dom,
                                          std::size_t& dof_count) {
  std::vector<long> map(dom.node_count(), -1);
  long next = 0;
  for (int k = 0; k < dom.nodes(2); ++k) {
    for (int j = 0; j < dom.nodes(1); ++j) {
      for (int i = 0; i < dom.nodes(0); ++i) {
        if (!dom.node_on_boundary(i, j, k)) {
          map[dom.node_index(i, j, k)] = next++;
        }
      }
    }
  }
  dof_count = static_cast<std::size_t>(next);
  return map;
}

}  // namespace detail

// One rung of the asymptotic cell formula:
//   (1/lambda^d) inf { int_{(0,lambda)^d} W(x, (F + grad y) G^{-1}) dx :
//                      y zero on the boundary }.
// The fluctuation gradient embeds with zeros outside the leading d-block, so
// a general 3x3 macroscopic F passes through the integrand unchanged.
// First-order minimization with backtracking line search on the analytic
// gradient, started at y = 0; the start value is the y = 0 upper bound, so
// the result can never exceed it.
inline WhomCellResult whom_cell_full(const MaterialModel& model, const Mat3& F,
                                     const SL3Element& G, double lambda,
                                     const CellProblemConfig& config) {
  config.validate();
  if (!model.K().contains(G)) {
    throw OutsideK("whom_cell: G outside K (radius " +
                   std::to_string(model.H().k_radius) + ")");
  }
  const int d = config.dimension;
  const int cells_per_axis =
      static_cast<int>(std::lround(lambda * config.resolution));
  if (cells_per_axis < 2) {
    throw ConfigError("whom_cell: lambda * resolution must be >= 2");
  }
  const GridDomain dom = GridDomain::cube(d, lambda, cells_per_axis);
  const Mat3 Ginv = inverse(G.m);
  const Mat3 GinvT = transpose(Ginv);
  const double vol = dom.cell_volume();

  std::size_t dof_count = 0;
  const std::vector<long> dof = detail::interior_dof_map(dom, dof_count);

  // Full nodal scratch field (boundary stays zero).
  std::vector<double> fluct(dom.node_count() * static_cast<std::size_t>(d),
                            0.0);
  auto load = [&](const std::vector<double>& x) {
    for (std::size_t n = 0; n < dof.size(); ++n) {
      if (dof[n] < 0) continue;
      for (int c = 0; c < d; ++c) {
        fluct[n * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] =
            x[static_cast<std::size_t>(dof[n]) * d +
              static_cast<std::size_t>(c)];
      }
    }
  };

  std::size_t corners[8];
  double vals[8];
  double gradc[3];
  std::vector<double> full_grad;
  auto objective = [&](const std::vector<double>& x,
                       std::vector<double>* grad) -> double {
    load(x);
    if (grad != nullptr) {
      full_grad.assign(fluct.size(), 0.0);
    }
    KahanSum sum;
    for (int k = 0; k < dom.cells(2); ++k) {
      for (int j = 0; j < dom.cells(1); ++j) {
        for (int i = 0; i < dom.cells(0); ++i) {
          const int count = gridd::cell_corners(dom, i, j, k, corners);
          Mat3 A = F;
          for (int c = 0; c < d; ++c) {
            for (int n = 0; n < count; ++n) {
              vals[n] = fluct[corners[n] * static_cast<std::size_t>(d) +
                              static_cast<std::size_t>(c)];
            }
            gridd::cell_gradient(dom, vals, gradc);
            for (int a = 0; a < d; ++a) A(c, a) += gradc[a];
          }
          const Vec3 z = dom.cell_center(i, j, k);
          sum.add(model.W().value(z, A * Ginv) * vol);
          if (grad != nullptr) {
            const Mat3 S = model.W().grad(z, A * Ginv) * GinvT;
            for (int n = 0; n < count; ++n) {
              const std::size_t base =
                  corners[n] * static_cast<std::size_t>(d);
              for (int c = 0; c < d; ++c) {
                double acc = 0.0;
                for (int a = 0; a < d; ++a) {
                  acc += S(c, a) * gridd::corner_weight(dom, n, a);
                }
                full_grad[base + static_cast<std::size_t>(c)] += acc * vol;
              }
            }
          }
        }
      }
    }
    if (grad != nullptr) {
      grad->assign(x.size(), 0.0);
      for (std::size_t n = 0; n < dof.size(); ++n) {
        if (dof[n] < 0) continue;
        for (int c = 0; c < d; ++c) {
          (*grad)[static_cast<std::size_t>(dof[n]) * d +
                  static_cast<std::size_t>(c)] =
              full_grad[n * static_cast<std::size_t>(d) +
                        static_cast<std::size_t>(c)];
        }
      }
    }
    return sum.value();
  };

  std::vector<double> x(dof_count * static_cast<std::size_t>(d), 0.0);
  auto no_projection = [](std::vector<double>&) {};
  const MinimizeResult res =
      minimize(x, objective, no_projection, config.optimizer.to_minimize_options());
  if (!res.converged) {
    throw NoConvergence("whom_cell: optimizer cap " +
                        std::to_string(config.optimizer.max_iterations) +
                        " exceeded with gradient above tolerance");
  }

  WhomCellResult out;
  double measure = 1.0;
  for (int a = 0; a < d; ++a) measure *= lambda;
  out.value = res.value / measure;
  out.iterations = res.iterations;
  out.converged = res.converged;
  load(x);
  out.minimizer.y = fluct;
  out.domain = dom;
  return out;
}

inline double whom_cell(const MaterialModel& model, const Mat3& F,
                        const SL3Element& G, double lambda,
                        const CellProblemConfig& config) {
  return whom_cell_full(model, F, G, lambda, config).value;
}

// ---------------------------------------------------------------------------
// Ladder driver.
// ---------------------------------------------------------------------------

struct WhomResult {
  std::vector<double> lambdas;
  std::vector<double> values;
  std::vector<int> iterations;
  std::vector<char> converged;
  double extrapolated = 0.0;  // Aitken limit of the tail (last rung if flat)
  double spread = 0.0;        // relative gap between the last two rungs
  DeformationField minimizer;  // fluctuation at the largest lambda
  GridDomain minimizer_domain;
};

// The zero-boundary cube overestimates the limit by a boundary layer that
// decays geometrically along a doubling ladder; Aitken's delta-squared on
// the last three rungs removes the leading term. Flat, short, or
// non-contracting tails keep the raw last value. Precondition: non-empty.
inline double aitken_tail(const std::vector<double>& values) {
  double out = values.back();
  if (values.size() < 3) return out;
  const std::size_t k = values.size();
  const double d1 = values[k - 2] - values[k - 3];
  const double d2 = values[k - 1] - values[k - 2];
  const double scale = 1.0 + std::abs(out);
  if (std::abs(d1) > 1e-12 * scale && std::abs(d2) > 1e-14 * scale &&
      d1 * d2 > 0.0) {
    const double rho = d2 / d1;
    if (rho > 0.0 && rho <= 0.9) out += d2 * rho / (1.0 - rho);
  }
  return out;
}

inline WhomResult whom(const MaterialModel& model, const Mat3& F,
                       const SL3Element& G, const CellProblemConfig& config) {
  config.validate();
  WhomResult out;
  for (double lambda : config.lambda_ladder) {
    WhomCellResult rung = whom_cell_full(model, F, G, lambda, config);
    out.lambdas.push_back(lambda);
    out.values.push_back(rung.value);
    out.iterations.push_back(rung.iterations);
    out.converged.push_back(rung.converged ? 1 : 0);
    if (lambda == config.lambda_ladder.back()) {
      out.minimizer = std::move(rung.minimizer);
      out.minimizer_domain = rung.domain;
    }
  }
  out.extrapolated = aitken_tail(out.values);
  if (out.values.size() >= 2) {
    const double last = out.values.back();
    const double prev = out.values[out.values.size() - 2];
    out.spread = std::abs(last - prev) / std::max(std::abs(last), 1e-30);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scalar 1-d reduction of the laminate cell problem: minimizes
//   (1/lambda) int_0^lambda w(x) (F + u')^2 dx,  u(0) = u(lambda) = 0,
// on a uniform grid. Classical oracle: the harmonic mean of w times F^2,
// reached exactly on phase-aligned grids with integer lambda.
// ---------------------------------------------------------------------------

inline double whom_scalar_1d(const WeightField& w, double F, double lambda,
                             int resolution,
                             const OptimizerConfig& opt = {}) {
  if (!(lambda > 0.0)) throw ConfigError("whom_scalar_1d: lambda > 0");
  if (resolution < 8) throw ConfigError("whom_scalar_1d: resolution >= 8");
  const int cells = static_cast<int>(std::lround(lambda * resolution));
  const double h = lambda / cells;
  std::vector<double> wc(static_cast<std::size_t>(cells));
  for (int i = 0; i < cells; ++i) {
    wc[i] = w.at(Vec3{(i + 0.5) * h, 0.0, 0.0});
  }
  // Unknowns: interior node values u_1..u_{cells-1}.
  auto objective = [&](const std::vector<double>& u,
                       std::vector<double>* grad) -> double {
    if (grad != nullptr) grad->assign(u.size(), 0.0);
    KahanSum sum;
    for (int i = 0; i < cells; ++i) {
      const double left = i == 0 ? 0.0 : u[static_cast<std::size_t>(i - 1)];
      const double right =
          i == cells - 1 ? 0.0 : u[static_cast<std::size_t>(i)];
      const double g = F + (right - left) / h;
      sum.add(wc[i] * g * g * h);
      if (grad != nullptr) {
        const double dg = 2.0 * wc[i] * g;  // d/d(right) of w g^2 h is dg
        if (i > 0) (*grad)[static_cast<std::size_t>(i - 1)] -= dg;
        if (i < cells - 1) (*grad)[static_cast<std::size_t>(i)] += dg;
      }
    }
    return sum.value();
  };
  std::vector<double> u(static_cast<std::size_t>(cells - 1), 0.0);
  auto no_projection = [](std::vector<double>&) {};
  const MinimizeResult res =
      minimize(u, objective, no_projection, opt.to_minimize_options());
  if (!res.converged) {
    throw NoConvergence("whom_scalar_1d: optimizer cap exceeded");
  }
  return res.value / lambda;
}

// ---------------------------------------------------------------------------
// Homogenized hardening: the plain unit-cell average of H(z, F).
// ---------------------------------------------------------------------------

inline double hhom(const MaterialModel& model, const SL3Element& F,
                   int resolution = 64) {
  if (resolution < 2) throw ConfigError("hhom: resolution >= 2");
  if (!model.K().contains(F)) {
    throw OutsideK("hhom: F outside K (radius " +
                   std::to_string(model.H().k_radius) + ")");
  }
  const Mat3 dF = F.m - Mat3::identity();
  const double dist2 = frobenius_inner(dF, dF);
  // Midpoint quadrature of the weight over [0,1)^3; exact when phase
  // boundaries are grid-aligned.
  KahanSum sum;
  const double h = 1.0 / resolution;
  for (int k = 0; k < resolution; ++k) {
    for (int j = 0; j < resolution; ++j) {
      for (int i = 0; i < resolution; ++i) {
        sum.add(model.H().weight.at(
            Vec3{(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h}));
      }
    }
  }
  const double mean_weight =
      sum.value() / (static_cast<double>(resolution) * resolution * resolution);
  return mean_weight * dist2;
}

}  // namespace plasthom

#endif
