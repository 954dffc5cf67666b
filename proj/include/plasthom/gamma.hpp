#ifndef PLASTHOM_GAMMA_HPP
#define PLASTHOM_GAMMA_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "plasthom/cell.hpp"
#include "plasthom/energy.hpp"
#include "plasthom/errors.hpp"
#include "plasthom/grid.hpp"
#include "plasthom/lbfgs.hpp"
#include "plasthom/log.hpp"
#include "plasthom/materials.hpp"
#include "plasthom/reduce.hpp"

namespace plasthom {

// ---------------------------------------------------------------------------
// Experiment configuration.
// ---------------------------------------------------------------------------

enum class PlasticMode {
  PinnedIdentity,  // P == I everywhere (classical elastic row)
  FixedBoundary,   // boundary nodes = P_bc, interior nodes free in K
  Free,            // every node free in K
};

struct ExperimentConfig {
  MaterialModel model;
  int dimension = 2;
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  Mat3 F_bc = Mat3::identity();
  Vec3 b_bc{0.0, 0.0, 0.0};
  SL3Element P_bc;
  PlasticMode p_mode = PlasticMode::PinnedIdentity;
  std::vector<double> eps_ladder{0.5, 0.25, 0.125};
  int resolution_per_eps = 8;  // cells per eps period
  int hom_resolution = 8;      // cells per unit length of the F_hom grid
  std::uint64_t seed = 1;
  OptimizerConfig optimizer;
  int max_alternations = 60;
  double alt_rel_tol = 1e-8;
  CellProblemConfig cell;  // drives the W_hom table construction
  int table_points = 3;    // knots per active F entry (odd, centered at F_bc)
  double table_margin = 0.5;
  int jobs = 1;

  explicit ExperimentConfig(MaterialModel m) : model(std::move(m)) {}

  void validate() const {
    if (dimension != 2 && dimension != 3) {
      throw ConfigError("ExperimentConfig: dimension 2 or 3");
    }
    if (eps_ladder.empty()) throw ConfigError("ExperimentConfig: empty ladder");
    for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
      const double eps = eps_ladder[i];
      if (!(eps > 0.0)) throw ConfigError("ExperimentConfig: eps > 0");
      if (i > 0 && !(eps < eps_ladder[i - 1])) {
        throw ConfigError("ExperimentConfig: ladder strictly decreasing");
      }
      check_commensurable(eps);
    }
    if (resolution_per_eps < 8) {
      throw ConfigError("ExperimentConfig: >= 8 cells per eps period");
    }
    if (table_points < 1 || table_points % 2 == 0) {
      throw ConfigError("ExperimentConfig: table_points odd and >= 1");
    }
    if (!(table_margin > 0.0)) {
      throw ConfigError("ExperimentConfig: table margin > 0");
    }
  }

  void check_commensurable(double eps) const {
    for (int a = 0; a < dimension; ++a) {
      const double periods = extent[static_cast<std::size_t>(a)] / eps;
      if (std::abs(periods - std::round(periods)) > 1e-9) {
        throw ConfigError("ExperimentConfig: eps = " + std::to_string(eps) +
                          " must divide the domain extent");
      }
    }
  }

  GridDomain grid_for_eps(double eps) const {
    std::array<int, 3> cells{1, 1, 1};
    for (int a = 0; a < dimension; ++a) {
      const double periods = extent[static_cast<std::size_t>(a)] / eps;
      cells[static_cast<std::size_t>(a)] =
          static_cast<int>(std::lround(periods)) * resolution_per_eps;
    }
    return GridDomain::box(dimension, origin, extent, cells);
  }

  GridDomain grid_for_hom() const {
    std::array<int, 3> cells{1, 1, 1};
    for (int a = 0; a < dimension; ++a) {
      cells[static_cast<std::size_t>(a)] = std::max(
          2, static_cast<int>(std::lround(
                 extent[static_cast<std::size_t>(a)] * hom_resolution)));
    }
    return GridDomain::box(dimension, origin, extent, cells);
  }
};

// ---------------------------------------------------------------------------
// W_hom sample table: multilinear in the active F entries and in
// log-coordinates of G. Single-knot axes are fixed coordinates; querying
// outside any axis range (or off a fixed coordinate) throws TableOutOfRange
// — never silent extrapolation.
// ---------------------------------------------------------------------------

namespace detail {

// Log-coordinates of G in the orthonormal sl(3) basis.
inline std::array<double, 8> log_coords(const SL3Element& G) {
  const Mat3 L = mat_log(G.m);
  std::array<double, 8> c{};
  for (int i = 0; i < 8; ++i) {
    c[static_cast<std::size_t>(i)] =
        frobenius_inner(L, sl3_basis()[static_cast<std::size_t>(i)]);
  }
  return c;
}

inline SL3Element from_log_coords(const std::array<double, 8>& c) {
  Mat3 L = Mat3::zero();
  for (int i = 0; i < 8; ++i) {
    L = L + sl3_basis()[static_cast<std::size_t>(i)] *
                c[static_cast<std::size_t>(i)];
  }
  return SL3Element::retracted(mat_exp(L));
}

}  // namespace detail

class WhomTable {
 public:
  struct Axis {
    bool is_F = true;
    int row = 0, col = 0;   // F entry when is_F
    int g_index = 0;        // sl(3) basis index when !is_F
    std::vector<double> knots;  // strictly increasing
  };

  // Knot layout around the boundary data: every active F entry gets
  // `points` knots centered at F_bc(r,c) with half-width
  // margin * (1 + |F_bc(r,c)|); G is fixed to the single knot G_center.
  static WhomTable build(const MaterialModel& model, const Mat3& F_center,
                         const SL3Element& G_center, int d, int points,
                         double margin, const CellProblemConfig& cell,
                         int jobs = 1) {
    WhomTable t;
    t.F_template_ = F_center;
    t.G_center_ = G_center;
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        Axis ax;
        ax.is_F = true;
        ax.row = r;
        ax.col = c;
        const double center = F_center(r, c);
        const double half = margin * (1.0 + std::abs(center));
        if (points == 1) {
          ax.knots = {center};
        } else {
          for (int p = 0; p < points; ++p) {
            ax.knots.push_back(center - half +
                               2.0 * half * p / (points - 1));
          }
        }
        t.axes_.push_back(std::move(ax));
      }
    }
    t.g_center_coords_ = detail::log_coords(G_center);
    t.sample(model, cell, jobs);
    return t;
  }

  double value(const Mat3& F, const SL3Element& G) const {
    std::vector<double> coords = locate(F, G);
    return interpolate(coords, nullptr);
  }

  // Gradient with respect to the active F entries, embedded into a Mat3.
  Mat3 grad_F(const Mat3& F, const SL3Element& G) const {
    std::vector<double> coords = locate(F, G);
    std::vector<double> partials(axes_.size(), 0.0);
    interpolate(coords, &partials);
    Mat3 g = Mat3::zero();
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      if (axes_[a].is_F) g(axes_[a].row, axes_[a].col) = partials[a];
    }
    return g;
  }

  std::size_t sample_count() const { return values_.size(); }

 private:
  std::vector<Axis> axes_;
  std::vector<double> values_;
  Mat3 F_template_ = Mat3::identity();
  SL3Element G_center_;
  std::array<double, 8> g_center_coords_{};

  void sample(const MaterialModel& model, const CellProblemConfig& cell,
              int jobs) {
    std::size_t total = 1;
    for (const Axis& ax : axes_) total *= ax.knots.size();
    values_.assign(total, 0.0);
    parallel_for(total, jobs, [&](std::size_t flat) {
      std::size_t rest = flat;
      Mat3 F = F_template_;
      for (const Axis& ax : axes_) {
        const std::size_t i = rest % ax.knots.size();
        rest /= ax.knots.size();
        if (ax.is_F) F(ax.row, ax.col) = ax.knots[i];
      }
      values_[flat] = whom(model, F, G_center_, cell).extrapolated;
    });
  }

  // Per-axis continuous coordinates (knot-interval position); throws
  // TableOutOfRange outside the box or off fixed coordinates.
  std::vector<double> locate(const Mat3& F, const SL3Element& G) const {
    // Fixed F entries (those without an axis) must match the template.
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        bool has_axis = false;
        for (const Axis& ax : axes_) {
          if (ax.is_F && ax.row == r && ax.col == c) {
            has_axis = true;
            break;
          }
        }
        if (!has_axis &&
            std::abs(F(r, c) - F_template_(r, c)) > 1e-9) {
          throw TableOutOfRange(
              "WhomTable: fixed F entry (" + std::to_string(r) + "," +
              std::to_string(c) + ") off the tabulated value");
        }
      }
    }
    const std::array<double, 8> gc = detail::log_coords(G);
    for (int i = 0; i < 8; ++i) {
      if (std::abs(gc[i] - g_center_coords_[i]) > 1e-7) {
        throw TableOutOfRange(
            "WhomTable: G off the tabulated log-coordinate slice");
      }
    }
    std::vector<double> coords(axes_.size(), 0.0);
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      const Axis& ax = axes_[a];
      const double x = F(ax.row, ax.col);
      const double lo = ax.knots.front(), hi = ax.knots.back();
      if (x < lo - 1e-12 || x > hi + 1e-12) {
        throw TableOutOfRange("WhomTable: F entry (" + std::to_string(ax.row) +
                              "," + std::to_string(ax.col) + ") = " +
                              std::to_string(x) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) +
                              "]");
      }
      coords[a] = std::clamp(x, lo, hi);
    }
    return coords;
  }

  double interpolate(const std::vector<double>& coords,
                     std::vector<double>* partials) const {
    // Per axis: lower knot index and local weight.
    std::vector<std::size_t> base(axes_.size(), 0);
    std::vector<double> w(axes_.size(), 0.0);
    std::vector<double> width(axes_.size(), 1.0);
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      const std::vector<double>& kn = axes_[a].knots;
      if (kn.size() == 1) {
        base[a] = 0;
        w[a] = 0.0;
        width[a] = 1.0;
        continue;
      }
      std::size_t i =
          static_cast<std::size_t>(std::upper_bound(kn.begin(), kn.end(),
                                                    coords[a]) -
                                   kn.begin());
      if (i == 0) i = 1;
      if (i >= kn.size()) i = kn.size() - 1;
      base[a] = i - 1;
      width[a] = kn[i] - kn[i - 1];
      w[a] = (coords[a] - kn[i - 1]) / width[a];
    }
    const std::size_t n_axes = axes_.size();
    const std::size_t corners = static_cast<std::size_t>(1) << n_axes;
    double total = 0.0;
    if (partials != nullptr) partials->assign(n_axes, 0.0);
    for (std::size_t corner = 0; corner < corners; ++corner) {
      double weight = 1.0;
      std::size_t flat = 0;
      std::size_t stride = 1;
      bool skip = false;
      for (std::size_t a = 0; a < n_axes; ++a) {
        const bool up = (corner >> a) & 1;
        const std::size_t count = axes_[a].knots.size();
        if (up && count == 1) {
          skip = true;
          break;
        }
        weight *= up ? w[a] : 1.0 - w[a];
        flat += (base[a] + (up ? 1 : 0)) * stride;
        stride *= count;
      }
      if (skip) continue;
      const double v = values_[flat];
      total += weight * v;
      if (partials != nullptr) {
        for (std::size_t a = 0; a < n_axes; ++a) {
          if (axes_[a].knots.size() == 1) continue;
          double dw = 1.0;
          for (std::size_t b = 0; b < n_axes; ++b) {
            const bool up = (corner >> b) & 1;
            if (b == a) {
              dw *= (up ? 1.0 : -1.0) / width[b];
            } else {
              dw *= up ? w[b] : 1.0 - w[b];
            }
          }
          (*partials)[a] += dw * v;
        }
      }
    }
    return total;
  }
};

// ---------------------------------------------------------------------------
// Alternating minimization of F_eps.
// ---------------------------------------------------------------------------

struct FieldsResult {
  DeformationField y;
  PlasticField P;
  GridDomain domain;
  double value = 0.0;
  EnergyBreakdown breakdown;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// dE/dP for the discretized functional: elastic pull-back, hardening, and
// the q-regularization, all scattered through the cell-center stencils.
inline std::vector<double> plastic_gradient(const MaterialModel& model,
                                            double eps,
                                            const DeformationField& y,
                                            const PlasticField& P,
                                            const GridDomain& dom) {
  const int d = dom.dimension();
  const double vol = dom.cell_volume();
  const double q = model.q();
  const double inv_eps = 1.0 / eps;
  std::vector<double> grad(P.P.size() * 9, 0.0);
  std::size_t corners[8];
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int j = 0; j < dom.cells(1); ++j) {
      for (int i = 0; i < dom.cells(0); ++i) {
        const std::size_t idx = dom.cell_index(i, j, k);
        if (!dom.cell_active(idx)) continue;
        const int count = gridd::cell_corners(dom, i, j, k, corners);
        const Vec3 center = dom.cell_center(i, j, k);
        const Vec3 z{center[0] * inv_eps, center[1] * inv_eps,
                     center[2] * inv_eps};
        const Mat3 Pbar = cell_plastic_average(dom, P, i, j, k);
        const Mat3 B = inverse(Pbar);
        const Mat3 G = cell_deformation_gradient(dom, y, i, j, k);
        const Mat3 S = model.W().grad(z, G * B);
        // dW/dPbar = -B^T G^T S B^T
        const Mat3 dW = transpose(B) * transpose(G) * S * transpose(B) * -1.0;
        const Mat3 dH = (Pbar - Mat3::identity()) *
                        (2.0 * model.H().weight.at(z));
        const Mat3 cell_centered = (dW + dH) * vol;
        const double avg_w = 1.0 / count;
        for (int n = 0; n < count; ++n) {
          for (int e = 0; e < 9; ++e) {
            grad[corners[n] * 9 + static_cast<std::size_t>(e)] +=
                cell_centered.a[e] * avg_w;
          }
        }
        // Regularization: d/d(dP_a) of (sum |dP_a|^2)^{q/2}.
        const double g2 = cell_plastic_gradient_sq(dom, P, i, j, k);
        if (g2 > 0.0) {
          const double factor = q * std::pow(g2, 0.5 * q - 1.0) * vol;
          for (int a = 0; a < d; ++a) {
            const double scale =
                1.0 / (static_cast<double>(count / 2) * dom.spacing(a));
            for (int e = 0; e < 9; ++e) {
              double diff = 0.0;
              for (int n = 0; n < count; ++n) {
                const double v = P.P[corners[n]].a[e];
                diff += (n >> a) & 1 ? v : -v;
              }
              const double dPa = diff * scale;
              for (int n = 0; n < count; ++n) {
                const double wgt = gridd::corner_weight(dom, n, a);
                grad[corners[n] * 9 + static_cast<std::size_t>(e)] +=
                    factor * dPa * wgt;
              }
            }
          }
        }
      }
    }
  }
  return grad;
}

}  // namespace detail

// Alternating minimization of the discretized F_eps under affine boundary
// data for y (zero-Dirichlet fluctuation) and the configured plastic mode.
// NoConvergence is flagged on the result, never thrown: the best-so-far
// fields are always returned.
inline FieldsResult minimize_Feps(const ExperimentConfig& config, double eps) {
  config.check_commensurable(eps);
  if (config.p_mode != PlasticMode::PinnedIdentity &&
      !config.model.K().contains(config.P_bc)) {
    throw OutsideK("minimize_Feps: P_bc outside the hardening domain K");
  }
  const GridDomain dom = config.grid_for_eps(eps);
  const int d = dom.dimension();
  const std::size_t nn = dom.node_count();

  DeformationField y = DeformationField::affine(dom, config.F_bc, config.b_bc);
  PlasticField P = PlasticField::constant(
      dom, config.p_mode == PlasticMode::PinnedIdentity ? SL3Element()
                                                        : config.P_bc);

  std::size_t y_dof_count = 0;
  const std::vector<long> y_dof = detail::interior_dof_map(dom, y_dof_count);

  // P DOF nodes: none (pinned), interior (fixed boundary), all (free).
  std::vector<std::size_t> p_nodes;
  if (config.p_mode != PlasticMode::PinnedIdentity) {
    for (int k = 0; k < dom.nodes(2); ++k) {
      for (int j = 0; j < dom.nodes(1); ++j) {
        for (int i = 0; i < dom.nodes(0); ++i) {
          if (config.p_mode == PlasticMode::Free ||
              !dom.node_on_boundary(i, j, k)) {
            p_nodes.push_back(dom.node_index(i, j, k));
          }
        }
      }
    }
  }

  const DeformationField y_affine = y;
  auto apply_fluct = [&](const std::vector<double>& x) {
    for (std::size_t n = 0; n < nn; ++n) {
      if (y_dof[n] < 0) continue;
      for (int c = 0; c < d; ++c) {
        const std::size_t at =
            n * static_cast<std::size_t>(d) + static_cast<std::size_t>(c);
        y.y[at] = y_affine.y[at] +
                  x[static_cast<std::size_t>(y_dof[n]) * d +
                    static_cast<std::size_t>(c)];
      }
    }
  };

  std::vector<double> y_x(y_dof_count * static_cast<std::size_t>(d), 0.0);

  auto y_objective = [&](const std::vector<double>& x,
                         std::vector<double>* grad) -> double {
    apply_fluct(x);
    const EnergyBreakdown e = energy_total(config.model, eps, y, P, dom);
    if (grad != nullptr) {
      const std::vector<double> full =
          elastic_gradient(config.model, eps, y, P, dom);
      grad->assign(x.size(), 0.0);
      for (std::size_t n = 0; n < nn; ++n) {
        if (y_dof[n] < 0) continue;
        for (int c = 0; c < d; ++c) {
          (*grad)[static_cast<std::size_t>(y_dof[n]) * d +
                  static_cast<std::size_t>(c)] =
              full[n * static_cast<std::size_t>(d) +
                   static_cast<std::size_t>(c)];
        }
      }
    }
    return e.total;
  };

  auto p_objective = [&](const std::vector<double>& x,
                         std::vector<double>* grad) -> double {
    for (std::size_t pi = 0; pi < p_nodes.size(); ++pi) {
      for (int e = 0; e < 9; ++e) {
        P.P[p_nodes[pi]].a[e] = x[pi * 9 + static_cast<std::size_t>(e)];
      }
    }
    const EnergyBreakdown en = energy_total(config.model, eps, y, P, dom);
    if (grad != nullptr) {
      const std::vector<double> full =
          detail::plastic_gradient(config.model, eps, y, P, dom);
      grad->assign(x.size(), 0.0);
      for (std::size_t pi = 0; pi < p_nodes.size(); ++pi) {
        for (int e = 0; e < 9; ++e) {
          (*grad)[pi * 9 + static_cast<std::size_t>(e)] =
              full[p_nodes[pi] * 9 + static_cast<std::size_t>(e)];
        }
      }
    }
    return en.total;
  };
  auto p_project = [&](std::vector<double>& x) {
    for (std::size_t pi = 0; pi < p_nodes.size(); ++pi) {
      Mat3 m;
      for (int e = 0; e < 9; ++e) {
        m.a[e] = x[pi * 9 + static_cast<std::size_t>(e)];
      }
      m = retract_sl3(m);
      for (int e = 0; e < 9; ++e) {
        x[pi * 9 + static_cast<std::size_t>(e)] = m.a[e];
      }
    }
  };
  auto no_projection = [](std::vector<double>&) {};

  FieldsResult result;
  double prev = energy_total(config.model, eps, y, P, dom).total;
  int total_iterations = 0;
  bool converged = false;
  for (int sweep = 0; sweep < config.max_alternations; ++sweep) {
    const MinimizeResult ry = minimize(y_x, y_objective, no_projection,
                                       config.optimizer.to_minimize_options());
    total_iterations += ry.iterations;
    double current = ry.value;
    if (!p_nodes.empty()) {
      std::vector<double> p_x(p_nodes.size() * 9);
      for (std::size_t pi = 0; pi < p_nodes.size(); ++pi) {
        for (int e = 0; e < 9; ++e) {
          p_x[pi * 9 + static_cast<std::size_t>(e)] = P.P[p_nodes[pi]].a[e];
        }
      }
      const MinimizeResult rp =
          minimize(p_x, p_objective, p_project,
                   config.optimizer.to_minimize_options());
      total_iterations += rp.iterations;
      current = rp.value;
    }
    const double decrease = prev - current;
    prev = current;
    if (std::abs(decrease) <
        config.alt_rel_tol * (std::abs(current) + 1e-30)) {
      converged = true;
      break;
    }
  }

  apply_fluct(y_x);
  result.y = y;
  result.P = P;
  result.domain = dom;
  result.breakdown = energy_total(config.model, eps, y, P, dom);
  result.value = result.breakdown.total;
  result.iterations = total_iterations;
  result.converged = converged;
  if (!converged) {
    log_info("minimize_Feps: alternation cap reached at eps = " +
             std::to_string(eps) + ", returning best-so-far");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Minimization of the homogenized functional against the W_hom table.
// ---------------------------------------------------------------------------

// P is constant in the supported modes (pinned identity / fixed P_bc), so
// the homogenized energy is W_hom(F_c, P) summed by quadrature plus the
// constant hardening term; the descent runs over the y fluctuation only.
// Table queries outside the box abort the line-search trial (barrier), and
// the optimizer cannot accept such a point; direct lookups still throw.
inline FieldsResult minimize_Fhom(const ExperimentConfig& config,
                                  const WhomTable& table) {
  config.validate();
  if (config.p_mode == PlasticMode::Free) {
    throw ConfigError("minimize_Fhom: free-P homogenized descent is not "
                      "supported; pin P or fix it on the boundary");
  }
  const SL3Element Pv =
      config.p_mode == PlasticMode::PinnedIdentity ? SL3Element()
                                                   : config.P_bc;
  const GridDomain dom = config.grid_for_hom();
  const int d = dom.dimension();
  const std::size_t nn = dom.node_count();

  const DeformationField y_affine =
      DeformationField::affine(dom, config.F_bc, config.b_bc);
  DeformationField y = y_affine;
  PlasticField P = PlasticField::constant(dom, Pv);

  std::size_t dof_count = 0;
  const std::vector<long> dof = detail::interior_dof_map(dom, dof_count);
  const double vol = dom.cell_volume();
  const double hardening_density = mean_H(config.model, Pv);

  auto apply = [&](const std::vector<double>& x) {
    for (std::size_t n = 0; n < nn; ++n) {
      if (dof[n] < 0) continue;
      for (int c = 0; c < d; ++c) {
        const std::size_t at =
            n * static_cast<std::size_t>(d) + static_cast<std::size_t>(c);
        y.y[at] = y_affine.y[at] +
                  x[static_cast<std::size_t>(dof[n]) * d +
                    static_cast<std::size_t>(c)];
      }
    }
  };

  std::size_t corners[8];
  auto objective = [&](const std::vector<double>& x,
                       std::vector<double>* grad) -> double {
    apply(x);
    std::vector<double> full;
    if (grad != nullptr) full.assign(y.y.size(), 0.0);
    KahanSum sum;
    try {
      for (int k = 0; k < dom.cells(2); ++k) {
        for (int j = 0; j < dom.cells(1); ++j) {
          for (int i = 0; i < dom.cells(0); ++i) {
            if (!dom.cell_active(dom.cell_index(i, j, k))) continue;
            const Mat3 F = cell_deformation_gradient(dom, y, i, j, k);
            sum.add((table.value(F, Pv) + hardening_density) * vol);
            if (grad != nullptr) {
              const Mat3 S = table.grad_F(F, Pv);
              const int count = gridd::cell_corners(dom, i, j, k, corners);
              for (int n = 0; n < count; ++n) {
                const std::size_t base =
                    corners[n] * static_cast<std::size_t>(d);
                for (int c = 0; c < d; ++c) {
                  double acc = 0.0;
                  for (int a = 0; a < d; ++a) {
                    acc += S(c, a) * gridd::corner_weight(dom, n, a);
                  }
                  full[base + static_cast<std::size_t>(c)] += acc * vol;
                }
              }
            }
          }
        }
      }
    } catch (const TableOutOfRange&) {
      return std::numeric_limits<double>::infinity();
    }
    if (grad != nullptr) {
      grad->assign(x.size(), 0.0);
      for (std::size_t n = 0; n < nn; ++n) {
        if (dof[n] < 0) continue;
        for (int c = 0; c < d; ++c) {
          (*grad)[static_cast<std::size_t>(dof[n]) * d +
                  static_cast<std::size_t>(c)] =
              full[n * static_cast<std::size_t>(d) +
                   static_cast<std::size_t>(c)];
        }
      }
    }
    return sum.value();
  };

  std::vector<double> x(dof_count * static_cast<std::size_t>(d), 0.0);
  auto no_projection = [](std::vector<double>&) {};
  const MinimizeResult res = minimize(x, objective, no_projection,
                                      config.optimizer.to_minimize_options());

  apply(x);
  double active_volume = 0.0;
  for (std::size_t ci = 0; ci < dom.cell_count(); ++ci) {
    if (dom.cell_active(ci)) active_volume += vol;
  }
  FieldsResult out;
  out.y = y;
  out.P = P;
  out.domain = dom;
  out.value = res.value;
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.breakdown.elastic = res.value - hardening_density * active_volume;
  out.breakdown.hardening = hardening_density * active_volume;
  out.breakdown.regularization = 0.0;
  out.breakdown.total = res.value;
  return out;
}

// ---------------------------------------------------------------------------
// The headline experiment: the ladder of F_eps minima against min F_hom.
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  double eps = 0.0;
  double min_Feps = 0.0;
  double min_Fhom = 0.0;
  double gap = 0.0;  // |min_Feps - min_Fhom|
  int iterations = 0;
  double wall_ms = 0.0;  // reported in JSON only; CSV stays byte-stable
  bool converged = true;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  FieldsResult hom;
  // tau-topology diagnostics between consecutive ladder minimizers,
  // restricted to the coarsest grid's nodes.
  std::vector<double> y_l2_diffs;
  std::vector<double> P_sup_diffs;
  std::vector<double> P_inv_sup_diffs;
};

namespace detail {

// Restriction of fields to the nodes of the coarsest ladder grid (grids
// nest because cell counts scale with 1/eps).
struct RestrictedFields {
  std::vector<double> y;
  std::vector<Mat3> P;
};

inline RestrictedFields restrict_to(const GridDomain& fine,
                                    const GridDomain& coarse,
                                    const DeformationField& y,
                                    const PlasticField& P) {
  RestrictedFields out;
  const int d = fine.dimension();
  const int sx = fine.cells(0) / coarse.cells(0);
  const int sy = fine.cells(1) / coarse.cells(1);
  const int sz = fine.dimension() == 3 ? fine.cells(2) / coarse.cells(2) : 1;
  for (int k = 0; k < coarse.nodes(2); ++k) {
    for (int j = 0; j < coarse.nodes(1); ++j) {
      for (int i = 0; i < coarse.nodes(0); ++i) {
        const std::size_t fn =
            fine.node_index(i * sx, j * sy, d == 3 ? k * sz : k);
        for (int c = 0; c < d; ++c) {
          out.y.push_back(y.y[fn * static_cast<std::size_t>(d) +
                              static_cast<std::size_t>(c)]);
        }
        out.P.push_back(P.P[fn]);
      }
    }
  }
  return out;
}

}  // namespace detail

inline ConvergenceReport convergence_table(const ExperimentConfig& config,
                                           const WhomTable& table) {
  config.validate();
  ConvergenceReport report;
  report.hom = minimize_Fhom(config, table);

  std::vector<detail::RestrictedFields> restricted;
  const GridDomain coarse = config.grid_for_eps(config.eps_ladder.front());

  for (double eps : config.eps_ladder) {
    const auto start = std::chrono::steady_clock::now();
    const FieldsResult r = minimize_Feps(config, eps);
    const auto end = std::chrono::steady_clock::now();
    ConvergenceRow row;
    row.eps = eps;
    row.min_Feps = r.value;
    row.min_Fhom = report.hom.value;
    row.gap = std::abs(r.value - report.hom.value);
    row.iterations = r.iterations;
    row.converged = r.converged;
    row.wall_ms =
        std::chrono::duration<double, std::milli>(end - start).count();
    report.rows.push_back(row);
    restricted.push_back(
        detail::restrict_to(r.domain, coarse, r.y, r.P));
  }

  for (std::size_t i = 1; i < restricted.size(); ++i) {
    const auto& a = restricted[i - 1];
    const auto& b = restricted[i];
    KahanSum acc;
    for (std::size_t n = 0; n < a.y.size(); ++n) {
      const double dv = a.y[n] - b.y[n];
      acc.add(dv * dv);
    }
    report.y_l2_diffs.push_back(
        std::sqrt(acc.value() / static_cast<double>(a.y.size())));
    double sup = 0.0, sup_inv = 0.0;
    for (std::size_t n = 0; n < a.P.size(); ++n) {
      sup = std::max(sup, frobenius(a.P[n] - b.P[n]));
      sup_inv =
          std::max(sup_inv, frobenius(inverse(a.P[n]) - inverse(b.P[n])));
    }
    report.P_sup_diffs.push_back(sup);
    report.P_inv_sup_diffs.push_back(sup_inv);
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON ingestion (schemas documented in the README; every missing or
// ill-typed field raises ConfigError naming the offending key).
// ---------------------------------------------------------------------------

inline Mat3 mat3_from_json(const nlohmann::json& j, const char* where) {
  if (!j.is_array() || j.size() != 9) {
    throw ConfigError(std::string(where) + ": expected 9 reals (row-major)");
  }
  Mat3 m;
  for (int e = 0; e < 9; ++e) {
    if (!j[static_cast<std::size_t>(e)].is_number()) {
      throw ConfigError(std::string(where) + ": entry " + std::to_string(e) +
                        " is not a number");
    }
    m.a[static_cast<std::size_t>(e)] =
        j[static_cast<std::size_t>(e)].get<double>();
  }
  return m;
}

inline CellProblemConfig cell_config_from_json(const nlohmann::json& j) {
  CellProblemConfig c;
  if (j.contains("lambda_ladder")) {
    c.lambda_ladder.clear();
    for (const auto& v : j.at("lambda_ladder")) {
      c.lambda_ladder.push_back(v.get<double>());
    }
  }
  if (j.contains("resolution")) c.resolution = j.at("resolution").get<int>();
  if (j.contains("dimension")) c.dimension = j.at("dimension").get<int>();
  if (j.contains("max_iterations")) {
    c.optimizer.max_iterations = j.at("max_iterations").get<int>();
  }
  c.validate();
  return c;
}

inline PlasticMode plastic_mode_from_string(const std::string& s) {
  if (s == "pinned-identity") return PlasticMode::PinnedIdentity;
  if (s == "fixed-boundary") return PlasticMode::FixedBoundary;
  if (s == "free") return PlasticMode::Free;
  throw ConfigError("p_mode must be pinned-identity, fixed-boundary or free; "
                    "got \"" + s + "\"");
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg(material_from_json(
      detail::require_field(j, "material", "experiment")));
  if (j.contains("dimension")) cfg.dimension = j.at("dimension").get<int>();
  for (int a = 0; a < 3; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    if (j.contains("origin") && a < static_cast<int>(j.at("origin").size())) {
      cfg.origin[ua] = j.at("origin")[ua].get<double>();
    }
    if (j.contains("extent") && a < static_cast<int>(j.at("extent").size())) {
      cfg.extent[ua] = j.at("extent")[ua].get<double>();
    }
  }
  if (j.contains("F_bc")) cfg.F_bc = mat3_from_json(j.at("F_bc"), "F_bc");
  if (j.contains("b_bc")) {
    for (std::size_t a = 0; a < 3 && a < j.at("b_bc").size(); ++a) {
      cfg.b_bc[a] = j.at("b_bc")[a].get<double>();
    }
  }
  if (j.contains("P_bc")) {
    cfg.P_bc = SL3Element::retracted(mat3_from_json(j.at("P_bc"), "P_bc"));
  }
  if (j.contains("p_mode")) {
    cfg.p_mode = plastic_mode_from_string(j.at("p_mode").get<std::string>());
  }
  if (j.contains("eps_ladder")) {
    cfg.eps_ladder.clear();
    for (const auto& v : j.at("eps_ladder")) {
      cfg.eps_ladder.push_back(v.get<double>());
    }
  }
  if (j.contains("resolution_per_eps")) {
    cfg.resolution_per_eps = j.at("resolution_per_eps").get<int>();
  }
  if (j.contains("hom_resolution")) {
    cfg.hom_resolution = j.at("hom_resolution").get<int>();
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_alternations")) {
    cfg.max_alternations = j.at("max_alternations").get<int>();
  }
  if (j.contains("alt_rel_tol")) {
    cfg.alt_rel_tol = j.at("alt_rel_tol").get<double>();
  }
  if (j.contains("cell")) cfg.cell = cell_config_from_json(j.at("cell"));
  cfg.cell.dimension = cfg.dimension;
  if (j.contains("table_points")) {
    cfg.table_points = j.at("table_points").get<int>();
  }
  if (j.contains("table_margin")) {
    cfg.table_margin = j.at("table_margin").get<double>();
  }
  cfg.validate();
  return cfg;
}

}  // namespace plasthom

#endif
