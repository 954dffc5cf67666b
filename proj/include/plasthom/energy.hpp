#ifndef PLASTHOM_ENERGY_HPP
#define PLASTHOM_ENERGY_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "plasthom/errors.hpp"
#include "plasthom/grid.hpp"
#include "plasthom/materials.hpp"
#include "plasthom/reduce.hpp"

namespace plasthom {

struct EnergyBreakdown {
  double elastic = 0.0;
  double hardening = 0.0;  // may be infinite_energy
  double regularization = 0.0;
  double total = 0.0;      // sum of parts; Infinite absorbs
};

namespace detail {

inline void check_field_sizes(const GridDomain& dom, const DeformationField& y,
                              const PlasticField& P, const char* where) {
  const std::size_t nn = dom.node_count();
  if (y.y.size() != nn * static_cast<std::size_t>(dom.dimension())) {
    throw ConfigError(std::string(where) + ": deformation field size "
                      "does not match the grid");
  }
  if (P.P.size() != nn) {
    throw ConfigError(std::string(where) + ": plastic field size does not "
                      "match the grid");
  }
}

// Marks nodes that belong to at least one active cell — the nodes whose K
// membership decides finiteness.
inline std::vector<std::uint8_t> contributing_nodes(const GridDomain& dom) {
  std::vector<std::uint8_t> mark(dom.node_count(), 0);
  std::size_t corners[8];
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int j = 0; j < dom.cells(1); ++j) {
      for (int i = 0; i < dom.cells(0); ++i) {
        if (!dom.cell_active(dom.cell_index(i, j, k))) continue;
        const int count = gridd::cell_corners(dom, i, j, k, corners);
        for (int c = 0; c < count; ++c) mark[corners[c]] = 1;
      }
    }
  }
  return mark;
}

inline bool all_contributing_nodes_in_K(const MaterialModel& model,
                                        const GridDomain& dom,
                                        const PlasticField& P) {
  const std::vector<std::uint8_t> mark = contributing_nodes(dom);
  for (std::size_t n = 0; n < mark.size(); ++n) {
    if (!mark[n]) continue;
    if (!model.K().contains(SL3Element::checked(P.P[n]))) return false;
  }
  return true;
}

}  // namespace detail

// Localized functional: midpoint quadrature over the active cells of
//   W(x/eps, grad_y * Pbar^{-1}) + H(x/eps, Pbar) + |grad P|^q,
// with node data entering through cell-center interpolation. Deterministic
// for any job count: per-cell contributions land in slots, summed in index
// order with compensation.
inline EnergyBreakdown energy_total(const MaterialModel& model, double eps,
                                    const DeformationField& y,
                                    const PlasticField& P,
                                    const GridDomain& dom, int jobs = 1) {
  if (!(eps > 0.0)) throw EpsNonPositive("energy_total: eps must be > 0");
  detail::check_field_sizes(dom, y, P, "energy_total");

  const bool finite_hardening =
      detail::all_contributing_nodes_in_K(model, dom, P);
  const double vol = dom.cell_volume();
  const double q = model.q();
  const double inv_eps = 1.0 / eps;
  const int cx = dom.cells(0), cy = dom.cells(1), cz = dom.cells(2);
  const std::size_t ncells = static_cast<std::size_t>(cx) * cy * cz;

  std::vector<double> elastic_slot(ncells, 0.0);
  std::vector<double> hardening_slot(ncells, 0.0);
  std::vector<double> reg_slot(ncells, 0.0);

  parallel_for(ncells, jobs, [&](std::size_t c) {
    const int i = static_cast<int>(c % cx);
    const int j = static_cast<int>((c / cx) % cy);
    const int k = static_cast<int>(c / (static_cast<std::size_t>(cx) * cy));
    const std::size_t idx = dom.cell_index(i, j, k);
    if (!dom.cell_active(idx)) return;
    const Vec3 center = dom.cell_center(i, j, k);
    const Vec3 z{center[0] * inv_eps, center[1] * inv_eps,
                 center[2] * inv_eps};
    const Mat3 Pbar = cell_plastic_average(dom, P, i, j, k);
    const Mat3 G = cell_deformation_gradient(dom, y, i, j, k);
    elastic_slot[idx] = model.W().value(z, G * inverse(Pbar)) * vol;
    if (finite_hardening) {
      const Mat3 dP = Pbar - Mat3::identity();
      hardening_slot[idx] =
          model.H().weight.at(z) * frobenius_inner(dP, dP) * vol;
    }
    const double g2 = cell_plastic_gradient_sq(dom, P, i, j, k);
    reg_slot[idx] = g2 > 0.0 ? std::pow(g2, 0.5 * q) * vol : 0.0;
  });

  EnergyBreakdown out;
  out.elastic = compensated_sum(elastic_slot);
  out.regularization = compensated_sum(reg_slot);
  out.hardening =
      finite_hardening ? compensated_sum(hardening_slot) : infinite_energy;
  out.total = out.elastic + out.hardening + out.regularization;
  return out;
}

// Analytic gradient of the elastic part with respect to the nodal y values
// (same layout as DeformationField::y). With A = G Pbar^{-1},
// dW/dG = eval_W_grad(A) * Pbar^{-T}, scattered through the cell-gradient
// stencil weights.
inline std::vector<double> elastic_gradient(const MaterialModel& model,
                                            double eps,
                                            const DeformationField& y,
                                            const PlasticField& P,
                                            const GridDomain& dom) {
  if (!(eps > 0.0)) throw EpsNonPositive("elastic_gradient: eps must be > 0");
  detail::check_field_sizes(dom, y, P, "elastic_gradient");
  const int d = dom.dimension();
  const double vol = dom.cell_volume();
  const double inv_eps = 1.0 / eps;
  std::vector<double> grad(y.y.size(), 0.0);
  std::size_t corners[8];
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int j = 0; j < dom.cells(1); ++j) {
      for (int i = 0; i < dom.cells(0); ++i) {
        const std::size_t idx = dom.cell_index(i, j, k);
        if (!dom.cell_active(idx)) continue;
        const Vec3 center = dom.cell_center(i, j, k);
        const Vec3 z{center[0] * inv_eps, center[1] * inv_eps,
                     center[2] * inv_eps};
        const Mat3 Pinv = inverse(cell_plastic_average(dom, P, i, j, k));
        const Mat3 G = cell_deformation_gradient(dom, y, i, j, k);
        const Mat3 S = model.W().grad(z, G * Pinv) * transpose(Pinv);
        const int count = gridd::cell_corners(dom, i, j, k, corners);
        for (int n = 0; n < count; ++n) {
          const std::size_t base =
              corners[n] * static_cast<std::size_t>(d);
          for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int a = 0; a < d; ++a) {
              acc += S(c, a) * gridd::corner_weight(dom, n, a);
            }
            grad[base + static_cast<std::size_t>(c)] += acc * vol;
          }
        }
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Discrete Sobolev quantities (same quadrature as energy_total).
// ---------------------------------------------------------------------------

struct Seminorms {
  double y_l2_sq = 0.0;       // int |y|^2
  double grad_y_l2_sq = 0.0;  // int |grad y|^2 (embedded gradient)
  double grad_P_lq_q = 0.0;   // int |grad P|^q
  double P_sup_identity = 0.0;  // max over contributing nodes |P - I|_F
};

inline Seminorms sobolev_seminorms(const DeformationField& y,
                                   const PlasticField& P,
                                   const GridDomain& dom, double q) {
  detail::check_field_sizes(dom, y, P, "sobolev_seminorms");
  const int d = dom.dimension();
  const double vol = dom.cell_volume();
  KahanSum y2, gy2, gpq;
  std::size_t corners[8];
  double vals[8];
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int j = 0; j < dom.cells(1); ++j) {
      for (int i = 0; i < dom.cells(0); ++i) {
        if (!dom.cell_active(dom.cell_index(i, j, k))) continue;
        const int count = gridd::cell_corners(dom, i, j, k, corners);
        double ycc = 0.0;
        for (int c = 0; c < d; ++c) {
          for (int n = 0; n < count; ++n) {
            vals[n] = y.y[corners[n] * static_cast<std::size_t>(d) +
                          static_cast<std::size_t>(c)];
          }
          const double avg = gridd::cell_average(dom, vals);
          ycc += avg * avg;
        }
        y2.add(ycc * vol);
        const Mat3 G = cell_deformation_gradient(dom, y, i, j, k);
        gy2.add(frobenius_inner(G, G) * vol);
        const double g2 = cell_plastic_gradient_sq(dom, P, i, j, k);
        gpq.add(g2 > 0.0 ? std::pow(g2, 0.5 * q) * vol : 0.0);
      }
    }
  }
  Seminorms out;
  out.y_l2_sq = y2.value();
  out.grad_y_l2_sq = gy2.value();
  out.grad_P_lq_q = gpq.value();
  const std::vector<std::uint8_t> mark = detail::contributing_nodes(dom);
  const Mat3 eye = Mat3::identity();
  for (std::size_t n = 0; n < mark.size(); ++n) {
    if (!mark[n]) continue;
    out.P_sup_identity =
        std::max(out.P_sup_identity, frobenius(P.P[n] - eye));
  }
  return out;
}

// Sup distances between plastic fields (and between their inverses), the
// convergence diagnostics of the harness.
inline double sup_distance(const PlasticField& a, const PlasticField& b) {
  if (a.P.size() != b.P.size()) {
    throw ConfigError("sup_distance: field sizes differ");
  }
  double worst = 0.0;
  for (std::size_t n = 0; n < a.P.size(); ++n) {
    worst = std::max(worst, frobenius(a.P[n] - b.P[n]));
  }
  return worst;
}

inline double sup_inverse_distance(const PlasticField& a,
                                   const PlasticField& b) {
  if (a.P.size() != b.P.size()) {
    throw ConfigError("sup_inverse_distance: field sizes differ");
  }
  double worst = 0.0;
  for (std::size_t n = 0; n < a.P.size(); ++n) {
    worst = std::max(worst, frobenius(inverse(a.P[n]) - inverse(b.P[n])));
  }
  return worst;
}

}  // namespace plasthom

#endif
