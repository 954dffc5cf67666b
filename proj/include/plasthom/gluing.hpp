#ifndef PLASTHOM_GLUING_HPP
#define PLASTHOM_GLUING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "plasthom/energy.hpp"
#include "plasthom/errors.hpp"
#include "plasthom/finsler.hpp"
#include "plasthom/grid.hpp"
#include "plasthom/materials.hpp"
#include "plasthom/reduce.hpp"

namespace plasthom {

// ---------------------------------------------------------------------------
// Cell masks as regions.
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> mask_all(const GridDomain& dom) {
  return std::vector<std::uint8_t>(dom.cell_count(), 1);
}

// Cells whose center lies in the half-open box [lo, hi).
inline std::vector<std::uint8_t> mask_box(const GridDomain& dom,
                                          const std::array<double, 3>& lo,
                                          const std::array<double, 3>& hi) {
  std::vector<std::uint8_t> mask(dom.cell_count(), 0);
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int j = 0; j < dom.cells(1); ++j) {
      for (int i = 0; i < dom.cells(0); ++i) {
        const Vec3 c = dom.cell_center(i, j, k);
        bool in = true;
        for (int a = 0; a < dom.dimension(); ++a) {
          if (c[a] < lo[static_cast<std::size_t>(a)] ||
              c[a] >= hi[static_cast<std::size_t>(a)]) {
            in = false;
            break;
          }
        }
        if (in) mask[dom.cell_index(i, j, k)] = 1;
      }
    }
  }
  return mask;
}

inline std::vector<std::uint8_t> mask_and(const std::vector<std::uint8_t>& a,
                                          const std::vector<std::uint8_t>& b) {
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

inline std::vector<std::uint8_t> mask_or(const std::vector<std::uint8_t>& a,
                                         const std::vector<std::uint8_t>& b) {
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] || b[i];
  return out;
}

inline std::vector<std::uint8_t> mask_minus(const std::vector<std::uint8_t>& a,
                                            const std::vector<std::uint8_t>& b) {
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && !b[i];
  return out;
}

inline double mask_volume(const GridDomain& dom,
                          const std::vector<std::uint8_t>& mask) {
  std::size_t n = 0;
  for (std::uint8_t m : mask) n += m ? 1 : 0;
  return static_cast<double>(n) * dom.cell_volume();
}

inline bool mask_subset(const std::vector<std::uint8_t>& inner,
                        const std::vector<std::uint8_t>& outer) {
  for (std::size_t i = 0; i < inner.size(); ++i) {
    if (inner[i] && !outer[i]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Nodal distance to a cell region: Dijkstra over the node graph with axis
// and diagonal edges (first-order sweep; 1-Lipschitz along edges by the
// triangle inequality of the graph metric, which is what the cut-off slope
// bound consumes).
// ---------------------------------------------------------------------------

inline std::vector<double> distance_to_region(
    const GridDomain& dom, const std::vector<std::uint8_t>& region) {
  if (region.size() != dom.cell_count()) {
    throw ConfigError("distance_to_region: mask size mismatch");
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(dom.node_count(), inf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;

  std::size_t corners[8];
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int j = 0; j < dom.cells(1); ++j) {
      for (int i = 0; i < dom.cells(0); ++i) {
        if (!region[dom.cell_index(i, j, k)]) continue;
        const int count = gridd::cell_corners(dom, i, j, k, corners);
        for (int c = 0; c < count; ++c) {
          if (dist[corners[c]] > 0.0) {
            dist[corners[c]] = 0.0;
            pq.emplace(0.0, corners[c]);
          }
        }
      }
    }
  }

  const int d = dom.dimension();
  const int nx = dom.nodes(0), ny = dom.nodes(1), nz = dom.nodes(2);
  while (!pq.empty()) {
    const auto [du, u] = pq.top();
    pq.pop();
    if (du > dist[u]) continue;
    const int i = static_cast<int>(u % nx);
    const int j = static_cast<int>((u / nx) % ny);
    const int k = static_cast<int>(u / (static_cast<std::size_t>(nx) * ny));
    const int krange = d == 3 ? 1 : 0;
    for (int dk = -krange; dk <= krange; ++dk) {
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0 && dk == 0) continue;
          const int vi = i + di, vj = j + dj, vk = k + dk;
          if (vi < 0 || vi >= nx || vj < 0 || vj >= ny || vk < 0 || vk >= nz) {
            continue;
          }
          double w2 = 0.0;
          const int off[3] = {di, dj, dk};
          for (int a = 0; a < d; ++a) {
            const double e = off[a] * dom.spacing(a);
            w2 += e * e;
          }
          const double alt = du + std::sqrt(w2);
          const std::size_t v = dom.node_index(vi, vj, vk);
          if (alt < dist[v]) {
            dist[v] = alt;
            pq.emplace(alt, v);
          }
        }
      }
    }
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Annulus decomposition between A' and the boundary of A.
// ---------------------------------------------------------------------------

struct AnnulusDecomposition {
  GridDomain domain;
  std::vector<std::uint8_t> A_prime, A, B;
  int N = 0;
  double delta = 0.0;
  std::vector<double> node_dist;              // dist(node, A')
  std::vector<std::vector<std::uint8_t>> C;   // C[0..N], C[0] = A'
  std::vector<std::vector<std::uint8_t>> D;   // D[j] stored at index j-1
};

inline AnnulusDecomposition build_annuli(const GridDomain& dom,
                                         std::vector<std::uint8_t> A_prime,
                                         std::vector<std::uint8_t> A,
                                         std::vector<std::uint8_t> B, int N) {
  if (N < 2) throw ConfigError("build_annuli: N >= 2");
  if (A_prime.size() != dom.cell_count() || A.size() != dom.cell_count() ||
      B.size() != dom.cell_count()) {
    throw ConfigError("build_annuli: mask sizes must equal cell count");
  }
  if (!mask_subset(A_prime, A)) {
    throw ConfigError("build_annuli: A' must be contained in A");
  }

  AnnulusDecomposition dec;
  dec.domain = dom;
  dec.node_dist = distance_to_region(dom, A_prime);

  // delta = grid distance from A' to the topological boundary of region A:
  // nodes that touch an A cell and either a non-A cell or the outer face.
  double delta = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dom.nodes(2); ++k) {
    for (int j = 0; j < dom.nodes(1); ++j) {
      for (int i = 0; i < dom.nodes(0); ++i) {
        bool touches_A = false, touches_non_A = false, clipped = false;
        const int krange = dom.dimension() == 3 ? 1 : 0;
        for (int dk = -krange; dk <= 0; ++dk) {
          for (int dj = -1; dj <= 0; ++dj) {
            for (int di = -1; di <= 0; ++di) {
              const int ci = i + di, cj = j + dj, ck = k + dk;
              if (ci < 0 || ci >= dom.cells(0) || cj < 0 ||
                  cj >= dom.cells(1) || ck < 0 || ck >= dom.cells(2)) {
                clipped = true;
                continue;
              }
              if (A[dom.cell_index(ci, cj, ck)]) {
                touches_A = true;
              } else {
                touches_non_A = true;
              }
            }
          }
        }
        if (touches_A && (touches_non_A || clipped)) {
          delta = std::min(delta, dec.node_dist[dom.node_index(i, j, k)]);
        }
      }
    }
  }

  double max_h = 0.0;
  for (int a = 0; a < dom.dimension(); ++a) {
    max_h = std::max(max_h, dom.spacing(a));
  }
  if (!(delta > 2.0 * max_h) || !std::isfinite(delta)) {
    throw NotCompactlyContained(
        "build_annuli: dist(A', boundary of A) = " + std::to_string(delta) +
        " must exceed two grid spacings");
  }

  dec.A_prime = std::move(A_prime);
  dec.A = std::move(A);
  dec.B = std::move(B);
  dec.N = N;
  dec.delta = delta;

  // C_j = A-cells whose nearest corner is closer than j delta / N (always
  // including A'); D_j = C_j \ C_{j-1} partitions C_N \ C_0 by telescoping.
  dec.C.resize(static_cast<std::size_t>(N) + 1);
  dec.C[0] = dec.A_prime;
  std::size_t corners[8];
  for (int j = 1; j <= N; ++j) {
    const double threshold = delta * j / N;
    std::vector<std::uint8_t> mask(dom.cell_count(), 0);
    for (int ck = 0; ck < dom.cells(2); ++ck) {
      for (int cj = 0; cj < dom.cells(1); ++cj) {
        for (int ci = 0; ci < dom.cells(0); ++ci) {
          const std::size_t idx = dom.cell_index(ci, cj, ck);
          if (!dec.A[idx]) continue;
          if (dec.A_prime[idx]) {
            mask[idx] = 1;
            continue;
          }
          const int count = gridd::cell_corners(dom, ci, cj, ck, corners);
          for (int c = 0; c < count; ++c) {
            if (dec.node_dist[corners[c]] < threshold) {
              mask[idx] = 1;
              break;
            }
          }
        }
      }
    }
    dec.C[static_cast<std::size_t>(j)] = std::move(mask);
  }
  dec.D.resize(static_cast<std::size_t>(N));
  for (int j = 1; j <= N; ++j) {
    dec.D[static_cast<std::size_t>(j - 1)] =
        mask_minus(dec.C[static_cast<std::size_t>(j)],
                   dec.C[static_cast<std::size_t>(j - 1)]);
  }
  return dec;
}

// ---------------------------------------------------------------------------
// Cut-off fields.
// ---------------------------------------------------------------------------

struct CutoffField {
  std::vector<double> phi;  // nodal, in [0,1]
  double gradient_bound = 0.0;     // declared 2N/delta
  double observed_gradient = 0.0;  // measured max |grad phi|
  int layer = 0;
};

// phi_j ramps from 1 at graph distance (j-1) delta/N down to 0 at
// j delta/N, mollified by one box pass with the plateaus re-imposed. The
// ramp slope is N/delta and the graph distance is 1-Lipschitz along edges,
// so the measured cell gradient stays within the declared 2N/delta.
inline CutoffField build_cutoff(const AnnulusDecomposition& dec, int j) {
  if (j < 1 || j > dec.N) throw ConfigError("build_cutoff: 1 <= j <= N");
  const GridDomain& dom = dec.domain;
  const double t0 = dec.delta * (j - 1) / dec.N;
  const double t1 = dec.delta * j / dec.N;
  const double slope = dec.N / dec.delta;

  const std::size_t nn = dom.node_count();
  std::vector<double> raw(nn);
  for (std::size_t n = 0; n < nn; ++n) {
    raw[n] = std::clamp(1.0 - slope * (dec.node_dist[n] - t0), 0.0, 1.0);
  }

  // One mollification pass: box average over the node neighborhood.
  const int d = dom.dimension();
  const int nx = dom.nodes(0), ny = dom.nodes(1), nz = dom.nodes(2);
  std::vector<double> phi(nn);
  for (int k = 0; k < nz; ++k) {
    for (int jj = 0; jj < ny; ++jj) {
      for (int i = 0; i < nx; ++i) {
        double sum = 0.0;
        int cnt = 0;
        const int krange = d == 3 ? 1 : 0;
        for (int dk = -krange; dk <= krange; ++dk) {
          for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
              const int vi = i + di, vj = jj + dj, vk = k + dk;
              if (vi < 0 || vi >= nx || vj < 0 || vj >= ny || vk < 0 ||
                  vk >= nz) {
                continue;
              }
              sum += raw[dom.node_index(vi, vj, vk)];
              ++cnt;
            }
          }
        }
        phi[dom.node_index(i, jj, k)] = sum / cnt;
      }
    }
  }
  // Re-impose the exact plateaus the gluing purity contract needs.
  for (std::size_t n = 0; n < nn; ++n) {
    if (dec.node_dist[n] <= t0) {
      phi[n] = 1.0;
    } else if (dec.node_dist[n] >= t1) {
      phi[n] = 0.0;
    } else {
      phi[n] = std::clamp(phi[n], 0.0, 1.0);
    }
  }

  CutoffField out;
  out.layer = j;
  out.gradient_bound = 2.0 * dec.N / dec.delta;
  std::size_t corners[8];
  double vals[8];
  double grad[3];
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int jj = 0; jj < dom.cells(1); ++jj) {
      for (int i = 0; i < dom.cells(0); ++i) {
        const int count = gridd::cell_corners(dom, i, jj, k, corners);
        for (int c = 0; c < count; ++c) vals[c] = phi[corners[c]];
        gridd::cell_gradient(dom, vals, grad);
        const double g = std::sqrt(grad[0] * grad[0] + grad[1] * grad[1] +
                                   grad[2] * grad[2]);
        out.observed_gradient = std::max(out.observed_gradient, g);
      }
    }
  }
  if (out.observed_gradient > out.gradient_bound * (1.0 + 1e-9)) {
    throw AssumptionViolated(
        "build_cutoff: measured |grad phi| = " +
        std::to_string(out.observed_gradient) + " exceeds 2N/delta = " +
        std::to_string(out.gradient_bound));
  }
  out.phi = std::move(phi);
  return out;
}

// ---------------------------------------------------------------------------
// Gluing.
// ---------------------------------------------------------------------------

struct GluedPair {
  DeformationField y;
  PlasticField P;
};

// y: convex combination through phi; P: geodesic interpolation
// gamma(phi, P2, P1) so that phi = 1 returns P1 and phi = 0 returns P2,
// bit-exactly on the pure regions.
inline GluedPair glue(const MaterialModel& model,
                      const AnnulusDecomposition& dec, int j,
                      const DeformationField& y1, const PlasticField& P1,
                      const DeformationField& y2, const PlasticField& P2,
                      GammaMode mode, GeodesicCache* cache = nullptr) {
  const GridDomain& dom = dec.domain;
  const int d = dom.dimension();
  const std::size_t nn = dom.node_count();
  if (y1.y.size() != nn * static_cast<std::size_t>(d) ||
      y2.y.size() != y1.y.size() || P1.P.size() != nn || P2.P.size() != nn) {
    throw ConfigError("glue: field sizes must match the decomposition grid");
  }
  const CutoffField cutoff = build_cutoff(dec, j);

  GluedPair out;
  out.y.y.resize(y1.y.size());
  out.P.P.resize(nn);
  for (std::size_t n = 0; n < nn; ++n) {
    const double t = cutoff.phi[n];
    for (int c = 0; c < d; ++c) {
      const std::size_t at = n * static_cast<std::size_t>(d) +
                             static_cast<std::size_t>(c);
      out.y.y[at] = t * y1.y[at] + (1.0 - t) * y2.y[at];
    }
    if (t == 1.0) {
      out.P.P[n] = P1.P[n];
    } else if (t == 0.0) {
      out.P.P[n] = P2.P[n];
    } else {
      out.P.P[n] = gamma_interp_in_K(model.K(), t,
                                     SL3Element::checked(P2.P[n]),
                                     SL3Element::checked(P1.P[n]), mode,
                                     cache)
                       .m;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fundamental-estimate verification.
// ---------------------------------------------------------------------------

struct FEIngredients {
  double c2 = 0.0;
  double c_K = 0.0;
  double L_H = 0.0;
  double c_gamma = 0.0;  // velocity-bound constant from the finsler probe
  double q = 0.0;
  double c = 0.0;        // the composed constant
};

struct FEReport {
  EnergyBreakdown lhs;        // glued pair on A' union B
  double rhs_main = 0.0;      // (1+sigma)(F(y1,P1,A) + F(y2,P2,B))
  double rhs_cross = 0.0;     // M_sigma * cross integral
  double sigma = 0.0;
  double M_sigma = 0.0;
  double cross_integral = 0.0;
  double delta = 0.0;
  int N = 0;
  int chosen_layer = 0;
  double transition_min = 0.0;    // integral on the chosen layer
  double transition_total = 0.0;  // integral over (A \ A') cap B
  bool satisfied = false;
  FEIngredients ingredients;
  EnergyBreakdown f_A;
  EnergyBreakdown f_B;
};

namespace detail {

// int_mask (1 + |grad y1|^2 + |grad y2|^2 + |grad P1|^q + |grad P2|^q).
inline double transition_integral(const GridDomain& dom,
                                  const std::vector<std::uint8_t>& mask,
                                  const DeformationField& y1,
                                  const PlasticField& P1,
                                  const DeformationField& y2,
                                  const PlasticField& P2, double q) {
  const double vol = dom.cell_volume();
  KahanSum sum;
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int j = 0; j < dom.cells(1); ++j) {
      for (int i = 0; i < dom.cells(0); ++i) {
        if (!mask[dom.cell_index(i, j, k)]) continue;
        const Mat3 g1 = cell_deformation_gradient(dom, y1, i, j, k);
        const Mat3 g2 = cell_deformation_gradient(dom, y2, i, j, k);
        const double p1 = cell_plastic_gradient_sq(dom, P1, i, j, k);
        const double p2 = cell_plastic_gradient_sq(dom, P2, i, j, k);
        double v = 1.0 + frobenius_inner(g1, g1) + frobenius_inner(g2, g2);
        if (p1 > 0.0) v += std::pow(p1, 0.5 * q);
        if (p2 > 0.0) v += std::pow(p2, 0.5 * q);
        sum.add(v * vol);
      }
    }
  }
  return sum.value();
}

// int_mask (|y1 - y2|^2 + |P1 - P2|^q) with cell-center values.
inline double cross_integral(const GridDomain& dom,
                             const std::vector<std::uint8_t>& mask,
                             const DeformationField& y1,
                             const PlasticField& P1,
                             const DeformationField& y2,
                             const PlasticField& P2, double q) {
  const int d = dom.dimension();
  const double vol = dom.cell_volume();
  std::size_t corners[8];
  double vals[8];
  KahanSum sum;
  for (int k = 0; k < dom.cells(2); ++k) {
    for (int j = 0; j < dom.cells(1); ++j) {
      for (int i = 0; i < dom.cells(0); ++i) {
        if (!mask[dom.cell_index(i, j, k)]) continue;
        const int count = gridd::cell_corners(dom, i, j, k, corners);
        double y_sq = 0.0;
        for (int c = 0; c < d; ++c) {
          for (int n = 0; n < count; ++n) {
            const std::size_t at = corners[n] * static_cast<std::size_t>(d) +
                                   static_cast<std::size_t>(c);
            vals[n] = y1.y[at] - y2.y[at];
          }
          const double avg = gridd::cell_average(dom, vals);
          y_sq += avg * avg;
        }
        const Mat3 dP = cell_plastic_average(dom, P1, i, j, k) -
                        cell_plastic_average(dom, P2, i, j, k);
        const double p_sq = frobenius_inner(dP, dP);
        double v = y_sq;
        if (p_sq > 0.0) v += std::pow(p_sq, 0.5 * q);
        sum.add(v * vol);
      }
    }
  }
  return sum.value();
}

inline EnergyBreakdown masked_energy(const MaterialModel& model, double eps,
                                     const DeformationField& y,
                                     const PlasticField& P, GridDomain dom,
                                     const std::vector<std::uint8_t>& mask,
                                     int jobs) {
  dom.set_mask(mask);
  return energy_total(model, eps, y, P, dom, jobs);
}

}  // namespace detail

struct FECheckOptions {
  GammaMode mode = GammaMode::GroupExp;
  int N_override = 0;     // 0 = choose from the proof's conditions
  double c_gamma = 0.0;   // 0 = run a quick velocity probe
  int jobs = 1;
};

// Numerical verification of the gluing inequality: pick the cheapest
// transition layer, glue there, and compare
//   F(glued, A' u B) <= (1+sigma)(F(y1,P1,A) + F(y2,P2,B))
//                        + M_sigma int_{(A cap B)\A'}(|y1-y2|^2+|P1-P2|^q).
inline FEReport fe_check(const MaterialModel& model, double eps,
                         const GridDomain& dom,
                         const std::vector<std::uint8_t>& A_prime,
                         const std::vector<std::uint8_t>& A,
                         const std::vector<std::uint8_t>& B,
                         const DeformationField& y1, const PlasticField& P1,
                         const DeformationField& y2, const PlasticField& P2,
                         double sigma, const FECheckOptions& opts = {}) {
  if (!(sigma > 0.0)) throw ConfigError("fe_check: sigma > 0 required");

  FEReport report;
  report.sigma = sigma;

  // The composed constant: quadratic growth through the elastic conversion
  // |grad y| <= c_K |grad y P^{-1}|, the hardening Lipschitz constant, and
  // the interpolation velocity bound raised to the regularization exponent.
  FEIngredients ing;
  ing.c2 = model.c2();
  ing.c_K = model.c_K();
  ing.L_H = model.L_H();
  ing.q = model.q();
  if (opts.c_gamma > 0.0) {
    ing.c_gamma = opts.c_gamma;
  } else {
    const VelocityProbeReport probe =
        velocity_probe(model.norm(), model.H().k_radius, 12, opts.mode,
                       20240805, 16);
    ing.c_gamma = std::max(probe.c, 1.0);
  }
  ing.c = std::pow(3.0, ing.q - 1.0) *
          (1.0 + 2.0 * ing.c2 * (1.0 + ing.c_K * ing.c_K) +
           std::pow(ing.c_gamma, ing.q) + ing.L_H);
  report.ingredients = ing;

  // delta gate first (cheap, reuses the annuli distance sweep via N = 2).
  AnnulusDecomposition probe_dec = build_annuli(dom, A_prime, A, B, 2);
  report.delta = probe_dec.delta;

  const std::vector<std::uint8_t> overlap =
      mask_minus(mask_and(A, B), A_prime);
  const double overlap_vol = mask_volume(dom, overlap);

  int N;
  if (opts.N_override > 0) {
    N = std::max(2, opts.N_override);
  } else {
    const double needed =
        std::max(ing.c / sigma, 2.0 * ing.c * overlap_vol / sigma);
    N = static_cast<int>(std::ceil(needed)) + 1;
    double max_h = 0.0;
    for (int a = 0; a < dom.dimension(); ++a) {
      max_h = std::max(max_h, dom.spacing(a));
    }
    const int cap =
        std::max(2, static_cast<int>(std::floor(probe_dec.delta /
                                                (2.0 * max_h))));
    N = std::clamp(N, 2, cap);
  }
  report.N = N;

  const AnnulusDecomposition dec =
      N == 2 ? std::move(probe_dec) : build_annuli(dom, A_prime, A, B, N);

  // Pigeonhole layer selection on int_{B cap D_j}(1 + |grad|^2 + |grad|^q).
  double best = std::numeric_limits<double>::infinity();
  int best_layer = 1;
  for (int j = 1; j <= N; ++j) {
    const double t = detail::transition_integral(
        dom, mask_and(dec.D[static_cast<std::size_t>(j - 1)], B), y1, P1, y2,
        P2, model.q());
    if (t < best) {
      best = t;
      best_layer = j;
    }
  }
  report.chosen_layer = best_layer;
  report.transition_min = best;
  report.transition_total = detail::transition_integral(
      dom, mask_and(mask_minus(A, A_prime), B), y1, P1, y2, P2, model.q());

  GeodesicCache cache;
  const GluedPair glued = glue(model, dec, best_layer, y1, P1, y2, P2,
                               opts.mode, &cache);

  const std::vector<std::uint8_t> lhs_mask = mask_or(A_prime, B);
  report.lhs = detail::masked_energy(model, eps, glued.y, glued.P, dom,
                                     lhs_mask, opts.jobs);
  report.f_A =
      detail::masked_energy(model, eps, y1, P1, dom, A, opts.jobs);
  report.f_B =
      detail::masked_energy(model, eps, y2, P2, dom, B, opts.jobs);
  report.cross_integral =
      detail::cross_integral(dom, overlap, y1, P1, y2, P2, model.q());

  const double two_n_delta = 2.0 * N / dec.delta;
  report.M_sigma = ing.c * (two_n_delta * two_n_delta +
                            std::pow(two_n_delta, ing.q));
  report.rhs_main =
      (1.0 + sigma) * (report.f_A.total + report.f_B.total);
  report.rhs_cross = report.M_sigma * report.cross_integral;
  const double rhs = report.rhs_main + report.rhs_cross;
  const double scale = std::max(1.0, std::abs(rhs));
  report.satisfied = report.lhs.total <= rhs + 1e-9 * scale;
  return report;
}

// ---------------------------------------------------------------------------
// Deterministic smooth states for fundamental-estimate trials: y is a mildly
// random affine map plus low-frequency bumps, P = exp of a low-frequency
// sl(3) field whose group-path length stays well inside K (so both states
// carry finite, moderate energy).
// ---------------------------------------------------------------------------

struct SeededStates {
  DeformationField y1, y2;
  PlasticField P1, P2;
};

inline SeededStates make_seeded_states(const MaterialModel& model,
                                       const GridDomain& dom,
                                       std::uint64_t seed) {
  Rng rng(seed);
  const int d = dom.dimension();
  const std::size_t nn = dom.node_count();
  const double pi = 3.14159265358979323846;

  auto unit_coord = [&](const Vec3& x, int a) {
    return (x[static_cast<std::size_t>(a)] - dom.origin(a)) / dom.extent(a);
  };

  auto make_y = [&]() {
    Mat3 A = Mat3::identity();
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) A(r, c) += 0.1 * rng.normal();
    }
    // two bump modes per component
    std::vector<std::array<double, 3>> amp(static_cast<std::size_t>(2 * d));
    for (auto& m : amp) {
      for (int a = 0; a < 3; ++a) {
        m[static_cast<std::size_t>(a)] = 0.05 * rng.normal();
      }
    }
    DeformationField f = DeformationField::zeros(dom);
    for (int k = 0; k < dom.nodes(2); ++k) {
      for (int j = 0; j < dom.nodes(1); ++j) {
        for (int i = 0; i < dom.nodes(0); ++i) {
          const std::size_t n = dom.node_index(i, j, k);
          const Vec3 x = dom.node_position(i, j, k);
          for (int c = 0; c < d; ++c) {
            double v = A(c, 0) * x[0] + A(c, 1) * x[1] + A(c, 2) * x[2];
            for (int mode = 1; mode <= 2; ++mode) {
              double bump = amp[static_cast<std::size_t>(2 * c + mode - 1)]
                               [static_cast<std::size_t>(mode - 1)];
              for (int a = 0; a < d; ++a) {
                bump *= std::sin(pi * mode * unit_coord(x, a));
              }
              v += bump;
            }
            f.y[n * static_cast<std::size_t>(d) +
                static_cast<std::size_t>(c)] = v;
          }
        }
      }
    }
    return f;
  };

  // sl(3) field: per-basis-direction low-frequency scalar, scaled so the
  // exp stays within 45% of the K radius by the group-path length bound.
  auto make_P = [&]() {
    const double budget =
        0.45 * model.H().k_radius / model.norm().scale();
    std::array<std::array<double, 4>, 8> coef{};
    double worst = 0.0;
    for (auto& c : coef) {
      double local = 0.0;
      for (double& v : c) {
        v = rng.normal();
        local += std::abs(v);
      }
      worst += local * local;
    }
    worst = std::sqrt(worst);
    const double scale = worst > 0.0 ? budget / worst : 0.0;
    PlasticField f = PlasticField::constant(dom, SL3Element());
    for (int k = 0; k < dom.nodes(2); ++k) {
      for (int j = 0; j < dom.nodes(1); ++j) {
        for (int i = 0; i < dom.nodes(0); ++i) {
          const std::size_t n = dom.node_index(i, j, k);
          const Vec3 x = dom.node_position(i, j, k);
          Mat3 xi = Mat3::zero();
          for (int b = 0; b < 8; ++b) {
            const auto& c = coef[static_cast<std::size_t>(b)];
            double s = c[0];
            int at = 1;
            for (int a = 0; a < d && at < 4; ++a, ++at) {
              s += c[static_cast<std::size_t>(at)] *
                   std::sin(pi * unit_coord(x, a));
            }
            xi = xi + sl3_basis()[static_cast<std::size_t>(b)] * (s * scale);
          }
          f.P[n] = retract_sl3(mat_exp(xi));
        }
      }
    }
    return f;
  };

  SeededStates out;
  out.y1 = make_y();
  out.y2 = make_y();
  out.P1 = make_P();
  out.P2 = make_P();
  (void)nn;
  return out;
}

}  // namespace plasthom

#endif
