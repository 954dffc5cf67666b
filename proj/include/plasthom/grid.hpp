#ifndef PLASTHOM_GRID_HPP
#define PLASTHOM_GRID_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "plasthom/errors.hpp"
#include "plasthom/mat3.hpp"

namespace plasthom {

// ---------------------------------------------------------------------------
// Box grids over 2- and 3-dimensional domains with optional cell masks.
// Nodes carry the fields; cells carry the quadrature. Trailing axes of a
// 2-d grid collapse to a single node layer so all loops run over (i,j,k).
// ---------------------------------------------------------------------------

class GridDomain {
 public:
  static GridDomain box(int d, const std::array<double, 3>& origin,
                        const std::array<double, 3>& extent,
                        const std::array<int, 3>& cells) {
    GridDomain g;
    if (d != 2 && d != 3) throw ConfigError("GridDomain: dimension 2 or 3");
    g.d_ = d;
    for (int a = 0; a < 3; ++a) {
      if (a < d) {
        if (cells[static_cast<std::size_t>(a)] < 2) {
          throw ConfigError("GridDomain: resolution >= 2 per axis");
        }
        if (!(extent[static_cast<std::size_t>(a)] > 0.0)) {
          throw ConfigError("GridDomain: extent must be positive");
        }
        g.cells_[a] = cells[static_cast<std::size_t>(a)];
        g.origin_[a] = origin[static_cast<std::size_t>(a)];
        g.extent_[a] = extent[static_cast<std::size_t>(a)];
      } else {
        g.cells_[a] = 1;
        g.origin_[a] = 0.0;
        g.extent_[a] = 1.0;
      }
    }
    return g;
  }

  static GridDomain cube(int d, double side, int cells_per_axis) {
    return box(d, {0.0, 0.0, 0.0}, {side, side, side},
               {cells_per_axis, cells_per_axis, cells_per_axis});
  }

  int dimension() const { return d_; }
  int cells(int axis) const { return axis < d_ ? cells_[axis] : 1; }
  int nodes(int axis) const { return axis < d_ ? cells_[axis] + 1 : 1; }
  double spacing(int axis) const {
    return extent_[axis] / static_cast<double>(cells_[axis]);
  }
  double origin(int axis) const { return origin_[axis]; }
  double extent(int axis) const { return extent_[axis]; }

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (int a = 0; a < d_; ++a) n *= static_cast<std::size_t>(cells_[a]);
    return n;
  }
  std::size_t node_count() const {
    std::size_t n = 1;
    for (int a = 0; a < d_; ++a) n *= static_cast<std::size_t>(cells_[a] + 1);
    return n;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < d_; ++a) v *= spacing(a);
    return v;
  }

  std::size_t node_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * nodes(1) + j) * nodes(0) + i;
  }
  std::size_t cell_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * cells(1) + j) * cells(0) + i;
  }

  Vec3 node_position(int i, int j, int k) const {
    Vec3 p{0.0, 0.0, 0.0};
    const int idx[3] = {i, j, k};
    for (int a = 0; a < d_; ++a) p[a] = origin_[a] + spacing(a) * idx[a];
    return p;
  }
  Vec3 cell_center(int i, int j, int k) const {
    Vec3 p{0.0, 0.0, 0.0};
    const int idx[3] = {i, j, k};
    for (int a = 0; a < d_; ++a) {
      p[a] = origin_[a] + spacing(a) * (idx[a] + 0.5);
    }
    return p;
  }

  // Mask semantics: empty = whole box; otherwise one 0/1 flag per cell.
  bool has_mask() const { return !mask_.empty(); }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  void set_mask(std::vector<std::uint8_t> m) {
    if (!m.empty() && m.size() != cell_count()) {
      throw ConfigError("GridDomain: mask size must equal cell count");
    }
    mask_ = std::move(m);
  }
  bool cell_active(std::size_t cell_idx) const {
    return mask_.empty() || mask_[cell_idx] != 0;
  }

  bool node_on_boundary(int i, int j, int k) const {
    const int idx[3] = {i, j, k};
    for (int a = 0; a < d_; ++a) {
      if (idx[a] == 0 || idx[a] == cells_[a]) return true;
    }
    return false;
  }

 private:
  int d_ = 3;
  int cells_[3] = {1, 1, 1};
  double origin_[3] = {0.0, 0.0, 0.0};
  double extent_[3] = {1.0, 1.0, 1.0};
  std::vector<std::uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// Node-based fields.
// ---------------------------------------------------------------------------

// d components per node, node-major: y[node * d + c].
struct DeformationField {
  std::vector<double> y;

  static DeformationField zeros(const GridDomain& dom) {
    DeformationField f;
    f.y.assign(dom.node_count() * static_cast<std::size_t>(dom.dimension()),
               0.0);
    return f;
  }

  // y(x) = A x + b restricted to the leading d-by-d block of A.
  static DeformationField affine(const GridDomain& dom, const Mat3& A,
                                 const Vec3& b) {
    const int d = dom.dimension();
    DeformationField f = zeros(dom);
    for (int k = 0; k < dom.nodes(2); ++k) {
      for (int j = 0; j < dom.nodes(1); ++j) {
        for (int i = 0; i < dom.nodes(0); ++i) {
          const Vec3 x = dom.node_position(i, j, k);
          const std::size_t base =
              dom.node_index(i, j, k) * static_cast<std::size_t>(d);
          for (int c = 0; c < d; ++c) {
            double v = b[c];
            for (int a = 0; a < d; ++a) v += A(c, a) * x[a];
            f.y[base + static_cast<std::size_t>(c)] = v;
          }
        }
      }
    }
    return f;
  }
};

// One SL(3) value per node; for d = 2 values embed the in-plane block with
// the third row/column of the identity.
struct PlasticField {
  std::vector<Mat3> P;

  static PlasticField constant(const GridDomain& dom, const SL3Element& v) {
    PlasticField f;
    f.P.assign(dom.node_count(), v.m);
    return f;
  }
};

// ---------------------------------------------------------------------------
// Cell-centered gradients: the gradient of the multilinear interpolant at
// the cell center, i.e. face-averaged node differences. Exact on affines,
// and for zero-boundary fields the cell-sum telescopes to exactly zero —
// the discrete mean-zero property the cell formula's convexity argument
// needs.
// ---------------------------------------------------------------------------

namespace gridd {

// Corner node indices of cell (i,j,k); bit a of the corner id selects the
// upper node along axis a. count = 2^d.
inline int cell_corners(const GridDomain& dom, int i, int j, int k,
                        std::size_t out[8]) {
  const int d = dom.dimension();
  const int count = 1 << d;
  for (int c = 0; c < count; ++c) {
    const int ci = i + (c & 1);
    const int cj = j + ((c >> 1) & 1);
    const int ck = d == 3 ? k + ((c >> 2) & 1) : k;
    out[c] = dom.node_index(ci, cj, ck);
  }
  return count;
}

// grad[a] of the multilinear interpolant at the cell center from the 2^d
// corner values (ordered as in cell_corners).
inline void cell_gradient(const GridDomain& dom, const double vals[8],
                          double grad[3]) {
  const int d = dom.dimension();
  const int count = 1 << d;
  for (int a = 0; a < 3; ++a) grad[a] = 0.0;
  for (int a = 0; a < d; ++a) {
    double diff = 0.0;
    for (int c = 0; c < count; ++c) {
      diff += (c >> a) & 1 ? vals[c] : -vals[c];
    }
    grad[a] = diff / (static_cast<double>(count / 2) * dom.spacing(a));
  }
}

// Scatter weight of corner c in d(grad[a])/d(corner value): +-1/(2^{d-1} h).
inline double corner_weight(const GridDomain& dom, int corner, int axis) {
  const int half = 1 << (dom.dimension() - 1);
  const double sign = (corner >> axis) & 1 ? 1.0 : -1.0;
  return sign / (static_cast<double>(half) * dom.spacing(axis));
}

// Average of the corner values: the cell-center value of the interpolant.
inline double cell_average(const GridDomain& dom, const double vals[8]) {
  const int count = 1 << dom.dimension();
  double s = 0.0;
  for (int c = 0; c < count; ++c) s += vals[c];
  return s / count;
}

}  // namespace gridd

// Deformation gradient of y at the center of cell (i,j,k), embedded
// plane-strain style for d = 2: in-plane block from the interpolant,
// trailing diagonal 1 (the deformation extends by y3 = x3).
inline Mat3 cell_deformation_gradient(const GridDomain& dom,
                                      const DeformationField& y, int i, int j,
                                      int k) {
  const int d = dom.dimension();
  std::size_t corners[8];
  const int count = gridd::cell_corners(dom, i, j, k, corners);
  Mat3 G = Mat3::zero();
  double vals[8];
  double grad[3];
  for (int c = 0; c < d; ++c) {
    for (int n = 0; n < count; ++n) {
      vals[n] = y.y[corners[static_cast<std::size_t>(n)] *
                        static_cast<std::size_t>(d) +
                    static_cast<std::size_t>(c)];
    }
    gridd::cell_gradient(dom, vals, grad);
    for (int a = 0; a < d; ++a) G(c, a) = grad[a];
  }
  for (int a = d; a < 3; ++a) G(a, a) = 1.0;
  return G;
}

// Plastic value at the cell center (corner average; near K the average is
// within round-off-grade distance of the manifold).
inline Mat3 cell_plastic_average(const GridDomain& dom, const PlasticField& P,
                                 int i, int j, int k) {
  std::size_t corners[8];
  const int count = gridd::cell_corners(dom, i, j, k, corners);
  Mat3 s = Mat3::zero();
  for (int n = 0; n < count; ++n) s = s + P.P[corners[n]];
  return s * (1.0 / count);
}

// |dP/dx|^2 summed over axes at the cell center (Euclidean norm of the
// third-order gradient tensor, squared).
inline double cell_plastic_gradient_sq(const GridDomain& dom,
                                       const PlasticField& P, int i, int j,
                                       int k) {
  const int d = dom.dimension();
  std::size_t corners[8];
  const int count = gridd::cell_corners(dom, i, j, k, corners);
  double total = 0.0;
  for (int a = 0; a < d; ++a) {
    const double scale = 1.0 / (static_cast<double>(count / 2) * dom.spacing(a));
    for (int e = 0; e < 9; ++e) {
      double diff = 0.0;
      for (int n = 0; n < count; ++n) {
        const double v = P.P[corners[n]].a[e];
        diff += (n >> a) & 1 ? v : -v;
      }
      const double g = diff * scale;
      total += g * g;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Nodal finite-difference gradient: central interior, 3-point one-sided at
// the boundary (second order on both stencils; exact on affines).
// ---------------------------------------------------------------------------

inline std::vector<std::array<double, 3>> grad_fd(
    const std::vector<double>& v, const GridDomain& dom) {
  if (v.size() != dom.node_count()) {
    throw ConfigError("grad_fd: field size must equal node count");
  }
  std::vector<std::array<double, 3>> out(v.size(),
                                         {0.0, 0.0, 0.0});
  const int d = dom.dimension();
  for (int k = 0; k < dom.nodes(2); ++k) {
    for (int j = 0; j < dom.nodes(1); ++j) {
      for (int i = 0; i < dom.nodes(0); ++i) {
        const std::size_t at = dom.node_index(i, j, k);
        const int idx[3] = {i, j, k};
        for (int a = 0; a < d; ++a) {
          const double h = dom.spacing(a);
          const int n = dom.cells(a);
          const int p = idx[a];
          auto shifted = [&](int delta) {
            int q[3] = {i, j, k};
            q[a] += delta;
            return v[dom.node_index(q[0], q[1], q[2])];
          };
          double g;
          if (p == 0) {
            g = (-3.0 * shifted(0) + 4.0 * shifted(1) - shifted(2)) /
                (2.0 * h);
          } else if (p == n) {
            g = (3.0 * shifted(0) - 4.0 * shifted(-1) + shifted(-2)) /
                (2.0 * h);
          } else {
            g = (shifted(1) - shifted(-1)) / (2.0 * h);
          }
          out[at][a] = g;
        }
      }
    }
  }
  return out;
}

// Component-wise nodal gradient of a deformation field: per node the d x d
// Jacobian embedded in a Mat3 (zeros elsewhere).
inline std::vector<Mat3> grad_fd(const DeformationField& y,
                                 const GridDomain& dom) {
  const int d = dom.dimension();
  const std::size_t nn = dom.node_count();
  if (y.y.size() != nn * static_cast<std::size_t>(d)) {
    throw ConfigError("grad_fd: deformation field size mismatch");
  }
  std::vector<Mat3> out(nn, Mat3::zero());
  std::vector<double> comp(nn);
  for (int c = 0; c < d; ++c) {
    for (std::size_t n = 0; n < nn; ++n) {
      comp[n] = y.y[n * static_cast<std::size_t>(d) + c];
    }
    const auto g = grad_fd(comp, dom);
    for (std::size_t n = 0; n < nn; ++n) {
      for (int a = 0; a < d; ++a) out[n](c, a) = g[n][a];
    }
  }
  return out;
}

}  // namespace plasthom

#endif
