#ifndef PLASTHOM_FINSLER_HPP
#define PLASTHOM_FINSLER_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "plasthom/errors.hpp"
#include "plasthom/lbfgs.hpp"
#include "plasthom/mat3.hpp"
#include "plasthom/reduce.hpp"
#include "plasthom/rng.hpp"

namespace plasthom {

// ---------------------------------------------------------------------------
// Minkowski norms on sl(3) and their left translations.
// ---------------------------------------------------------------------------

enum class NormKind { Frobenius, WeightedDeviatoric };

// Positively 1-homogeneous, coercive, strictly convex gauge on sl(3).
// Since sl(3) is trace-free, the deviatoric part of a tangent is the tangent
// itself; WeightedDeviatoric is therefore a uniform rescaling by w_d.
struct MinkowskiNorm {
  NormKind kind = NormKind::Frobenius;
  double deviatoric_weight = 1.0;  // w_d > 0, used by WeightedDeviatoric

  double scale() const {
    return kind == NormKind::Frobenius ? 1.0 : deviatoric_weight;
  }
  // Declared coercivity/growth constants: c4 |M| <= delta_I(M) <= c5 |M|.
  double c4() const { return scale(); }
  double c5() const { return scale(); }
};

inline double delta_I(const MinkowskiNorm& norm, const Sl3Tangent& M) {
  return norm.scale() * frobenius(M.m);
}

inline constexpr double tangent_check_tol = 1e-6;

// Left-translated norm: Delta(F, M) = delta_I(F^{-1} M) for M tangent at F.
// The residual trace of F^{-1}M (at most 1e-10 for honest tangents) is
// projected out before measuring.
inline double delta(const MinkowskiNorm& norm, const SL3Element& F,
                    const Mat3& M) {
  const Mat3 v = inverse(F.m) * M;
  const double tr = std::abs(trace(v));
  if (tr > tangent_check_tol) {
    throw NotTangent("delta: |trace(F^-1 M)| = " + std::to_string(tr) +
                     " > 1e-6, M is not tangent at F");
  }
  return delta_I(norm, project_sl3(v));
}

// ---------------------------------------------------------------------------
// Discrete paths and their Finsler length.
// ---------------------------------------------------------------------------

// Uniformly parametrized sampled curve in SL(3); n = nodes.size()-1 >= 1.
struct DiscretePath {
  std::vector<SL3Element> nodes;

  int segments() const { return static_cast<int>(nodes.size()) - 1; }
};

namespace detail {

// Body velocity of the group segment through (a, b): log(a^{-1} b).
// Well-defined while consecutive nodes stay on the principal branch;
// mat_log throws LogDivergence otherwise and callers must refine.
inline Sl3Tangent segment_log(const Mat3& a, const Mat3& b) {
  return project_sl3(mat_log(inverse(a) * b));
}

}  // namespace detail

// Midpoint-rule length. Along each group segment the body velocity
// n·log(Phi_i^{-1} Phi_{i+1}) is constant, so the left-invariant integrand
// is constant too and the midpoint evaluation collapses to delta_I of the
// segment log; the 1-homogeneity of delta_I cancels the n against the 1/n
// quadrature weight. Additive under concatenation by construction.
inline double finsler_length(const MinkowskiNorm& norm,
                             const DiscretePath& path) {
  if (path.segments() < 1) {
    throw ConfigError("finsler_length: path needs at least 2 nodes");
  }
  KahanSum sum;
  for (int i = 0; i < path.segments(); ++i) {
    sum.add(delta_I(norm, detail::segment_log(path.nodes[i].m,
                                              path.nodes[i + 1].m)));
  }
  return sum.value();
}

// ---------------------------------------------------------------------------
// Shortest paths by direct discrete minimization.
// ---------------------------------------------------------------------------

struct GeodesicResult {
  DiscretePath path;
  double length = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct GeodesicOptions {
  int max_iterations = 10000;
  double rel_tol = 1e-10;  // relative objective decrease per accepted step
  bool throw_on_cap = true;
  // Optional warm start with exactly n+1 nodes (e.g. an injected refinement
  // of a coarser solution, or a concatenation of admissible paths). When
  // absent the group path t -> F0 exp(t log(F0^{-1} F1)) is used.
  const DiscretePath* initial = nullptr;
};

namespace detail {

inline DiscretePath group_path(const SL3Element& F0, const SL3Element& F1,
                               int n) {
  const Mat3 L = mat_log(inverse(F0.m) * F1.m);
  DiscretePath path;
  path.nodes.reserve(static_cast<std::size_t>(n) + 1);
  path.nodes.push_back(F0);
  for (int i = 1; i < n; ++i) {
    path.nodes.push_back(
        SL3Element::retracted(F0.m * mat_exp(L * (static_cast<double>(i) / n))));
  }
  path.nodes.push_back(F1);
  return path;
}

// Resample to constant speed using within-segment group interpolation.
// Splitting a group segment is length-exact, but resampled nodes cross
// segment boundaries, so the caller compares lengths and keeps the shorter
// parametrization.
inline DiscretePath reparametrize_constant_speed(const MinkowskiNorm& norm,
                                                 const DiscretePath& path) {
  const int n = path.segments();
  std::vector<double> seg_len(static_cast<std::size_t>(n));
  std::vector<Mat3> seg_log(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    seg_log[i] = detail::segment_log(path.nodes[i].m, path.nodes[i + 1].m).m;
    seg_len[i] = delta_I(norm, project_sl3(seg_log[i]));
    total += seg_len[i];
  }
  if (total <= 0.0) return path;
  DiscretePath out;
  out.nodes.resize(path.nodes.size());
  out.nodes.front() = path.nodes.front();
  out.nodes.back() = path.nodes.back();
  int seg = 0;
  double consumed = 0.0;
  for (int k = 1; k < n; ++k) {
    const double target = total * k / n;
    while (seg < n - 1 && consumed + seg_len[seg] < target) {
      consumed += seg_len[seg];
      ++seg;
    }
    const double local =
        seg_len[seg] > 0.0 ? (target - consumed) / seg_len[seg] : 0.0;
    out.nodes[static_cast<std::size_t>(k)] = SL3Element::retracted(
        path.nodes[seg].m * mat_exp(seg_log[seg] * local));
  }
  return out;
}

}  // namespace detail

// Minimizes the kinetic-energy form (n/2)·sum delta_I(log(Phi_i^{-1}
// Phi_{i+1}))^2 over the interior nodes, each trial retracted to SL(3).
// Energy minimizers are constant-speed length minimizers, and the quadratic
// form removes the reparametrization null-space of the raw length. The
// reported length is finsler_length of the returned path.
inline GeodesicResult geodesic(const MinkowskiNorm& norm, const SL3Element& F0,
                               const SL3Element& F1, int n,
                               const GeodesicOptions& opts = {}) {
  if (n < 8) throw ConfigError("geodesic: n >= 8 required");
  DiscretePath path;
  if (opts.initial != nullptr) {
    if (opts.initial->segments() != n) {
      throw ConfigError("geodesic: warm-start path has wrong node count");
    }
    path = *opts.initial;
    path.nodes.front() = F0;
    path.nodes.back() = F1;
  } else {
    path = detail::group_path(F0, F1, n);
  }

  const double w = norm.scale();
  const std::size_t dof = static_cast<std::size_t>(9) * (n - 1);
  std::vector<double> x(dof);
  for (int k = 1; k < n; ++k) {
    for (int e = 0; e < 9; ++e)
      x[static_cast<std::size_t>(9 * (k - 1) + e)] = path.nodes[k].m.a[e];
  }

  const Mat3 first = F0.m;
  const Mat3 last = F1.m;
  auto node_at = [&](const std::vector<double>& v, int k) -> Mat3 {
    if (k == 0) return first;
    if (k == n) return last;
    Mat3 m;
    for (int e = 0; e < 9; ++e)
      m.a[e] = v[static_cast<std::size_t>(9 * (k - 1) + e)];
    return m;
  };

  // Squared segment speed; cheap enough that the local finite-difference
  // gradient below re-evaluates only the two segments a node touches.
  auto seg_energy = [&](const Mat3& a, const Mat3& b) -> double {
    const double s = w * frobenius(detail::segment_log(a, b).m);
    return s * s;
  };

  auto objective = [&](const std::vector<double>& v,
                       std::vector<double>* grad) -> double {
    std::vector<double> seg(static_cast<std::size_t>(n));
    KahanSum total;
    for (int i = 0; i < n; ++i) {
      seg[i] = seg_energy(node_at(v, i), node_at(v, i + 1));
      total.add(seg[i]);
    }
    const double f = 0.5 * n * total.value();
    if (grad != nullptr) {
      grad->assign(v.size(), 0.0);
      std::vector<double> vp = v;
      for (int k = 1; k < n; ++k) {
        for (int e = 0; e < 9; ++e) {
          const std::size_t idx = static_cast<std::size_t>(9 * (k - 1) + e);
          const double h = 1e-7 * (1.0 + std::abs(v[idx]));
          vp[idx] = v[idx] + h;
          const double up = seg_energy(node_at(vp, k - 1), node_at(vp, k)) +
                            seg_energy(node_at(vp, k), node_at(vp, k + 1));
          vp[idx] = v[idx] - h;
          const double dn = seg_energy(node_at(vp, k - 1), node_at(vp, k)) +
                            seg_energy(node_at(vp, k), node_at(vp, k + 1));
          vp[idx] = v[idx];
          (*grad)[idx] = 0.5 * n * (up - dn) / (2.0 * h);
        }
      }
    }
    return f;
  };

  auto project = [&](std::vector<double>& v) {
    for (int k = 1; k < n; ++k) {
      Mat3 m = node_at(v, k);
      m = retract_sl3(m);
      for (int e = 0; e < 9; ++e)
        v[static_cast<std::size_t>(9 * (k - 1) + e)] = m.a[e];
    }
  };

  MinimizeOptions mopts;
  mopts.max_iterations = opts.max_iterations;
  mopts.f_rel_tol = opts.rel_tol;
  mopts.grad_tol = 1e-12;
  mopts.memory = 10;
  const MinimizeResult mres = minimize(x, objective, project, mopts);
  if (!mres.converged && opts.throw_on_cap) {
    throw NoConvergence("geodesic: iteration cap " +
                        std::to_string(opts.max_iterations) +
                        " hit before the relative-decrease criterion");
  }

  GeodesicResult result;
  result.converged = mres.converged;
  result.iterations = mres.iterations;
  DiscretePath solved;
  solved.nodes.resize(static_cast<std::size_t>(n) + 1);
  solved.nodes.front() = F0;
  solved.nodes.back() = F1;
  for (int k = 1; k < n; ++k) {
    solved.nodes[static_cast<std::size_t>(k)] =
        SL3Element::retracted(node_at(x, k));
  }
  const double raw_len = finsler_length(norm, solved);
  DiscretePath uniform = detail::reparametrize_constant_speed(norm, solved);
  const double uni_len = finsler_length(norm, uniform);
  if (uni_len <= raw_len) {
    result.path = std::move(uniform);
    result.length = uni_len;
  } else {
    result.path = std::move(solved);
    result.length = raw_len;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Geodesic cache (exact-key, mutex-guarded).
// ---------------------------------------------------------------------------

class GeodesicCache {
 public:
  GeodesicResult get_or_solve(const MinkowskiNorm& norm, const SL3Element& F,
                              const SL3Element& G, int n,
                              const GeodesicOptions& opts = {}) {
    Key key{};
    for (int e = 0; e < 9; ++e) {
      key[static_cast<std::size_t>(e)] = F.m.a[e];
      key[static_cast<std::size_t>(9 + e)] = G.m.a[e];
    }
    key[18] = static_cast<double>(n);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    GeodesicResult solved = geodesic(norm, F, G, n, opts);
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = map_.emplace(key, std::move(solved));
    (void)inserted;
    return it->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

 private:
  using Key = std::array<double, 19>;
  std::map<Key, GeodesicResult> map_;
  mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Exponential and logarithm maps of the Finsler structure.
// Tangents at F are passed in body coordinates xi = F^{-1} M (trace-free).
// ---------------------------------------------------------------------------

inline constexpr int geodesic_default_n = 32;

// Initial velocity of the shortest path from F to G, rescaled so that
// delta_I of the result equals the measured distance D(F, G).
inline Sl3Tangent log_map(const MinkowskiNorm& norm, const SL3Element& F,
                          const SL3Element& G, int n = geodesic_default_n,
                          const GeodesicOptions& opts = {}) {
  const GeodesicResult res = geodesic(norm, F, G, n, opts);
  if (res.length <= 0.0) return project_sl3(Mat3::zero());
  const Sl3Tangent first =
      detail::segment_log(res.path.nodes[0].m, res.path.nodes[1].m);
  const double speed = delta_I(norm, first);
  if (speed <= 0.0) return project_sl3(Mat3::zero());
  return project_sl3(first.m * (res.length / speed));
}

// Endpoint of the unit-time geodesic leaving F with body velocity xi,
// computed by shooting on the discrete geodesic functional: quasi-Newton in
// log coordinates with the group exponential as the initial guess.
inline SL3Element exp_map(const MinkowskiNorm& norm, const SL3Element& F,
                          const Sl3Tangent& xi, int n = geodesic_default_n,
                          int max_shots = 100) {
  const double speed = delta_I(norm, xi);
  if (speed == 0.0) return F;
  Mat3 z = xi.m;  // current log-coordinate guess for F^{-1} G
  SL3Element G = SL3Element::retracted(F.m * mat_exp(z));
  const double tol = 1e-8 * std::max(1.0, speed);
  // Damped fixed-point iteration on z -> z + (xi - logmap(F, G(z))); the
  // undamped map can overshoot at 0.5-ball curvature, so the step halves
  // whenever the residual fails to improve on the best seen so far. Solves
  // stay cold: the discrete log is then a deterministic function of G and
  // the iteration's root is exact, with only a ~1e-6 solver-noise floor.
  double alpha = 1.0;
  double best_err = std::numeric_limits<double>::infinity();
  Mat3 z_best = z;
  for (int shot = 0; shot < max_shots; ++shot) {
    const Sl3Tangent v = log_map(norm, F, G, n);
    const Mat3 err = xi.m - v.m;
    const double e = frobenius(err);
    if (e <= tol) return G;
    if (e < best_err) {
      best_err = e;
      z_best = z;
      alpha = std::min(1.0, 1.5 * alpha);
    } else {
      alpha *= 0.5;
      z = z_best;
      if (alpha < 1e-4) break;
    }
    z = project_sl3(z + err * alpha).m;
    G = SL3Element::retracted(F.m * mat_exp(z));
  }
  // Discrete-solve noise can leave a residual floor above tol; accept the
  // best iterate when it is already endpoint-accurate for the ball scale.
  if (best_err <= 1e-5 * std::max(1.0, speed)) {
    return SL3Element::retracted(F.m * mat_exp(z_best));
  }
  throw NoConvergence("exp_map: shooting did not reach the requested "
                      "initial velocity");
}

// ---------------------------------------------------------------------------
// Geodesic interpolation gamma.
// ---------------------------------------------------------------------------

enum class GammaMode { GeodesicExact, GroupExp };

inline GammaMode gamma_mode_from_string(const std::string& s) {
  if (s == "geodesic-exact") return GammaMode::GeodesicExact;
  if (s == "group-exp") return GammaMode::GroupExp;
  throw ConfigError("unknown interpolation mode '" + s +
                    "' (expected geodesic-exact or group-exp)");
}

// gamma(t, F, G): t = 0 -> F and t = 1 -> G bit-exactly. GroupExp follows
// the one-parameter group segment (fast surrogate, identical endpoints);
// GeodesicExact samples the solved constant-speed shortest path, one solve
// per endpoint pair when a cache is supplied.
inline SL3Element gamma_interp(const MinkowskiNorm& norm, double t,
                               const SL3Element& F, const SL3Element& G,
                               GammaMode mode, GeodesicCache* cache = nullptr,
                               int n = geodesic_default_n) {
  if (t < 0.0 || t > 1.0) throw ConfigError("gamma_interp: t outside [0,1]");
  if (t == 0.0) return F;
  if (t == 1.0) return G;
  if (mode == GammaMode::GroupExp) {
    const Mat3 L = mat_log(inverse(F.m) * G.m);
    return SL3Element::retracted(F.m * mat_exp(L * t));
  }
  GeodesicResult res;
  if (cache != nullptr) {
    res = cache->get_or_solve(norm, F, G, n);
  } else {
    res = geodesic(norm, F, G, n);
  }
  const int segs = res.path.segments();
  const double pos = t * segs;
  int i = static_cast<int>(pos);
  if (i >= segs) i = segs - 1;
  const double local = pos - i;
  const Mat3 L = mat_log(inverse(res.path.nodes[static_cast<std::size_t>(i)].m) *
                         res.path.nodes[static_cast<std::size_t>(i) + 1].m);
  return SL3Element::retracted(
      res.path.nodes[static_cast<std::size_t>(i)].m * mat_exp(L * local));
}

// ---------------------------------------------------------------------------
// The admissible set K: symmetrized-distance ball around the identity.
// ---------------------------------------------------------------------------

// Frobenius reach of the ball {D_sym(I, .) <= rho}: a near-minimal path from
// I has length L <= 2 rho, d|g|/dt <= |g| |g^-1 g_dot| gives |g| <= sqrt(3)
// e^{L/w} along it, hence |F - I| <= int |g_dot| <= sqrt(3) (L/w) e^{L/w}.
inline double k_frobenius_bound(const MinkowskiNorm& norm, double rho) {
  const double s = 2.0 * rho / norm.scale();
  return std::sqrt(3.0) * s * std::exp(s);
}

class KRegion {
 public:
  KRegion(const MinkowskiNorm& norm, double radius)
      : norm_(norm),
        radius_(radius),
        cache_(std::make_shared<GeodesicCache>()) {
    if (!(radius > 0.0)) throw ConfigError("KRegion: radius must be > 0");
  }

  const MinkowskiNorm& norm() const { return norm_; }
  double radius() const { return radius_; }

  // Solver-grade D_sym(I, F) = (D(I,F) + D(F,I)) / 2.
  double distance_to_identity(const SL3Element& F) const {
    const SL3Element eye;
    const GeodesicResult fwd =
        cache_->get_or_solve(norm_, eye, F, geodesic_default_n);
    const GeodesicResult bwd =
        cache_->get_or_solve(norm_, F, eye, geodesic_default_n);
    return 0.5 * (fwd.length + bwd.length);
  }

  // Bracketed membership: the group path gives an upper bound
  // D_sym <= delta_I(log F) (log F and log F^{-1} = -log F have equal norm
  // for the shipped symmetric norms), and k_frobenius_bound gives a sound
  // rejection threshold. Only queries whose bracket straddles the radius pay
  // for a geodesic solve.
  bool contains(const SL3Element& F, double tol = 1e-6) const {
    const double reach = k_frobenius_bound(norm_, radius_ + tol);
    if (frobenius(F.m - Mat3::identity()) > reach) return false;
    double upper;
    try {
      const Mat3 L = mat_log(F.m);
      upper = 0.5 * (delta_I(norm_, project_sl3(L)) +
                     delta_I(norm_, project_sl3(-L)));
    } catch (const LogDivergence&) {
      return false;  // far off the principal branch cannot be inside K
    }
    if (upper <= radius_ + tol) return true;
    return distance_to_identity(F) <= radius_ + tol;
  }

 private:
  MinkowskiNorm norm_;
  double radius_;
  std::shared_ptr<GeodesicCache> cache_;  // shared so KRegion stays copyable
};

// K-checked interpolation: both endpoints must lie in K.
inline SL3Element gamma_interp_in_K(const KRegion& K, double t,
                                    const SL3Element& F, const SL3Element& G,
                                    GammaMode mode,
                                    GeodesicCache* cache = nullptr) {
  if (!K.contains(F) || !K.contains(G)) {
    throw OutsideK("gamma_interp: endpoint outside K (radius " +
                   std::to_string(K.radius()) + ")");
  }
  return gamma_interp(K.norm(), t, F, G, mode, cache);
}

// ---------------------------------------------------------------------------
// Random sampling and probes.
// ---------------------------------------------------------------------------

// Random F = exp(xi) with delta_I(xi) <= max_delta: the group path bounds
// D_sym(I, F) by max_delta, so F is guaranteed inside the ball of that
// radius.
inline SL3Element random_sl3_in_ball(Rng& rng, const MinkowskiNorm& norm,
                                     double max_delta) {
  Mat3 m;
  for (int e = 0; e < 9; ++e) m.a[e] = rng.normal();
  Sl3Tangent xi = project_sl3(m);
  const double d = delta_I(norm, xi);
  const double target = max_delta * rng.uniform();
  if (d > 0.0) {
    xi = project_sl3(xi.m * (target / d));
  }
  return SL3Element::retracted(mat_exp(xi.m));
}

struct ProbeReport {
  int pairs = 0;
  int passes = 0;
  double pass_rate = 0.0;
  double worst_excursion = 0.0;  // max over nodes of D_sym(I,node) - radius
  int geodesic_failures = 0;
};

// Samples pairs inside the radius ball, solves their geodesics, and checks
// every path node stays inside K up to tolerance.
inline ProbeReport convexity_probe(const MinkowskiNorm& norm, double k_radius,
                                   int pairs, std::uint64_t seed = 20240801,
                                   int n = 16) {
  if (pairs < 1) throw ConfigError("convexity_probe: pairs >= 1");
  Rng rng(seed);
  KRegion K(norm, k_radius);
  ProbeReport report;
  report.pairs = pairs;
  const double tol = 1e-4;
  for (int p = 0; p < pairs; ++p) {
    const SL3Element F = random_sl3_in_ball(rng, norm, k_radius);
    const SL3Element G = random_sl3_in_ball(rng, norm, k_radius);
    GeodesicResult res;
    try {
      GeodesicOptions gopts;
      gopts.throw_on_cap = false;
      res = geodesic(norm, F, G, std::max(8, n), gopts);
    } catch (const Error&) {
      ++report.geodesic_failures;
      continue;
    }
    bool ok = true;
    for (const SL3Element& node : res.path.nodes) {
      if (!K.contains(node, tol)) {
        ok = false;
        const double excess = K.distance_to_identity(node) - k_radius;
        report.worst_excursion = std::max(report.worst_excursion, excess);
      }
    }
    if (ok) ++report.passes;
  }
  report.pass_rate = static_cast<double>(report.passes) / report.pairs;
  return report;
}

struct VelocityProbeReport {
  int pairs = 0;
  double c = 0.0;           // max over pairs of max_t |gamma_dot| / |G - F|
  double max_speed = 0.0;   // max observed |gamma_dot|
  int t_samples = 0;
};

// Measures the velocity-bound constant on random pairs in K by finite
// differences in t along gamma.
inline VelocityProbeReport velocity_probe(const MinkowskiNorm& norm,
                                          double k_radius, int pairs,
                                          GammaMode mode,
                                          std::uint64_t seed = 20240802,
                                          int t_samples = 64,
                                          GeodesicCache* cache = nullptr,
                                          int n = geodesic_default_n) {
  if (pairs < 1) throw ConfigError("velocity_probe: pairs >= 1");
  Rng rng(seed);
  VelocityProbeReport report;
  report.pairs = pairs;
  report.t_samples = t_samples;
  for (int p = 0; p < pairs; ++p) {
    const SL3Element F = random_sl3_in_ball(rng, norm, k_radius);
    const SL3Element G = random_sl3_in_ball(rng, norm, k_radius);
    const double sep = frobenius(G.m - F.m);
    if (sep <= 1e-12) continue;
    const double h = 1.0 / (4.0 * t_samples);
    double vmax = 0.0;
    for (int k = 1; k < t_samples; ++k) {
      const double t = static_cast<double>(k) / t_samples;
      const Mat3 a = gamma_interp(norm, t - h, F, G, mode, cache, n).m;
      const Mat3 b = gamma_interp(norm, t + h, F, G, mode, cache, n).m;
      vmax = std::max(vmax, frobenius(b - a) / (2.0 * h));
    }
    report.max_speed = std::max(report.max_speed, vmax);
    report.c = std::max(report.c, vmax / sep);
  }
  return report;
}

// Finite-difference sensitivity of gamma(1/2, F, G) to the second endpoint;
// the smooth-dependence constant reported for the gluing estimate.
inline double endpoint_sensitivity_probe(const MinkowskiNorm& norm,
                                         double k_radius, int pairs,
                                         GammaMode mode,
                                         std::uint64_t seed = 20240803) {
  Rng rng(seed);
  double worst = 0.0;
  const double h = 1e-5;
  for (int p = 0; p < pairs; ++p) {
    const SL3Element F = random_sl3_in_ball(rng, norm, 0.9 * k_radius);
    const SL3Element G = random_sl3_in_ball(rng, norm, 0.9 * k_radius);
    const Mat3 base = gamma_interp(norm, 0.5, F, G, mode).m;
    Mat3 dir;
    for (int e = 0; e < 9; ++e) dir.a[e] = rng.normal();
    Sl3Tangent xi = project_sl3(dir);
    const double nd = frobenius(xi.m);
    if (nd <= 0.0) continue;
    xi = project_sl3(xi.m * (h / nd));
    const SL3Element Gp = SL3Element::retracted(G.m * mat_exp(xi.m));
    const double dG = frobenius(Gp.m - G.m);
    if (dG <= 0.0) continue;
    const Mat3 moved = gamma_interp(norm, 0.5, F, Gp, mode).m;
    worst = std::max(worst, frobenius(moved - base) / dG);
  }
  return worst;
}

}  // namespace plasthom

#endif
