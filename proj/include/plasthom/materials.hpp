#ifndef PLASTHOM_MATERIALS_HPP
#define PLASTHOM_MATERIALS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "plasthom/errors.hpp"
#include "plasthom/finsler.hpp"
#include "plasthom/mat3.hpp"
#include "plasthom/rng.hpp"

namespace plasthom {

// ---------------------------------------------------------------------------
// Periodic coefficient fields on the unit cell Q = [0,1)^3.
// ---------------------------------------------------------------------------

inline double unit_frac(double x) {
  double z = x - std::floor(x);
  if (z >= 1.0 || z < 0.0) z = 0.0;  // guards rounding at the seam
  return z;
}

inline Vec3 unit_frac(const Vec3& x) {
  return {unit_frac(x[0]), unit_frac(x[1]), unit_frac(x[2])};
}

enum class WeightKind { Homogeneous, TwoPhaseLaminate, Checkerboard };

// Piecewise-constant positive weight. Phase boundaries belong to the upper
// phase via half-open intervals [0, fraction), [fraction, 1): a measure-zero
// convention fixed for determinism.
struct WeightField {
  WeightKind kind = WeightKind::Homogeneous;
  double a = 1.0;  // first-phase weight (the only one for Homogeneous)
  double b = 1.0;
  int axis = 0;           // lamination direction
  double fraction = 0.5;  // first-phase volume fraction

  static WeightField homogeneous(double w) {
    WeightField f;
    f.kind = WeightKind::Homogeneous;
    f.a = f.b = w;
    f.validate();
    return f;
  }
  static WeightField laminate(double a, double b, int axis, double fraction) {
    WeightField f;
    f.kind = WeightKind::TwoPhaseLaminate;
    f.a = a;
    f.b = b;
    f.axis = axis;
    f.fraction = fraction;
    f.validate();
    return f;
  }
  static WeightField checkerboard(double a, double b) {
    WeightField f;
    f.kind = WeightKind::Checkerboard;
    f.a = a;
    f.b = b;
    f.validate();
    return f;
  }

  void validate() const {
    if (!(a > 0.0) || !(b > 0.0)) {
      throw ConfigError("WeightField: weights must be > 0 (coercivity)");
    }
    if (kind == WeightKind::TwoPhaseLaminate) {
      if (axis < 0 || axis > 2) throw ConfigError("WeightField: axis in 0..2");
      if (!(fraction > 0.0) || !(fraction < 1.0)) {
        throw ConfigError("WeightField: fraction in (0,1)");
      }
    }
  }

  double at(const Vec3& x) const {
    const Vec3 z = unit_frac(x);
    switch (kind) {
      case WeightKind::Homogeneous:
        return a;
      case WeightKind::TwoPhaseLaminate:
        return z[static_cast<std::size_t>(axis)] < fraction ? a : b;
      case WeightKind::Checkerboard: {
        int parity = 0;
        for (int i = 0; i < 3; ++i) {
          if (z[static_cast<std::size_t>(i)] >= 0.5) ++parity;
        }
        return parity % 2 == 0 ? a : b;
      }
    }
    return a;
  }

  double min_weight() const {
    return kind == WeightKind::Homogeneous ? a : std::min(a, b);
  }
  double max_weight() const {
    return kind == WeightKind::Homogeneous ? a : std::max(a, b);
  }
  // Exact unit-cell average (piecewise-constant geometry).
  double mean() const {
    switch (kind) {
      case WeightKind::Homogeneous:
        return a;
      case WeightKind::TwoPhaseLaminate:
        return a * fraction + b * (1.0 - fraction);
      case WeightKind::Checkerboard:
        return 0.5 * (a + b);
    }
    return a;
  }
};

// ---------------------------------------------------------------------------
// Elastic density W(x, F) = w(x) |F|^2 (plus a deliberately broken witness).
// ---------------------------------------------------------------------------

struct ElasticDensity {
  WeightField weight;
  // Witness density w(x)(|F|^2 + |F|^3) whose declared constants keep the
  // quadratic form: it violates the upper growth bound at large |F| and
  // exists so the validator has something to reject.
  bool cubic_probe = false;

  static ElasticDensity homogeneous_quadratic(double w) {
    return {WeightField::homogeneous(w), false};
  }
  static ElasticDensity two_phase_laminate(double a, double b, int axis,
                                           double fraction) {
    return {WeightField::laminate(a, b, axis, fraction), false};
  }
  static ElasticDensity checkerboard(double a, double b) {
    return {WeightField::checkerboard(a, b), false};
  }
  static ElasticDensity cubic_growth_probe(double w) {
    return {WeightField::homogeneous(w), true};
  }

  double value(const Vec3& x, const Mat3& F) const {
    const double w = weight.at(x);
    const double n2 = frobenius_inner(F, F);
    if (!cubic_probe) return w * n2;
    return w * (n2 + n2 * std::sqrt(n2));
  }

  // dW/dF; for the quadratic family 2 w(x) F.
  Mat3 grad(const Vec3& x, const Mat3& F) const {
    const double w = weight.at(x);
    if (!cubic_probe) return F * (2.0 * w);
    return F * (w * (2.0 + 3.0 * frobenius(F)));
  }

  // Declared growth/Lipschitz constants:
  //   c1 |F|^2 <= W(x,F) <= c2 (|F|^2 + 1)
  //   |W(x,F1) - W(x,F2)| <= c3 (1 + |F1| + |F2|) |F1 - F2|
  double c1() const { return weight.min_weight(); }
  double c2() const { return weight.max_weight() + 1.0; }
  double c3() const { return weight.max_weight(); }
};

// ---------------------------------------------------------------------------
// Hardening density H(x, P) = a(x) |P - I|^2 on K, Infinite outside.
// ---------------------------------------------------------------------------

struct HardeningDensity {
  WeightField weight;
  double k_radius = 0.5;  // r of K = {D_sym(I, F) <= r}

  static HardeningDensity quadratic_distance_to_identity(WeightField w,
                                                         double r) {
    if (!(r > 0.0)) throw ConfigError("HardeningDensity: K radius must be > 0");
    return {w, r};
  }
};

inline constexpr double infinite_energy =
    std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// The material model: integrand triple (W, H, q) plus the Finsler norm that
// shapes K. Immutable after construction; evaluation is pure (the geodesic
// cache inside K is internally synchronized).
// ---------------------------------------------------------------------------

class MaterialModel {
 public:
  MaterialModel(ElasticDensity W, HardeningDensity H, double q,
                MinkowskiNorm norm = {})
      : W_(W), H_(H), q_(q), norm_(norm), K_(norm, H.k_radius) {
    if (!(q > 3.0)) {
      throw ConfigError("MaterialModel: regularization exponent q > 3 "
                        "required, got " + std::to_string(q));
    }
    W_.weight.validate();
    H_.weight.validate();
  }

  const ElasticDensity& W() const { return W_; }
  const HardeningDensity& H() const { return H_; }
  double q() const { return q_; }
  const MinkowskiNorm& norm() const { return norm_; }
  const KRegion& K() const { return K_; }

  double c1() const { return W_.c1(); }
  double c2() const { return W_.c2(); }
  double c3() const { return W_.c3(); }
  // |F| + |F^-1| <= c_K on K: D_sym(I,F) = D_sym(I,F^-1), so both factors
  // sit within k_frobenius_bound of I.
  double c_K() const {
    return 2.0 * std::sqrt(3.0) +
           2.0 * k_frobenius_bound(norm_, H_.k_radius);
  }
  // |H(x,P1) - H(x,P2)| <= L_H |P1 - P2| on K, from |P - I| bounded there.
  double L_H() const {
    return 2.0 * H_.weight.max_weight() * k_frobenius_bound(norm_, H_.k_radius);
  }

 private:
  ElasticDensity W_;
  HardeningDensity H_;
  double q_;
  MinkowskiNorm norm_;
  KRegion K_;
};

inline double eval_W(const MaterialModel& m, const Vec3& x, const Mat3& F) {
  return m.W().value(x, F);
}

inline Mat3 eval_W_grad(const MaterialModel& m, const Vec3& x, const Mat3& F) {
  return m.W().grad(x, F);
}

inline double eval_H(const MaterialModel& m, const Vec3& x,
                     const SL3Element& P) {
  if (!m.K().contains(P)) return infinite_energy;
  const Mat3 d = P.m - Mat3::identity();
  return m.H().weight.at(x) * frobenius_inner(d, d);
}

// Exact unit-cell average of H(., P) for P in K (weights are piecewise
// constant on coordinate-aligned phases).
inline double mean_H(const MaterialModel& m, const SL3Element& P) {
  if (!m.K().contains(P)) return infinite_energy;
  const Mat3 d = P.m - Mat3::identity();
  return m.H().weight.mean() * frobenius_inner(d, d);
}

// ---------------------------------------------------------------------------
// Hypothesis validator.
// ---------------------------------------------------------------------------

struct ValidationReport {
  int samples = 0;
  double observed_c1 = std::numeric_limits<double>::infinity();  // min W/|F|^2
  double observed_c2 = 0.0;  // max W/(|F|^2+1)
  double observed_c3 = 0.0;  // max Lipschitz ratio for W
  double observed_L_H = 0.0;  // max Lipschitz ratio for H on K
  double declared_c1 = 0.0;
  double declared_c2 = 0.0;
  double declared_c3 = 0.0;
  double declared_L_H = 0.0;
};

namespace detail {

inline Mat3 random_mat3(Rng& rng) {
  Mat3 m;
  for (int e = 0; e < 9; ++e) m.a[e] = rng.normal();
  return m;
}

[[noreturn]] inline void assumption_failure(const std::string& inequality,
                                            const Vec3& x, double nF,
                                            double lhs, double rhs,
                                            int sample) {
  throw AssumptionViolated(
      "validate_assumptions: " + inequality + " failed: " +
      std::to_string(lhs) + " vs " + std::to_string(rhs) + " at x = (" +
      std::to_string(x[0]) + ", " + std::to_string(x[1]) + ", " +
      std::to_string(x[2]) + "), |F| = " + std::to_string(nF) + " (sample " +
      std::to_string(sample) + ")");
}

}  // namespace detail

// Monte-Carlo check of the growth and Lipschitz hypotheses against the
// model's declared constants. Every 8th elastic sample is rescaled to
// |F| = 10 so super-quadratic densities cannot hide at small strains.
inline ValidationReport validate_assumptions(const MaterialModel& model,
                                             int samples,
                                             std::uint64_t seed = 20240804) {
  if (samples < 1) throw ConfigError("validate_assumptions: samples >= 1");
  Rng rng(seed);
  ValidationReport report;
  report.samples = samples;
  report.declared_c1 = model.c1();
  report.declared_c2 = model.c2();
  report.declared_c3 = model.c3();
  report.declared_L_H = model.L_H();
  const double slack = 1e-9;

  for (int i = 0; i < samples; ++i) {
    const Vec3 x{rng.uniform(), rng.uniform(), rng.uniform()};
    Mat3 F1 = detail::random_mat3(rng);
    const double n1_raw = frobenius(F1);
    if (n1_raw > 0.0) {
      const double target = (i % 8 == 7) ? 10.0 : rng.uniform(0.1, 8.0);
      F1 = F1 * (target / n1_raw);
    }
    const Mat3 F2 = F1 + detail::random_mat3(rng) * 0.5;

    for (const Mat3* F : std::initializer_list<const Mat3*>{&F1, &F2}) {
      const double nF = frobenius(*F);
      const double n2 = nF * nF;
      const double w = eval_W(model, x, *F);
      if (w < report.declared_c1 * n2 - slack * (1.0 + n2)) {
        detail::assumption_failure("2-coercivity c1|F|^2 <= W", x, nF, w,
                                   report.declared_c1 * n2, i);
      }
      if (w > report.declared_c2 * (n2 + 1.0) + slack * (1.0 + n2)) {
        detail::assumption_failure("quadratic growth W <= c2(|F|^2+1)", x, nF,
                                   w, report.declared_c2 * (n2 + 1.0), i);
      }
      if (n2 > 1e-12) {
        report.observed_c1 = std::min(report.observed_c1, w / n2);
      }
      report.observed_c2 = std::max(report.observed_c2, w / (n2 + 1.0));
    }

    const double diff = frobenius(F1 - F2);
    if (diff > 1e-12) {
      const double lip = std::abs(eval_W(model, x, F1) - eval_W(model, x, F2));
      const double bound =
          (1.0 + frobenius(F1) + frobenius(F2)) * diff;
      if (lip > report.declared_c3 * bound + slack * (1.0 + lip)) {
        detail::assumption_failure("2-Lipschitz |dW| <= c3(1+|F1|+|F2|)|dF|",
                                   x, frobenius(F1), lip,
                                   report.declared_c3 * bound, i);
      }
      report.observed_c3 = std::max(report.observed_c3, lip / bound);
    }

    // Hardening Lipschitz bound on K; samples stay in K by the group-path
    // upper bound, so eval_H is finite without geodesic solves.
    const SL3Element P1 =
        random_sl3_in_ball(rng, model.norm(), 0.9 * model.H().k_radius);
    const SL3Element P2 =
        random_sl3_in_ball(rng, model.norm(), 0.9 * model.H().k_radius);
    const double dP = frobenius(P1.m - P2.m);
    if (dP > 1e-12) {
      const double h1 = eval_H(model, x, P1);
      const double h2 = eval_H(model, x, P2);
      const double ratio = std::abs(h1 - h2) / dP;
      if (ratio > report.declared_L_H + slack) {
        detail::assumption_failure("H Lipschitz on K", x, frobenius(P1.m),
                                   std::abs(h1 - h2),
                                   report.declared_L_H * dP, i);
      }
      report.observed_L_H = std::max(report.observed_L_H, ratio);
    }
  }
  if (!std::isfinite(report.observed_c1)) report.observed_c1 = 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// JSON ingestion: {"W": {...}, "H": {...}, "q": number, "K_radius": number,
// "norm": {...} (optional, default Frobenius)}.
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const char* key,
                                           const char* where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(std::string(where) + ": missing field '" + key + "'");
  }
  return *it;
}

inline double require_number(const nlohmann::json& j, const char* key,
                             const char* where) {
  const nlohmann::json& v = require_field(j, key, where);
  if (!v.is_number()) {
    throw ConfigError(std::string(where) + ": field '" + key +
                      "' must be a number");
  }
  return v.get<double>();
}

inline std::pair<double, double> require_weights(const nlohmann::json& j,
                                                 const char* where) {
  const nlohmann::json& v = require_field(j, "weights", where);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number()) {
    throw ConfigError(std::string(where) +
                      ": field 'weights' must be [a, b]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace detail

inline WeightField weight_field_from_json(const nlohmann::json& j,
                                          const char* where) {
  const nlohmann::json& kind = detail::require_field(j, "kind", where);
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "homogeneous") {
    return WeightField::homogeneous(detail::require_number(j, "weight", where));
  }
  if (k == "two-phase-laminate") {
    const auto [a, b] = detail::require_weights(j, where);
    return WeightField::laminate(
        a, b, static_cast<int>(detail::require_number(j, "axis", where)),
        detail::require_number(j, "fraction", where));
  }
  if (k == "checkerboard") {
    const auto [a, b] = detail::require_weights(j, where);
    return WeightField::checkerboard(a, b);
  }
  throw ConfigError(std::string(where) + ": unknown weight-field kind '" + k +
                    "'");
}

inline ElasticDensity elastic_from_json(const nlohmann::json& j) {
  const nlohmann::json& kind = detail::require_field(j, "kind", "W");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "homogeneous-quadratic") {
    return ElasticDensity::homogeneous_quadratic(
        detail::require_number(j, "weight", "W"));
  }
  if (k == "two-phase-laminate") {
    const auto [a, b] = detail::require_weights(j, "W");
    return ElasticDensity::two_phase_laminate(
        a, b, static_cast<int>(detail::require_number(j, "axis", "W")),
        detail::require_number(j, "fraction", "W"));
  }
  if (k == "checkerboard") {
    const auto [a, b] = detail::require_weights(j, "W");
    return ElasticDensity::checkerboard(a, b);
  }
  if (k == "cubic-probe") {
    return ElasticDensity::cubic_growth_probe(
        detail::require_number(j, "weight", "W"));
  }
  throw ConfigError("W: unknown elastic-density kind '" + k + "'");
}

inline MinkowskiNorm norm_from_json(const nlohmann::json& j) {
  MinkowskiNorm norm;
  const nlohmann::json& kind = detail::require_field(j, "kind", "norm");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "frobenius") {
    norm.kind = NormKind::Frobenius;
  } else if (k == "weighted-deviatoric") {
    norm.kind = NormKind::WeightedDeviatoric;
    norm.deviatoric_weight = detail::require_number(j, "weight", "norm");
    if (!(norm.deviatoric_weight > 0.0)) {
      throw ConfigError("norm: weight must be > 0");
    }
  } else {
    throw ConfigError("norm: unknown kind '" + k + "'");
  }
  return norm;
}

inline MaterialModel material_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("material: top level must be object");
  const ElasticDensity W =
      elastic_from_json(detail::require_field(j, "W", "material"));
  const nlohmann::json& hj = detail::require_field(j, "H", "material");
  const nlohmann::json& hkind = detail::require_field(hj, "kind", "H");
  const std::string hk = hkind.is_string() ? hkind.get<std::string>() : "";
  if (hk != "quadratic-distance-to-identity") {
    throw ConfigError("H: unknown hardening kind '" + hk + "'");
  }
  const WeightField hw =
      weight_field_from_json(detail::require_field(hj, "weight_field", "H"),
                             "H.weight_field");
  const double q = detail::require_number(j, "q", "material");
  const double r = detail::require_number(j, "K_radius", "material");
  MinkowskiNorm norm;
  if (j.contains("norm")) norm = norm_from_json(j["norm"]);
  return MaterialModel(W,
                       HardeningDensity::quadratic_distance_to_identity(hw, r),
                       q, norm);
}

}  // namespace plasthom

#endif
