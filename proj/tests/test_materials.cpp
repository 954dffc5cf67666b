#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "plasthom/materials.hpp"
#include "plasthom/rng.hpp"

namespace ph = plasthom;
using nlohmann::json;

namespace {

ph::MaterialModel laminate_model() {
  return ph::MaterialModel(
      ph::ElasticDensity::two_phase_laminate(1.0, 4.0, 0, 0.5),
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::homogeneous(1.0), 0.5),
      4.0);
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ph::Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Materials, WeightFieldsArePeriodicAtRepresentablePoints) {
  const ph::WeightField lam = ph::WeightField::laminate(1.0, 4.0, 0, 0.5);
  const ph::WeightField chk = ph::WeightField::checkerboard(2.0, 7.0);
  for (double x : {0.0, 0.25, 0.5, 0.75}) {
    for (double y : {0.0, 0.5}) {
      const ph::Vec3 base{x, y, 0.25};
      for (double shift : {1.0, 2.0, -3.0, 17.0}) {
        const ph::Vec3 moved{x + shift, y + shift, 0.25 + shift};
        EXPECT_EQ(lam.at(base), lam.at(moved));
        EXPECT_EQ(chk.at(base), chk.at(moved));
      }
    }
  }
}

TEST(Materials, LaminatePhaseConvention) {
  // half-open phases: [0, fraction) -> a, [fraction, 1) -> b
  const ph::WeightField lam = ph::WeightField::laminate(1.0, 4.0, 0, 0.5);
  EXPECT_EQ(lam.at({0.0, 0.9, 0.9}), 1.0);
  EXPECT_EQ(lam.at({0.25, 0.0, 0.0}), 1.0);
  EXPECT_EQ(lam.at({0.5, 0.0, 0.0}), 4.0);  // boundary belongs to phase b
  EXPECT_EQ(lam.at({0.75, 0.0, 0.0}), 4.0);
  EXPECT_EQ(lam.at({1.0, 0.0, 0.0}), 1.0);  // seam wraps to 0
  EXPECT_NEAR(lam.mean(), 2.5, 1e-15);
}

TEST(Materials, CheckerboardParity) {
  const ph::WeightField chk = ph::WeightField::checkerboard(1.0, 4.0);
  EXPECT_EQ(chk.at({0.25, 0.25, 0.25}), 1.0);
  EXPECT_EQ(chk.at({0.75, 0.25, 0.25}), 4.0);
  EXPECT_EQ(chk.at({0.75, 0.75, 0.25}), 1.0);
  EXPECT_EQ(chk.at({0.75, 0.75, 0.75}), 4.0);
  EXPECT_NEAR(chk.mean(), 2.5, 1e-15);
}

TEST(Materials, ElasticValuesMatchHandComputation) {
  const ph::MaterialModel homog(
      ph::ElasticDensity::homogeneous_quadratic(1.0),
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::homogeneous(1.0), 0.5),
      4.0);
  EXPECT_NEAR(ph::eval_W(homog, {0.3, 0.6, 0.9}, ph::Mat3::identity()), 3.0,
              1e-15);

  const ph::MaterialModel lam = laminate_model();
  EXPECT_NEAR(ph::eval_W(lam, {0.25, 0.5, 0.5}, ph::Mat3::identity()), 3.0,
              1e-15);
  EXPECT_NEAR(ph::eval_W(lam, {0.75, 0.5, 0.5}, ph::Mat3::identity()), 12.0,
              1e-15);

  // declared constants of the headline laminate
  EXPECT_EQ(lam.c1(), 1.0);
  EXPECT_EQ(lam.c2(), 5.0);
  EXPECT_EQ(lam.c3(), 4.0);
}

TEST(Materials, ElasticGradientMatchesFiniteDifferences) {
  const ph::MaterialModel lam = laminate_model();
  ph::Rng rng(41);
  const ph::Vec3 x{0.3, 0.7, 0.1};
  for (int trial = 0; trial < 5; ++trial) {
    ph::Mat3 F;
    for (int e = 0; e < 9; ++e) F.a[static_cast<std::size_t>(e)] = rng.normal();
    const ph::Mat3 g = ph::eval_W_grad(lam, x, F);
    for (int e = 0; e < 9; ++e) {
      const double h = 1e-6;
      ph::Mat3 up = F;
      up.a[static_cast<std::size_t>(e)] += h;
      ph::Mat3 dn = F;
      dn.a[static_cast<std::size_t>(e)] -= h;
      const double fd =
          (ph::eval_W(lam, x, up) - ph::eval_W(lam, x, dn)) / (2.0 * h);
      EXPECT_NEAR(g.a[static_cast<std::size_t>(e)], fd, 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

TEST(Materials, HardeningIsFiniteExactlyOnK) {
  const ph::MaterialModel lam = laminate_model();
  // one-parameter subgroup in the normal direction diag(1,-1,0)/sqrt(2):
  // a genuine geodesic, so D_sym(I, exp(sN)) = s.
  ph::Mat3 N = ph::Mat3::zero();
  N(0, 0) = 1.0 / std::sqrt(2.0);
  N(1, 1) = -1.0 / std::sqrt(2.0);
  const ph::Vec3 x{0.1, 0.2, 0.3};

  const auto P_at = [&](double s) {
    return ph::SL3Element::retracted(ph::mat_exp(N * s));
  };

  // deep inside: finite with the closed-form value
  const ph::SL3Element inside = P_at(0.45);
  const double d0 = std::expm1(0.45 / std::sqrt(2.0));
  const double d1 = std::expm1(-0.45 / std::sqrt(2.0));
  EXPECT_NEAR(ph::eval_H(lam, x, inside), d0 * d0 + d1 * d1, 1e-12);
  EXPECT_NEAR(ph::mean_H(lam, inside), d0 * d0 + d1 * d1, 1e-12);

  // clearly outside: infinite
  EXPECT_EQ(ph::eval_H(lam, x, P_at(0.7)), ph::infinite_energy);
  EXPECT_EQ(ph::mean_H(lam, P_at(0.7)), ph::infinite_energy);

  // the finite/infinite dichotomy flips within solver tolerance of s = r
  double lo = 0.45, hi = 0.7;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::isfinite(ph::eval_H(lam, x, P_at(mid)))) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  EXPECT_NEAR(0.5 * (lo + hi), 0.5, 5e-3);
}

TEST(Materials, KBoundConstantsDominateSamples) {
  const ph::MaterialModel lam = laminate_model();
  const double reach =
      ph::k_frobenius_bound(lam.norm(), lam.H().k_radius);
  ph::Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const ph::SL3Element P =
        ph::random_sl3_in_ball(rng, lam.norm(), lam.H().k_radius);
    EXPECT_LE(ph::frobenius(P.m - ph::Mat3::identity()), reach + 1e-9);
    const double both = ph::frobenius(P.m) + ph::frobenius(ph::inverse(P.m));
    EXPECT_LE(both, lam.c_K() + 1e-9);
  }
}

TEST(Materials, ValidateAssumptionsAcceptsShippedCatalog) {
  const ph::HardeningDensity H =
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::homogeneous(1.0), 0.5);
  const ph::ElasticDensity catalog[] = {
      ph::ElasticDensity::homogeneous_quadratic(1.0),
      ph::ElasticDensity::two_phase_laminate(1.0, 4.0, 0, 0.5),
      ph::ElasticDensity::checkerboard(1.0, 4.0),
  };
  for (const ph::ElasticDensity& W : catalog) {
    const ph::MaterialModel m(W, H, 4.0);
    const ph::ValidationReport r = ph::validate_assumptions(m, 200);
    EXPECT_GE(r.observed_c1, r.declared_c1 - 1e-9);
    EXPECT_LE(r.observed_c2, r.declared_c2 + 1e-9);
    EXPECT_LE(r.observed_c3, r.declared_c3 + 1e-9);
    EXPECT_LE(r.observed_L_H, r.declared_L_H + 1e-9);
    EXPECT_EQ(r.samples, 200);
  }
}

TEST(Materials, ValidateAssumptionsRejectsCubicProbeWithWitness) {
  const ph::MaterialModel broken(
      ph::ElasticDensity::cubic_growth_probe(1.0),
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::homogeneous(1.0), 0.5),
      4.0);
  const std::string msg = message_of([&] {
    ph::validate_assumptions(broken, 200);
  });
  EXPECT_NE(msg.find("quadratic growth"), std::string::npos) << msg;
  EXPECT_NE(msg.find("|F| ="), std::string::npos) << msg;  // witness strain
  EXPECT_THROW(ph::validate_assumptions(broken, 200), ph::AssumptionViolated);
}

TEST(Materials, ModelRejectsBadParameters) {
  const ph::HardeningDensity H =
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::homogeneous(1.0), 0.5);
  // q must exceed 3
  EXPECT_THROW(ph::MaterialModel(ph::ElasticDensity::homogeneous_quadratic(1.0),
                                 H, 3.0),
               ph::ConfigError);
  EXPECT_THROW(ph::MaterialModel(ph::ElasticDensity::homogeneous_quadratic(1.0),
                                 H, 2.5),
               ph::ConfigError);
  // weights must be positive
  EXPECT_THROW(ph::WeightField::homogeneous(0.0), ph::ConfigError);
  EXPECT_THROW(ph::WeightField::laminate(1.0, -2.0, 0, 0.5), ph::ConfigError);
  // laminate geometry
  EXPECT_THROW(ph::WeightField::laminate(1.0, 2.0, 5, 0.5), ph::ConfigError);
  EXPECT_THROW(ph::WeightField::laminate(1.0, 2.0, 0, 0.0), ph::ConfigError);
  EXPECT_THROW(ph::WeightField::laminate(1.0, 2.0, 0, 1.0), ph::ConfigError);
  // K radius
  EXPECT_THROW(ph::HardeningDensity::quadratic_distance_to_identity(
                   ph::WeightField::homogeneous(1.0), 0.0),
               ph::ConfigError);
}

TEST(Materials, JsonLoaderParsesHeadlineLaminate) {
  const json cfg = {
      {"W",
       {{"kind", "two-phase-laminate"},
        {"weights", {1.0, 4.0}},
        {"axis", 0},
        {"fraction", 0.5}}},
      {"H",
       {{"kind", "quadratic-distance-to-identity"},
        {"weight_field", {{"kind", "homogeneous"}, {"weight", 1.0}}}}},
      {"q", 4.0},
      {"K_radius", 0.5},
  };
  const ph::MaterialModel m = ph::material_from_json(cfg);
  EXPECT_EQ(m.c1(), 1.0);
  EXPECT_EQ(m.c2(), 5.0);
  EXPECT_EQ(m.q(), 4.0);
  EXPECT_EQ(m.H().k_radius, 0.5);
  EXPECT_NEAR(ph::eval_W(m, {0.75, 0.0, 0.0}, ph::Mat3::identity()), 12.0,
              1e-15);
}

TEST(Materials, JsonLoaderNamesMissingFields) {
  json cfg = {
      {"W", {{"kind", "homogeneous-quadratic"}, {"weight", 1.0}}},
      {"H",
       {{"kind", "quadratic-distance-to-identity"},
        {"weight_field", {{"kind", "homogeneous"}, {"weight", 1.0}}}}},
      {"q", 4.0},
      {"K_radius", 0.5},
  };
  {
    json bad = cfg;
    bad.erase("q");
    const std::string msg = message_of([&] { ph::material_from_json(bad); });
    EXPECT_NE(msg.find("missing field 'q'"), std::string::npos) << msg;
  }
  {
    json bad = cfg;
    bad["W"].erase("weight");
    const std::string msg = message_of([&] { ph::material_from_json(bad); });
    EXPECT_NE(msg.find("missing field 'weight'"), std::string::npos) << msg;
  }
  {
    json bad = cfg;
    bad["W"]["kind"] = "neo-hookean";
    const std::string msg = message_of([&] { ph::material_from_json(bad); });
    EXPECT_NE(msg.find("neo-hookean"), std::string::npos) << msg;
  }
  {
    json bad = cfg;
    bad["H"]["kind"] = "linear";
    EXPECT_THROW(ph::material_from_json(bad), ph::ConfigError);
  }
  {
    json bad = cfg;
    bad["W"] = {{"kind", "two-phase-laminate"}, {"weights", {1.0}}, {"axis", 0},
                {"fraction", 0.5}};
    const std::string msg = message_of([&] { ph::material_from_json(bad); });
    EXPECT_NE(msg.find("[a, b]"), std::string::npos) << msg;
  }
}

TEST(Materials, JsonLoaderParsesNorms) {
  json cfg = {
      {"W", {{"kind", "homogeneous-quadratic"}, {"weight", 1.0}}},
      {"H",
       {{"kind", "quadratic-distance-to-identity"},
        {"weight_field", {{"kind", "homogeneous"}, {"weight", 1.0}}}}},
      {"q", 4.0},
      {"K_radius", 0.5},
      {"norm", {{"kind", "weighted-deviatoric"}, {"weight", 2.0}}},
  };
  const ph::MaterialModel m = ph::material_from_json(cfg);
  EXPECT_EQ(m.norm().kind, ph::NormKind::WeightedDeviatoric);
  EXPECT_EQ(m.norm().deviatoric_weight, 2.0);

  cfg["norm"] = {{"kind", "frobenius"}};
  EXPECT_EQ(ph::material_from_json(cfg).norm().kind, ph::NormKind::Frobenius);

  cfg["norm"] = {{"kind", "spectral"}};
  EXPECT_THROW(ph::material_from_json(cfg), ph::ConfigError);
  cfg["norm"] = {{"kind", "weighted-deviatoric"}, {"weight", -1.0}};
  EXPECT_THROW(ph::material_from_json(cfg), ph::ConfigError);
}

TEST(Materials, CubicProbeLoadsFromJson) {
  const json cfg = {
      {"W", {{"kind", "cubic-probe"}, {"weight", 1.0}}},
      {"H",
       {{"kind", "quadratic-distance-to-identity"},
        {"weight_field", {{"kind", "homogeneous"}, {"weight", 1.0}}}}},
      {"q", 4.0},
      {"K_radius", 0.5},
  };
  const ph::MaterialModel m = ph::material_from_json(cfg);
  EXPECT_TRUE(m.W().cubic_probe);
  EXPECT_THROW(ph::validate_assumptions(m, 64), ph::AssumptionViolated);
}
