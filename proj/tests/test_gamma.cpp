#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "plasthom/gamma.hpp"

namespace ph = plasthom;
using nlohmann::json;

namespace {

ph::MaterialModel homogeneous_model(double w = 1.0) {
  return ph::MaterialModel(
      ph::ElasticDensity::homogeneous_quadratic(w),
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::homogeneous(1.0), 0.5),
      4.0);
}

ph::MaterialModel laminate_model() {
  return ph::MaterialModel(
      ph::ElasticDensity::two_phase_laminate(1.0, 4.0, 0, 0.5),
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::homogeneous(1.0), 0.5),
      4.0);
}

ph::CellProblemConfig quick_cell() {
  ph::CellProblemConfig c;
  c.lambda_ladder = {1.0};
  return c;
}

ph::WhomTable homogeneous_table() {
  return ph::WhomTable::build(homogeneous_model(), ph::Mat3::identity(),
                              ph::SL3Element(), 2, 3, 0.5, quick_cell());
}

double embedded_sq(const ph::Mat3& F) { return ph::frobenius_inner(F, F); }

ph::SL3Element small_shear(double s) {
  ph::Mat3 N = ph::Mat3::zero();
  N(0, 1) = s;
  return ph::SL3Element::retracted(ph::mat_exp(N));
}

}  // namespace

TEST(WhomTable, KnotValuesAreExactForHomogeneousDensity) {
  const ph::WhomTable t = homogeneous_table();
  EXPECT_EQ(t.sample_count(), 81u);  // 3 knots ^ (2x2 active entries)
  // at knots the multilinear interpolant reproduces the solved cell value,
  // which for x-independent quadratic W is |F|^2 exactly
  for (double f00 : {0.0, 1.0, 2.0}) {
    for (double f01 : {-0.5, 0.0, 0.5}) {
      ph::Mat3 F = ph::Mat3::identity();
      F(0, 0) = f00;
      F(0, 1) = f01;
      EXPECT_NEAR(t.value(F, ph::SL3Element()), embedded_sq(F),
                  1e-7 * (1.0 + embedded_sq(F)));
    }
  }
}

TEST(WhomTable, InterpolantDominatesConvexTruth) {
  const ph::WhomTable t = homogeneous_table();
  // multilinear weights average the corner points back to F, so Jensen puts
  // the interpolant above the convex exact density.
  ph::Mat3 F = ph::Mat3::identity();
  F(0, 0) = 1.2;
  F(1, 0) = 0.3;
  F(1, 1) = 0.75;
  EXPECT_GE(t.value(F, ph::SL3Element()), embedded_sq(F) - 1e-8);
}

TEST(WhomTable, GradientMatchesFiniteDifferences) {
  const ph::WhomTable t = homogeneous_table();
  ph::Mat3 F = ph::Mat3::identity();
  F(0, 0) = 1.2;
  F(0, 1) = 0.2;
  F(1, 0) = -0.3;
  F(1, 1) = 0.8;
  const ph::Mat3 g = t.grad_F(F, ph::SL3Element());
  const double h = 1e-7;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      ph::Mat3 up = F, dn = F;
      up(r, c) += h;
      dn(r, c) -= h;
      const double fd = (t.value(up, ph::SL3Element()) -
                         t.value(dn, ph::SL3Element())) /
                        (2.0 * h);
      EXPECT_NEAR(g(r, c), fd, 1e-5 * (1.0 + std::abs(fd)));
    }
  }
  // inactive entries carry no gradient
  EXPECT_EQ(g(2, 2), 0.0);
  EXPECT_EQ(g(0, 2), 0.0);
}

TEST(WhomTable, OutOfRangeQueriesThrowNeverExtrapolate) {
  const ph::WhomTable t = homogeneous_table();
  // beyond the knot box
  ph::Mat3 far = ph::Mat3::identity();
  far(0, 0) = 5.0;
  EXPECT_THROW(t.value(far, ph::SL3Element()), ph::TableOutOfRange);
  // fixed (out-of-plane) entry off the template
  ph::Mat3 off = ph::Mat3::identity();
  off(0, 2) = 0.5;
  EXPECT_THROW(t.value(off, ph::SL3Element()), ph::TableOutOfRange);
  // G off the tabulated slice
  EXPECT_THROW(t.value(ph::Mat3::identity(), small_shear(0.2)),
               ph::TableOutOfRange);
}

TEST(MinimizeFeps, HomogeneousPinnedIsAffineExact) {
  ph::ExperimentConfig cfg(homogeneous_model());
  cfg.F_bc(0, 0) = 1.3;
  cfg.F_bc(0, 1) = 0.25;
  const ph::FieldsResult r = ph::minimize_Feps(cfg, 0.5);
  EXPECT_TRUE(r.converged);
  const double want = embedded_sq(cfg.F_bc);  // volume is 1
  EXPECT_NEAR(r.value, want, 1e-8 * (1.0 + want));
  EXPECT_NEAR(r.breakdown.hardening, 0.0, 1e-12);
  EXPECT_NEAR(r.breakdown.regularization, 0.0, 1e-12);
}

TEST(MinimizeFeps, FreePlasticStaysAtIdentityForHomogeneousData) {
  ph::ExperimentConfig cfg(homogeneous_model());
  cfg.p_mode = ph::PlasticMode::Free;
  cfg.max_alternations = 5;
  const ph::FieldsResult r = ph::minimize_Feps(cfg, 0.5);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 3.0, 1e-6);
  for (const ph::Mat3& P : r.P.P) {
    EXPECT_LE(ph::frobenius(P - ph::Mat3::identity()), 1e-9);
    EXPECT_LE(std::abs(ph::det(P) - 1.0), 1e-9);
  }
}

TEST(MinimizeFeps, FixedBoundaryDescendsBelowConstantStart) {
  ph::ExperimentConfig cfg(homogeneous_model());
  cfg.p_mode = ph::PlasticMode::FixedBoundary;
  cfg.P_bc = small_shear(0.12);
  cfg.max_alternations = 20;
  const double eps = 0.5;

  const ph::GridDomain dom = cfg.grid_for_eps(eps);
  const ph::DeformationField y0 =
      ph::DeformationField::affine(dom, cfg.F_bc, cfg.b_bc);
  const ph::PlasticField P0 = ph::PlasticField::constant(dom, cfg.P_bc);
  const double start = ph::energy_total(cfg.model, eps, y0, P0, dom).total;

  const ph::FieldsResult r = ph::minimize_Feps(cfg, eps);
  EXPECT_LE(r.value, start + 1e-12);
  EXPECT_LT(r.value, start - 1e-6);  // the plastic step actually moves
  // boundary nodes keep the imposed value; determinants stay on the group
  for (std::size_t n = 0; n < r.P.P.size(); ++n) {
    EXPECT_LE(std::abs(ph::det(r.P.P[n]) - 1.0), 1e-9);
  }
  for (int i = 0; i < dom.nodes(0); ++i) {
    const std::size_t n = dom.node_index(i, 0, 0);
    EXPECT_LE(ph::frobenius(r.P.P[n] - cfg.P_bc.m), 1e-15);
  }
}

TEST(MinimizeFeps, RejectsIncommensurableEpsAndOutsideKBoundary) {
  ph::ExperimentConfig cfg(homogeneous_model());
  EXPECT_THROW(ph::minimize_Feps(cfg, 0.3), ph::ConfigError);
  cfg.eps_ladder = {0.5, 0.3};
  EXPECT_THROW(cfg.validate(), ph::ConfigError);

  ph::ExperimentConfig far(homogeneous_model());
  far.p_mode = ph::PlasticMode::FixedBoundary;
  ph::Mat3 N = ph::Mat3::zero();
  N(0, 0) = 0.7 / std::sqrt(2.0);
  N(1, 1) = -0.7 / std::sqrt(2.0);
  far.P_bc = ph::SL3Element::retracted(ph::mat_exp(N));
  EXPECT_THROW(ph::minimize_Feps(far, 0.5), ph::OutsideK);
}

TEST(MinimizeFhom, FreeModeIsRejected) {
  ph::ExperimentConfig cfg(homogeneous_model());
  cfg.p_mode = ph::PlasticMode::Free;
  const ph::WhomTable t = homogeneous_table();
  try {
    ph::minimize_Fhom(cfg, t);
    FAIL() << "expected ConfigError";
  } catch (const ph::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("free-P"), std::string::npos);
  }
}

TEST(MinimizeFhom, PinnedIdentityAttainsTableValue) {
  ph::ExperimentConfig cfg(homogeneous_model());
  const ph::WhomTable t = homogeneous_table();
  const ph::FieldsResult r = ph::minimize_Fhom(cfg, t);
  // affine minimizer: table(F_bc) times unit volume, no hardening
  EXPECT_NEAR(r.value, 3.0, 1e-9 * 3.0);
  EXPECT_NEAR(r.breakdown.hardening, 0.0, 1e-15);
  EXPECT_NEAR(r.breakdown.elastic, r.value, 1e-12);
}

TEST(MinimizeFhom, FixedPlasticCarriesHardeningTerm) {
  ph::ExperimentConfig cfg(homogeneous_model());
  cfg.p_mode = ph::PlasticMode::FixedBoundary;
  cfg.P_bc = small_shear(0.15);
  const ph::WhomTable t = ph::WhomTable::build(
      cfg.model, cfg.F_bc, cfg.P_bc, 2, 3, 0.5, quick_cell());
  const ph::FieldsResult r = ph::minimize_Fhom(cfg, t);
  const ph::Mat3 A = cfg.F_bc * ph::inverse(cfg.P_bc.m);
  const double want =
      embedded_sq(A) + ph::mean_H(cfg.model, cfg.P_bc);
  EXPECT_NEAR(r.value, want, 1e-7 * (1.0 + want));
  EXPECT_NEAR(r.breakdown.hardening, ph::mean_H(cfg.model, cfg.P_bc),
              1e-12);
}

TEST(Convergence, HomogeneousLadderHasVanishingGaps) {
  ph::ExperimentConfig cfg(homogeneous_model());
  cfg.eps_ladder = {0.5, 0.25};
  const ph::WhomTable t = homogeneous_table();
  const ph::ConvergenceReport rep = ph::convergence_table(cfg, t);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const ph::ConvergenceRow& row : rep.rows) {
    EXPECT_TRUE(row.converged);
    EXPECT_LE(row.gap, 1e-6 * (1.0 + std::abs(row.min_Fhom)));
    EXPECT_NEAR(row.min_Fhom, 3.0, 1e-8);
  }
  ASSERT_EQ(rep.y_l2_diffs.size(), 1u);
  EXPECT_LE(rep.y_l2_diffs[0], 1e-8);
  EXPECT_LE(rep.P_sup_diffs[0], 1e-12);
  EXPECT_LE(rep.P_inv_sup_diffs[0], 1e-12);
}

TEST(Convergence, LaminateGapShrinksAlongTheLadder) {
  ph::ExperimentConfig cfg(laminate_model());
  cfg.eps_ladder = {0.5, 0.25};
  // three rungs so the ladder extrapolates past its own tail: the last rung
  // alone is the eps = 1/4 problem in disguise and would alias its gap away
  cfg.cell.lambda_ladder = {1.0, 2.0, 4.0};
  const ph::WhomTable t =
      ph::WhomTable::build(cfg.model, cfg.F_bc, ph::SL3Element(), 2,
                           cfg.table_points, cfg.table_margin, cfg.cell);
  const ph::ConvergenceReport rep = ph::convergence_table(cfg, t);
  ASSERT_EQ(rep.rows.size(), 2u);
  const double hom = rep.rows[0].min_Fhom;
  EXPECT_GT(hom, 0.0);
  // the finer rung may not sit above the coarser by more than 10% slack
  EXPECT_LE(rep.rows[1].gap, rep.rows[0].gap * 1.10 + 1e-12);
  // smoke-level closeness for the tiny ladder
  EXPECT_LE(rep.rows[1].gap, 0.15 * hom);
  // lower-bound consistency on the returned minimizer
  const ph::FieldsResult fine = ph::minimize_Feps(cfg, 0.25);
  const ph::Seminorms sn =
      ph::sobolev_seminorms(fine.y, fine.P, fine.domain, cfg.model.q());
  const double ck = cfg.model.c_K();
  EXPECT_GE(fine.value + 1e-9,
            cfg.model.c1() / (ck * ck) * sn.grad_y_l2_sq);
}

TEST(Experiment, JsonRoundTripAndValidation) {
  const json material = {
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
  json cfg = {
      {"material", material},
      {"dimension", 2},
      {"extent", {2.0, 1.0, 1.0}},
      {"F_bc", {1.1, 0.2, 0.0, 0.0, 0.95, 0.0, 0.0, 0.0, 1.0}},
      {"p_mode", "pinned-identity"},
      {"eps_ladder", {0.5, 0.25}},
      {"resolution_per_eps", 8},
      {"hom_resolution", 12},
      {"seed", 9},
      {"max_alternations", 12},
      {"cell", {{"lambda_ladder", {1.0, 2.0}}, {"resolution", 8}}},
      {"table_points", 5},
      {"table_margin", 0.4},
  };
  const ph::ExperimentConfig parsed = ph::experiment_from_json(cfg);
  EXPECT_EQ(parsed.dimension, 2);
  EXPECT_EQ(parsed.extent[0], 2.0);
  EXPECT_EQ(parsed.F_bc(0, 0), 1.1);
  EXPECT_EQ(parsed.p_mode, ph::PlasticMode::PinnedIdentity);
  EXPECT_EQ(parsed.eps_ladder.size(), 2u);
  EXPECT_EQ(parsed.hom_resolution, 12);
  EXPECT_EQ(parsed.seed, 9u);
  EXPECT_EQ(parsed.table_points, 5);
  EXPECT_EQ(parsed.cell.dimension, 2);  // forced to the experiment dimension
  EXPECT_EQ(parsed.cell.lambda_ladder.size(), 2u);

  json bad = cfg;
  bad.erase("material");
  EXPECT_THROW(ph::experiment_from_json(bad), ph::ConfigError);

  bad = cfg;
  bad["p_mode"] = "frozen";
  EXPECT_THROW(ph::experiment_from_json(bad), ph::ConfigError);

  bad = cfg;
  bad["eps_ladder"] = {0.25, 0.5};
  EXPECT_THROW(ph::experiment_from_json(bad), ph::ConfigError);

  bad = cfg;
  bad["eps_ladder"] = {0.5, 0.3};  // 0.3 does not divide extent 2.0
  EXPECT_THROW(ph::experiment_from_json(bad), ph::ConfigError);

  bad = cfg;
  bad["table_points"] = 4;
  EXPECT_THROW(ph::experiment_from_json(bad), ph::ConfigError);

  bad = cfg;
  bad["resolution_per_eps"] = 4;
  EXPECT_THROW(ph::experiment_from_json(bad), ph::ConfigError);
}
