#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "plasthom/cell.hpp"
#include "plasthom/rng.hpp"

namespace ph = plasthom;

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

// Discrete oracle for the scalar laminate rung: at the minimum, w_i g_i is
// constant and the mean of g matches F, so the value is the harmonic mean
// of the sampled weights times F^2 -- for any grid, aligned or not.
double harmonic_oracle(const ph::WeightField& w, double F, double lambda,
                       int resolution) {
  const int cells = static_cast<int>(std::lround(lambda * resolution));
  const double h = lambda / cells;
  double inv_sum = 0.0;
  for (int i = 0; i < cells; ++i) {
    inv_sum += 1.0 / w.at(ph::Vec3{(i + 0.5) * h, 0.0, 0.0});
  }
  return static_cast<double>(cells) / inv_sum * F * F;
}

}  // namespace

TEST(Cell, HomogeneousIdentityIsExactAndBoundedByZeroFluctuation) {
  const ph::MaterialModel m = homogeneous_model();
  ph::CellProblemConfig cfg;
  cfg.lambda_ladder = {1.0};
  const ph::WhomCellResult r =
      ph::whom_cell_full(m, ph::Mat3::identity(), ph::SL3Element(), 1.0, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.value, 3.0 + 1e-12);  // started at y = 0, descent only
  EXPECT_NEAR(r.value, 3.0, 1e-8);
}

TEST(Cell, HomogeneousPairsMatchClosedForm) {
  // For x-independent quadratic W the cross term telescopes, so the
  // homogenized density is exactly w |F G^{-1}|^2.
  const ph::MaterialModel m = homogeneous_model(1.5);
  ph::CellProblemConfig cfg;
  ph::Rng rng(51);
  for (int trial = 0; trial < 5; ++trial) {
    ph::Mat3 F = ph::Mat3::identity();
    for (int e = 0; e < 9; ++e) {
      F.a[static_cast<std::size_t>(e)] += 0.25 * rng.normal();
    }
    const ph::SL3Element G = ph::random_sl3_in_ball(rng, m.norm(), 0.4);
    const double got = ph::whom_cell(m, F, G, 1.0, cfg);
    const ph::Mat3 A = F * ph::inverse(G.m);
    const double want = 1.5 * ph::frobenius_inner(A, A);
    EXPECT_NEAR(got, want, 1e-8 * (1.0 + want));
  }
}

TEST(Cell, ScalarLaminateReachesHarmonicMean) {
  const ph::WeightField lam = ph::WeightField::laminate(1.0, 4.0, 0, 0.5);
  const double v4 = ph::whom_scalar_1d(lam, 1.0, 4.0, 32);
  // classical homogenized coefficient of the {1,4} half-half laminate
  EXPECT_NEAR(v4, 1.6, 0.02 * 1.6);
  // phase-aligned grid: the discrete minimum is the harmonic mean exactly
  EXPECT_NEAR(v4, harmonic_oracle(lam, 1.0, 4.0, 32), 1e-9);
  const double v8 = ph::whom_scalar_1d(lam, 1.0, 8.0, 32);
  EXPECT_LE(std::abs(v8 - v4) / v4, 0.01);

  // misaligned fraction still matches the sampled-weight oracle
  const ph::WeightField off = ph::WeightField::laminate(1.0, 4.0, 0, 0.3);
  EXPECT_NEAR(ph::whom_scalar_1d(off, 1.5, 1.0, 32),
              harmonic_oracle(off, 1.5, 1.0, 32), 1e-9);
}

TEST(Cell, LadderValuesAreSubadditive) {
  // A lambda = 1 minimizer tiles into the lambda = 2 box (the seams carry
  // zero fluctuation), so the larger rung can never sit above the smaller.
  const ph::MaterialModel m = laminate_model();
  ph::CellProblemConfig cfg;
  cfg.lambda_ladder = {1.0, 2.0};
  ph::Mat3 F = ph::Mat3::identity();
  F(0, 1) = 0.3;
  F(0, 0) = 1.2;
  const ph::WhomResult r = ph::whom(m, F, ph::SL3Element(), cfg);
  ASSERT_EQ(r.values.size(), 2u);
  EXPECT_LE(r.values[1], r.values[0] + 1e-7);
  EXPECT_EQ(r.extrapolated, r.values.back());
}

TEST(Cell, LadderSpreadNearZeroForHomogeneous) {
  const ph::MaterialModel m = homogeneous_model();
  ph::CellProblemConfig cfg;
  cfg.lambda_ladder = {1.0, 2.0};
  const ph::WhomResult r =
      ph::whom(m, ph::Mat3::identity(), ph::SL3Element(), cfg);
  EXPECT_LE(r.spread, 1e-9);
  EXPECT_NEAR(r.extrapolated, 3.0, 1e-8);
}

TEST(Cell, HhomAlignedExactMisalignedFirstOrder) {
  ph::Mat3 N = ph::Mat3::zero();
  N(0, 1) = 0.2;
  N(1, 0) = -0.1;
  const ph::SL3Element F = ph::SL3Element::retracted(ph::mat_exp(N));
  const double dist2 = ph::frobenius_inner(F.m - ph::Mat3::identity(),
                                           F.m - ph::Mat3::identity());

  // homogeneous and grid-aligned laminate weights: exact at any resolution
  const ph::MaterialModel mh = homogeneous_model();
  EXPECT_NEAR(ph::hhom(mh, F, 16), dist2, 1e-12 * (1.0 + dist2));

  const ph::MaterialModel ml(
      ph::ElasticDensity::homogeneous_quadratic(1.0),
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::laminate(1.0, 4.0, 0, 0.5), 0.5),
      4.0);
  EXPECT_NEAR(ph::hhom(ml, F, 64), 2.5 * dist2, 1e-12 * (1.0 + dist2));

  // misaligned phase boundary: midpoint quadrature is first order in 1/res
  const ph::MaterialModel mm(
      ph::ElasticDensity::homogeneous_quadratic(1.0),
      ph::HardeningDensity::quadratic_distance_to_identity(
          ph::WeightField::laminate(1.0, 4.0, 0, 1.0 / 3.0), 0.5),
      4.0);
  const double mean_true = 1.0 / 3.0 + 4.0 * 2.0 / 3.0;
  const double e64 = std::abs(ph::hhom(mm, F, 64) - mean_true * dist2);
  const double e256 = std::abs(ph::hhom(mm, F, 256) - mean_true * dist2);
  EXPECT_LE(e64, 3.0 * dist2 / 64.0);
  EXPECT_LE(e256, 3.0 * dist2 / 256.0);
}

TEST(Cell, RejectsPlasticStrainOutsideK) {
  const ph::MaterialModel m = homogeneous_model();
  ph::Mat3 N = ph::Mat3::zero();
  N(0, 0) = 0.7 / std::sqrt(2.0);
  N(1, 1) = -0.7 / std::sqrt(2.0);
  const ph::SL3Element far = ph::SL3Element::retracted(ph::mat_exp(N));
  ph::CellProblemConfig cfg;
  EXPECT_THROW(ph::whom_cell(m, ph::Mat3::identity(), far, 1.0, cfg),
               ph::OutsideK);
  EXPECT_THROW(ph::hhom(m, far), ph::OutsideK);
}

TEST(Cell, SurfacesNoConvergenceAtTinyIterationCap) {
  const ph::MaterialModel m = laminate_model();
  ph::CellProblemConfig cfg;
  cfg.optimizer.max_iterations = 1;
  ph::Mat3 F = ph::Mat3::identity();
  F(0, 0) = 1.5;  // laminate contrast forces a nonzero fluctuation
  EXPECT_THROW(ph::whom_cell(m, F, ph::SL3Element(), 1.0, cfg),
               ph::NoConvergence);
}

TEST(Cell, ValidatesConfiguration) {
  const ph::MaterialModel m = homogeneous_model();
  ph::CellProblemConfig cfg;
  cfg.lambda_ladder = {};
  EXPECT_THROW(ph::whom(m, ph::Mat3::identity(), ph::SL3Element(), cfg),
               ph::ConfigError);
  cfg.lambda_ladder = {2.0, 1.0};
  EXPECT_THROW(ph::whom(m, ph::Mat3::identity(), ph::SL3Element(), cfg),
               ph::ConfigError);
  cfg.lambda_ladder = {1.0};
  cfg.resolution = 4;
  EXPECT_THROW(ph::whom(m, ph::Mat3::identity(), ph::SL3Element(), cfg),
               ph::ConfigError);
  cfg.resolution = 8;
  cfg.dimension = 1;
  EXPECT_THROW(ph::whom(m, ph::Mat3::identity(), ph::SL3Element(), cfg),
               ph::ConfigError);
  EXPECT_THROW(ph::whom_scalar_1d(ph::WeightField::homogeneous(1.0), 1.0,
                                  -1.0, 32),
               ph::ConfigError);
}
