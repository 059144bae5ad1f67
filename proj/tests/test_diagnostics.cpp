#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oamsim/diagnostics/correlation.hpp"
#include "oamsim/diagnostics/hole_angle.hpp"
#include "oamsim/diagnostics/winding.hpp"
#include "oamsim/imaging/analytic.hpp"

using namespace oamsim;
using namespace oamsim::diagnostics;

namespace {

constexpr double pi = std::numbers::pi;

TransverseField vortex(const Grid2D& g, int charge, double cy = 0.0, double cz = 0.0) {
  TransverseField f(g);
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      const double y = g.y(iy) - cy;
      const double z = g.z(iz) - cz;
      const double r = std::hypot(y, z);
      const double amp = std::pow(r, std::abs(charge)) * std::exp(-r * r / 40.0);
      f(iy, iz) = std::polar(amp, charge * std::atan2(z, y));
    }
  }
  f.normalize();
  return f;
}

ImagePlane hole_image(const Grid2D& g, double theta) {
  const auto a = [](double r) { return std::exp(-r * r / 80.0); };
  const auto b = [](double r) { return r / 4.0 * std::exp(-r * r / 80.0); };
  return imaging::analytic_pattern(imaging::PatternKind::RotatingVsNonRotating, a, b, theta, g);
}

double angular_distance(double a, double b) { return std::abs(wrap_pi(a - b)); }

}  // namespace

TEST(Winding, IntegerChargesAndOffsetCore) {
  const Grid2D g(64, 64, 32.0, 32.0);
  for (int l : {-2, -1, 0, 1, 2}) {
    const auto d = winding_detail(vortex(g, l), 4.0);
    EXPECT_EQ(d.winding, l);
    EXPECT_NEAR(d.raw, l, 1e-12);
  }
  const auto shifted = vortex(g, 1, 2.0, -1.0);
  EXPECT_EQ(winding_number(shifted, 3.0, 2.0, -1.0), 1);
  // A loop not enclosing the core sees no winding.
  EXPECT_EQ(winding_number(shifted, 1.5, -3.0, 3.0), 0);
}

TEST(Winding, RejectsLoopsOutsideTheGridAndBelowTheFloor) {
  const Grid2D g(64, 64, 32.0, 32.0);
  const auto f = vortex(g, 1);
  EXPECT_THROW(winding_number(f, 20.0), InvalidArgument);
  EXPECT_THROW(winding_number(f, -1.0), InvalidArgument);
  LoopOptions strict;
  strict.density_floor = 0.5;
  EXPECT_THROW(winding_number(f, 1.0, 0.0, 0.0, strict), InvalidArgument);
}

TEST(Oam, ExpectationOfVorticesAndMixtures) {
  const Grid2D g(128, 128, 48.0, 48.0);
  EXPECT_NEAR(oam_expectation(vortex(g, 1)), 1.0, 1e-6);
  EXPECT_NEAR(oam_expectation(vortex(g, 2)), 2.0, 1e-6);
  EXPECT_NEAR(oam_expectation(vortex(g, 0)), 0.0, 1e-10);
  // Equal-norm superposition of l = 0 and l = 1 has <L_z> = 1/2; weight 0.2 gives 0.2.
  const auto a = vortex(g, 0);
  const auto b = vortex(g, 1);
  TransverseField mix(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    mix.values()[i] = std::sqrt(0.8) * a.values()[i] + std::sqrt(0.2) * b.values()[i];
  }
  EXPECT_NEAR(oam_expectation(mix), 0.2, 1e-6);
}

TEST(Oam, VortexReportFindsTheCore) {
  const Grid2D g(128, 128, 48.0, 48.0);
  const auto r = vortex_report(vortex(g, 1), 4.0);
  EXPECT_EQ(r.winding, 1);
  EXPECT_NEAR(r.l_z_expect, 1.0, 1e-6);
  EXPECT_NEAR(r.core_y, 0.0, 1e-12);
  EXPECT_NEAR(r.core_z, 0.0, 1e-12);
  EXPECT_LT(r.confidence, 1e-9);
}

TEST(HoleAngle, SingleHoleAndRotationEquivariance) {
  const Grid2D g(128, 128, 64.0, 64.0);
  const Annulus ring{2.0, 12.0};
  const auto img = hole_image(g, 0.0);
  const double base = hole_angle(img, ring);
  EXPECT_LT(angular_distance(base, pi), 1e-2);
  for (double alpha : {pi / 6.0, pi / 2.0}) {
    const auto turned = rotate_image(img, alpha);
    EXPECT_LT(angular_distance(hole_angle(turned, ring), base + alpha), 1e-2) << "alpha " << alpha;
  }
}

TEST(HoleAngle, FocusAndEnvelopeDivision) {
  const Grid2D g(128, 128, 64.0, 64.0);
  const Annulus ring{2.0, 12.0};
  for (double theta : {0.0, 1.0, 2.5}) {
    const auto img = hole_image(g, theta);
    EXPECT_LT(angular_distance(hole_angle(img, ring, 0.0, 0.0, 0.2, 0.3), pi - theta), 1e-2) << "theta " << theta;
  }
  // An elongated envelope pulls the full-harmonic estimate; dividing it out restores the hole.
  const auto img = hole_image(g, 1.0);
  auto envelope = ImagePlane::on_grid(g);
  auto squeezed = img;
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      envelope.at(iy, iz) = std::exp(-g.z(iz) * g.z(iz) / 30.0);
      squeezed.at(iy, iz) *= envelope.at(iy, iz);
    }
  }
  const double biased = angular_distance(hole_angle(squeezed, ring), pi - 1.0);
  const double restored = angular_distance(hole_angle(divide_by_envelope(squeezed, envelope), ring), pi - 1.0);
  EXPECT_GT(biased, 3.0 * restored);
  EXPECT_LT(restored, 1e-2);
  EXPECT_THROW(hole_angle(img, ring, 0.0, 0.0, 0.2, 0.0), InvalidArgument);
}

TEST(HoleAngle, SymmetricPatternHasNoSingleHole) {
  const Grid2D g(64, 64, 32.0, 32.0);
  const auto f = [](double r) { return r * std::exp(-r * r / 50.0); };
  const auto img = imaging::analytic_pattern(imaging::PatternKind::CounterRotating, f, f, 0.0, g);
  EXPECT_LT(angular_contrast(angular_profile(img, {2.0, 10.0})), 1e-6);
  EXPECT_THROW(hole_angle(img, {2.0, 10.0}), InvalidArgument);
  EXPECT_THROW(hole_angle(img, {10.0, 2.0}), InvalidArgument);
  EXPECT_THROW(hole_angle(img, {2.0, 40.0}), InvalidArgument);
}

TEST(Correlation, PearsonOfImages) {
  const Grid2D g(32, 32, 16.0, 16.0);
  const auto a = hole_image(g, 0.0);
  auto b = a;
  for (auto& p : b.pixels) p = 3.0 * p + 1.0;
  EXPECT_NEAR(normalized_cross_correlation(a, b), 1.0, 1e-12);
  auto c = a;
  for (auto& p : c.pixels) p = -p;
  EXPECT_NEAR(normalized_cross_correlation(a, c), -1.0, 1e-12);
  const auto flipped = hole_image(g, pi);
  EXPECT_LT(normalized_cross_correlation(a, flipped), 0.9);
  const ImagePlane small(8, 8, 1.0, "x");
  EXPECT_THROW(normalized_cross_correlation(a, small), InvalidArgument);
}

TEST(SlopeFit, RecoversWrappedLine) {
  std::vector<double> x;
  std::vector<double> y;
  for (int i = 0; i < 18; ++i) {
    x.push_back(2.0 * pi * i / 18.0);
    y.push_back(wrap_two_pi(-x.back() + 0.3 + 0.01 * std::sin(3.0 * i)));
  }
  const auto fit = fit_circular_slope(x, y);
  EXPECT_NEAR(fit.slope, -1.0, 5e-3);
  EXPECT_NEAR(fit.intercept, 0.3, 1e-2);
  EXPECT_LT(fit.max_abs_residual, 0.02);
  const auto flat = fit_circular_slope({1.0, 1.0, 1.0}, {0.1, 0.2, 0.3});
  EXPECT_TRUE(std::isnan(flat.slope));
}

TEST(Study, DeterministicAcrossThreadCounts) {
  const Grid2D g(64, 64, 32.0, 32.0);
  std::vector<double> phases;
  for (int i = 0; i < 6; ++i) phases.push_back(2.0 * pi * i / 6.0);
  const auto trial = [&](double phase) {
    // A hole that turns against the beam phase.
    const auto img = hole_image(g, phase);
    return TrialOutcome{wrap_two_pi(-phase), hole_angle(img, {2.0, 10.0})};
  };
  const auto one = phase_correlation_study(phases, trial, 1);
  const auto three = phase_correlation_study(phases, trial, 3);
  EXPECT_NEAR(one.fit.slope, -1.0, 1e-3);
  ASSERT_EQ(one.rows.size(), three.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_EQ(one.rows[i].hole_angle, three.rows[i].hole_angle);
    EXPECT_EQ(one.rows[i].trial, i);
  }
  EXPECT_THROW(phase_correlation_study({0.0, 1.0}, trial, 1), InvalidArgument);
}
