#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oamsim/condensate/ground_state.hpp"
#include "oamsim/diagnostics/hole_angle.hpp"
#include "oamsim/imaging/absorption.hpp"
#include "oamsim/imaging/analytic.hpp"
#include "oamsim/imaging/tof.hpp"

using namespace oamsim;
using namespace oamsim::imaging;

namespace {

constexpr double pi = std::numbers::pi;

double variance_y(const TransverseField& f) {
  const auto& g = f.grid();
  double s = 0.0;
  double n = 0.0;
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      const double rho = std::norm(f(iy, iz));
      s += rho * g.y(iy) * g.y(iy);
      n += rho;
    }
  }
  return s / n;
}

LadderState gaussian_ladder(const Grid2D& grid, double width) {
  return LadderState::from_ground(condensate::gaussian_field(grid, width, width), 1);
}

double angular_distance(double a, double b) { return std::abs(wrap_pi(a - b)); }

}  // namespace

TEST(Tof, ZeroTimeIsIdentity) {
  const Grid2D grid(32, 32, 32.0, 32.0);
  const auto s = gaussian_ladder(grid, 3.0);
  const auto out = time_of_flight(s, 0.0, 1.0, 10.0);
  EXPECT_EQ(out.grid().n_y(), 32u);
  EXPECT_LT(relative_l2(out.component(0).values(), s.component(0).values()), 1e-15);
}

TEST(Tof, FreeGaussianFollowsAnalyticWidth) {
  const Grid2D grid(128, 128, 64.0, 64.0);
  const auto s = gaussian_ladder(grid, 2.0);
  const double var0 = variance_y(s.component(0));
  for (double t : {2.0, 8.0, 20.0}) {
    const auto out = time_of_flight(s, t, 0.0, 0.0, {4});
    // Free motion with kinetic energy q^2: var(t) = var0 + t^2 / var0.
    const double expected = var0 + t * t / var0;
    EXPECT_NEAR(variance_y(out.component(0)) / expected, 1.0, 1e-3) << "t " << t;
    EXPECT_NEAR(field_norm(out).total, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(out.release_time(), t);
  }
}

TEST(Tof, PaddingGuards) {
  const Grid2D grid(32, 32, 32.0, 32.0);
  const auto s = gaussian_ladder(grid, 3.0);
  EXPECT_THROW(time_of_flight(s, 1.0, 0.0, 0.0, {1}), InvalidArgument);
  try {
    time_of_flight(s, 400.0, 0.0, 0.0, {2});
    FAIL() << "expected the padding guard";
  } catch (const NumericalGuard& e) {
    EXPECT_EQ(e.guard(), "tof_padding");
  }
  const auto padded = pad_state(s, 2);
  EXPECT_EQ(padded.grid().n_y(), 64u);
  EXPECT_NEAR(padded.grid().extent_y(), 64.0, 1e-12);
  EXPECT_NEAR(field_norm(padded).total, 1.0, 1e-14);
}

TEST(Tof, InteractionsSpeedUpExpansion) {
  const Grid2D grid(64, 64, 64.0, 64.0);
  const auto s = gaussian_ladder(grid, 2.0);
  const auto free = time_of_flight(s, 5.0, 5.0, 0.0, {4});
  const auto repulsive = time_of_flight(s, 5.0, 5.0, 20.0, {4});
  EXPECT_GT(variance_y(repulsive.component(0)), 1.05 * variance_y(free.component(0)));
  EXPECT_NEAR(field_norm(repulsive).total, 1.0, 1e-12);
}

TEST(Absorption, CoLocatedOrdersInterfereSeparatedOrdersDoNot) {
  const Grid2D grid(32, 32, 32.0, 32.0);
  auto s = gaussian_ladder(grid, 3.0);
  s.component(1) = s.component(0);
  s.component(1) *= -1.0;
  // Before release the two orders overlap and cancel.
  const auto together = absorption_image(s, {0, 1});
  EXPECT_LT(together.max_value(), 1e-20);
  // After a long release they are imaged as separate clusters.
  s.set_release_time(100.0);
  EXPECT_TRUE(orders_separated(s, 0, 1));
  const auto apart = absorption_image(s, {0, 1});
  const auto single = absorption_image(s, {0});
  EXPECT_NEAR(apart.max_value(), 2.0 * single.max_value(), 1e-12 * single.max_value());
  EXPECT_THROW(absorption_image(s, {}), InvalidArgument);
  EXPECT_THROW(absorption_image(s, {5}), InvalidArgument);
}

TEST(Absorption, ResamplingBlurAndSeededNoise) {
  const Grid2D grid(64, 64, 32.0, 32.0);
  const auto s = gaussian_ladder(grid, 3.0);
  ImagingOptions o;
  o.pitch = 1.0;
  const auto coarse = absorption_image(s, {0}, o);
  EXPECT_EQ(coarse.n_y, 32u);
  EXPECT_DOUBLE_EQ(coarse.pitch, 1.0);
  o.blur_sigma = 2.0;
  const auto blurred = absorption_image(s, {0}, o);
  EXPECT_LT(blurred.max_value(), coarse.max_value());
  o.noise_level = 0.05;
  o.noise_seed = 7;
  const auto a = absorption_image(s, {0}, o);
  const auto b = absorption_image(s, {0}, o);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_NE(a.pixels, blurred.pixels);
}

TEST(Analytic, CounterRotatingHasCosSquaredNodes) {
  const Grid2D grid(64, 64, 32.0, 32.0);
  const auto f = [](double r) { return r * std::exp(-r * r / 50.0); };
  const auto img = analytic_pattern(PatternKind::CounterRotating, f, f, 0.0, grid);
  // 4 f^2 cos^2(phi - theta / 2): nodes on the z axis, maxima on the y axis.
  const double r = 5.0;
  EXPECT_NEAR(img.sample(0.0, r), 0.0, 1e-12);
  EXPECT_NEAR(img.sample(r, 0.0), 4.0 * f(r) * f(r), 1e-12);
  const auto turned = analytic_pattern(PatternKind::CounterRotating, f, f, pi, grid);
  EXPECT_NEAR(turned.sample(r, 0.0), 0.0, 1e-12);
}

TEST(Analytic, RotatingHoleSitsAtPiMinusTheta) {
  const Grid2D grid(64, 64, 32.0, 32.0);
  const auto g = [](double r) { return std::exp(-r * r / 80.0); };
  const auto l = [](double r) { return r / 4.0 * std::exp(-r * r / 80.0); };
  const diagnostics::Annulus ring{2.0, 10.0};
  for (double theta : {0.0, 1.0, 2.5}) {
    const auto img = analytic_pattern(PatternKind::RotatingVsNonRotating, g, l, theta, grid);
    EXPECT_LT(angular_distance(diagnostics::hole_angle(img, ring), pi - theta), 1e-2) << "theta " << theta;
  }
}

TEST(Analytic, DoublyChargedPatternHasTwoOppositeMinima) {
  const Grid2D grid(64, 64, 32.0, 32.0);
  const auto g = [](double r) { return std::exp(-r * r / 80.0); };
  const auto l = [](double r) { return r * r / 16.0 * std::exp(-r * r / 80.0); };
  const auto img = analytic_pattern(PatternKind::DoublyVsNonRotating, g, l, 0.4, grid);
  const auto minima = diagnostics::angular_minima(img, {2.0, 10.0}, 2);
  ASSERT_EQ(minima.size(), 2u);
  EXPECT_LT(std::abs(angular_distance(minima[0], minima[1]) - pi), 2e-2);
  // Minima where 2 phi + theta = pi (mod 2 pi).
  EXPECT_LT(std::min(angular_distance(minima[0], (pi - 0.4) / 2.0),
                     angular_distance(minima[0], (pi - 0.4) / 2.0 + pi)),
            2e-2);
}

TEST(Analytic, EnvelopeSizeMismatchIsRejected) {
  const Grid2D grid(16, 16, 8.0, 8.0);
  std::vector<double> a(10, 1.0);
  EXPECT_THROW(analytic_pattern(PatternKind::CounterRotating, a, a, 0.0, grid), InvalidArgument);
}
