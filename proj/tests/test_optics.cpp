#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oamsim/diagnostics/winding.hpp"
#include "oamsim/optics/corkscrew.hpp"
#include "oamsim/optics/coupling.hpp"
#include "oamsim/optics/readout.hpp"

using namespace oamsim;
using namespace oamsim::optics;

namespace {

const Grid2D grid(128, 128, 64.0, 64.0);
constexpr double pi = std::numbers::pi;

double angular_distance(double a, double b) { return std::abs(wrap_pi(a - b)); }

}  // namespace

TEST(Beam, LaguerreGaussHasUnitPeakOnItsRing) {
  const auto lg = BeamSpec::laguerre_gauss(1, 10.0);
  const auto u = mode_field(lg, grid);
  double peak = 0.0;
  for (const auto& v : u.values()) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 1.0, 1e-2);
  EXPECT_NEAR(lg.ring_radius(), 10.0 / std::sqrt(2.0), 1e-12);
  // On the ring the analytic amplitude is exactly one.
  const double r = lg.ring_radius();
  EXPECT_NEAR(std::abs(u.sample(grid.fy(r), grid.fz(0.0))), 1.0, 5e-3);
  EXPECT_NEAR(std::abs(u(64, 64)), 0.0, 1e-12);
}

TEST(Beam, PhaseWindsWithTheCharge) {
  for (int l : {-2, -1, 1, 2}) {
    const auto u = mode_field(BeamSpec::laguerre_gauss(l, 12.0), grid);
    EXPECT_EQ(diagnostics::winding_number(u, 8.0), l) << "charge " << l;
  }
  EXPECT_EQ(diagnostics::winding_number(mode_field(BeamSpec::gaussian(20.0), grid), 8.0), 0);
}

TEST(Beam, ValidationErrors) {
  auto bad = BeamSpec::laguerre_gauss(3, 10.0);
  EXPECT_THROW(bad.validate(), InvalidArgument);
  auto radial = BeamSpec::laguerre_gauss(1, 10.0);
  radial.p = 1;
  EXPECT_THROW(radial.validate(), InvalidArgument);
  EXPECT_THROW(BeamSpec::gaussian(-1.0).validate(), InvalidArgument);
  // Ring radius 35/sqrt(2) ~ 24.7 fits; 50/sqrt(2) ~ 35.4 does not fit in half of 64.
  EXPECT_NO_THROW(mode_field(BeamSpec::laguerre_gauss(1, 35.0), grid));
  EXPECT_THROW(mode_field(BeamSpec::laguerre_gauss(1, 50.0), grid), InvalidArgument);
  // A Gaussian larger than the grid is a smooth envelope and allowed.
  EXPECT_NO_THROW(mode_field(BeamSpec::gaussian(200.0), grid));
}

TEST(Coupling, NormalisedPeakAndOamStep) {
  const auto c = coupling_map(BeamSpec::laguerre_gauss(1, 10.0), BeamSpec::gaussian(20.0), 0.3, 0.0, grid);
  double peak = 0.0;
  for (const auto& v : c.omega.values()) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 0.3, 1e-14);
  EXPECT_EQ(c.oam_step, 1);
  EXPECT_EQ(diagnostics::winding_number(c.omega, 6.0), 1);
  const auto reversed = coupling_map(BeamSpec::gaussian(20.0), BeamSpec::laguerre_gauss(1, 10.0), 0.3, 0.0, grid);
  EXPECT_EQ(reversed.oam_step, -1);
  EXPECT_EQ(diagnostics::winding_number(reversed.omega, 6.0), -1);
}

TEST(Coupling, RescaleAndPhaseShift) {
  const auto c = coupling_map(BeamSpec::laguerre_gauss(1, 10.0), BeamSpec::gaussian(20.0), 1.0, 0.0, grid);
  const auto r = c.rescaled(2.5);
  EXPECT_NEAR(std::abs(r.omega(70, 64)) / std::abs(c.omega(70, 64)), 2.5, 1e-14);
  const auto s = c.phase_shifted(0.7);
  EXPECT_NEAR(wrap_pi(std::arg(s.omega(70, 64)) - std::arg(c.omega(70, 64))), 0.7, 1e-14);
  EXPECT_THROW(c.rescaled(-1.0), InvalidArgument);
}

TEST(Coupling, RejectsLargeOamStepAndZeroRate) {
  EXPECT_THROW(coupling_map(BeamSpec::laguerre_gauss(2, 10.0), BeamSpec::laguerre_gauss(-1, 10.0), 1.0, 0.0, grid),
               InvalidArgument);
  EXPECT_THROW(coupling_map(BeamSpec::gaussian(10.0), BeamSpec::gaussian(10.0), 0.0, 0.0, grid),
               InvalidArgument);
}

TEST(Coupling, UniformPlaneWaveLimit) {
  const auto c = uniform_coupling(grid, 0.4, 0.5);
  for (const auto& v : c.omega.values()) {
    EXPECT_NEAR(std::abs(v), 0.4, 1e-15);
    EXPECT_NEAR(std::arg(v), 0.5, 1e-15);
  }
}

TEST(Readout, LobeAngleFollowsMinusRelativePhase) {
  const auto lg = BeamSpec::laguerre_gauss(1, 12.0);
  const auto g = BeamSpec::gaussian(40.0);
  for (double theta : {0.0, pi / 3.0, pi / 2.0, pi, 5.0}) {
    const auto r = phase_readout_pattern(lg, g, theta, grid);
    EXPECT_LT(angular_distance(r.angle, -theta), 1e-3) << "theta " << theta;
  }
  EXPECT_THROW(phase_readout_pattern(g, g, 0.0, grid), InvalidArgument);
}

TEST(Corkscrew, BrightLocusWindsOncePerPeriod) {
  const auto lg = BeamSpec::laguerre_gauss(1, 12.0);
  const auto g = BeamSpec::gaussian(40.0);
  const auto vol = corkscrew_potential(lg, g, 4.0, 0.0, 16, grid);
  ASSERT_EQ(vol.slices.size(), 16u);
  for (std::size_t j = 0; j < vol.slices.size(); ++j) {
    const double angle = ring_mean_angle(vol.slices[j], lg.ring_radius());
    EXPECT_LT(angular_distance(angle, -2.0 * vol.x[j]), 1e-3) << "slice " << j;
  }
}

TEST(Corkscrew, PatternDriftsAlongTheAxis) {
  const auto lg = BeamSpec::laguerre_gauss(1, 12.0);
  const auto g = BeamSpec::gaussian(40.0);
  const double delta_nu = 4.0;
  const double t = 0.3;
  const auto moved = corkscrew_potential(lg, g, delta_nu, t, 16, grid);
  // At time t the slice at x looks like the t = 0 pattern at x - delta_nu t / 2.
  for (std::size_t j = 0; j < moved.slices.size(); ++j) {
    const double angle = ring_mean_angle(moved.slices[j], lg.ring_radius());
    const double expected = -2.0 * (moved.x[j] - 0.5 * delta_nu * t);
    EXPECT_LT(angular_distance(angle, expected), 1e-3) << "slice " << j;
  }
  EXPECT_THROW(corkscrew_potential(lg, g, 4.0, 0.0, 4, grid), InvalidArgument);
}
