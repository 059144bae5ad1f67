#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/image.hpp"
#include "oamsim/optics/readout.hpp"

namespace oamsim::diagnostics {

/// Centred, normalised cross-correlation (Pearson coefficient) of two images.
inline double normalized_cross_correlation(const ImagePlane& a, const ImagePlane& b) {
  if (a.n_y != b.n_y || a.n_z != b.n_z) throw InvalidArgument("images differ in size");
  const std::size_t n = a.pixels.size();
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.pixels[i];
    mb += b.pixels[i];
  }
  ma /= double(n);
  mb /= double(n);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.pixels[i] - ma;
    const double db = b.pixels[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = 0.0;
  std::vector<double> residuals;  // wrapped to (-pi, pi]
  double max_abs_residual = 0.0;
};

/// Circular-linear fit y = slope * x + intercept (mod 2 pi): coarse search on the
/// mean resultant length, then least squares on the unwrapped residuals.
/// A constant x gives a NaN slope and residuals about the circular mean.
inline SlopeFit fit_circular_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("slope fit needs matching data");
  const auto n = static_cast<double>(x.size());
  double xm = 0.0;
  for (double v : x) xm += v;
  xm /= n;
  double sxx = 0.0;
  for (double v : x) sxx += (v - xm) * (v - xm);

  auto resultant = [&](double s) {
    std::complex<double> acc{};
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::polar(1.0, y[i] - s * x[i]);
    return acc;
  };
  SlopeFit fit;
  auto fill_residuals = [&](double s, double c) {
    fit.residuals.clear();
    fit.max_abs_residual = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = wrap_pi(y[i] - s * x[i] - c);
      fit.residuals.push_back(r);
      fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
    }
  };
  if (!(sxx > 0.0)) {
    fit.intercept = std::arg(resultant(0.0));
    fill_residuals(0.0, fit.intercept);
    return fit;
  }
  double best_s = 0.0;
  double best_r = -1.0;
  for (int k = -600; k <= 600; ++k) {
    const double s = 0.005 * k;
    const double r = std::abs(resultant(s));
    if (r > best_r) {
      best_r = r;
      best_s = s;
    }
  }
  double s = best_s;
  double c = std::arg(resultant(s));
  for (int iter = 0; iter < 5; ++iter) {
    fill_residuals(s, c);
    double sxy = 0.0;
    double ym = 0.0;
    std::vector<double> yu(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      yu[i] = s * x[i] + c + fit.residuals[i];
      ym += yu[i];
    }
    ym /= n;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - xm) * (yu[i] - ym);
    s = sxy / sxx;
    c = ym - s * xm;
  }
  fit.slope = s;
  fit.intercept = wrap_pi(c);
  fill_residuals(s, c);
  return fit;
}

struct StudyRow {
  std::size_t trial = 0;
  double beam_phase = 0.0;
  double readout_angle = 0.0;
  double hole_angle = 0.0;
};

struct TrialOutcome {
  double readout_angle = 0.0;
  double hole_angle = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  SlopeFit fit;  // hole angle against beam phase
};

/// Runs `trial` once per beam phase (concurrently when threads > 1; rows keep
/// input order) and fits the hole angle against the beam phase.
inline StudyResult phase_correlation_study(const std::vector<double>& phases,
                                           const std::function<TrialOutcome(double)>& trial,
                                           std::size_t threads = 1) {
  if (phases.size() < 3) throw InvalidArgument("phase study needs at least 3 trials");
  StudyResult result;
  result.rows.resize(phases.size());
  std::vector<std::exception_ptr> errors(phases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < phases.size(); i = next++) {
      try {
        const auto outcome = trial(phases[i]);
        result.rows[i] = {i, phases[i], outcome.readout_angle, outcome.hole_angle};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, phases.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& row : result.rows) {
    x.push_back(row.beam_phase);
    y.push_back(row.hole_angle);
  }
  result.fit = fit_circular_slope(x, y);
  return result;
}

/// Tab-separated: trial, beam_phase_rad, readout_angle_rad, hole_angle_rad.
inline void write_study_table(const std::filesystem::path& path, const std::vector<StudyRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "trial\tbeam_phase_rad\treadout_angle_rad\thole_angle_rad\n" << std::setprecision(12);
  for (const auto& r : rows) {
    out << r.trial << '\t' << r.beam_phase << '\t' << r.readout_angle << '\t' << r.hole_angle << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace oamsim::diagnostics
