#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mandiff/oracles.hpp"
#include "mandiff/perturbation.hpp"

namespace mandiff {

/// Settings for the numerical verification of the score-singularity
/// theorems on the unit circle with density p0(theta) ~ exp(kappa cos theta).
struct VerificationSettings {
  double kappa = 1.0;
  double theta0 = 0.7;        // angle of the off-manifold test point
  double offset_iso = 0.02;   // radial offset, isotropic sweep
  double offset_niso = 0.15;  // radial offset, non-isotropic sweep
  double c_niso = 0.05;
  int circle_nodes = 1 << 16;
  int tangential_grid = 64;
  int sweep_points = 6;
  double log10_sigma_lo = -3.0;
  double log10_sigma_hi = -1.5;

  std::vector<double> sigmas() const {
    std::vector<double> out;
    for (int i = 0; i < sweep_points; ++i) {
      const double a = sweep_points == 1
                           ? log10_sigma_lo
                           : log10_sigma_lo + (log10_sigma_hi - log10_sigma_lo) *
                                                  i / (sweep_points - 1);
      out.push_back(std::pow(10.0, a));
    }
    return out;
  }

  QuadratureManifold circle(int nodes_override = 0) const {
    const double k = kappa;
    return QuadratureManifold::circle(
        nodes_override > 0 ? nodes_override : circle_nodes,
        [k](double theta) { return std::exp(k * std::cos(theta)); });
  }
};

struct NormalScaleSweep {
  std::vector<double> sigmas;
  std::vector<double> norms;  // ||(I-P) grad log p_sigma|| at the test point
  SlopeFit fit;
};

struct TangentialSweep {
  std::vector<double> sigmas;
  std::vector<double> max_errors;  // max_theta ||P grad log p - Riemannian||
  SlopeFit fit;
};

struct NisoNormalSweep {
  std::vector<double> sigmas;
  std::vector<double> measured;     // signed normal score
  std::vector<double> predicted;    // -delta / (sigma^2 + c^2)
  std::vector<double> rel_error;
  double worst_rel_error_small_sigma = 0.0;  // over sigma <= 0.01
  double saturation_ratio = 0.0;  // |measured| / (delta/c^2) at smallest sigma
};

namespace detail {

inline Eigen::Vector2d circle_point(double theta) {
  return {std::cos(theta), std::sin(theta)};
}

/// Signed radial (normal) component of the quadrature score at radius
/// 1 + offset in direction theta0.
inline double normal_score_at_offset(const QuadratureManifold& qm,
                                     double theta0, double offset, double sigma,
                                     const NisoParams* niso) {
  const Eigen::Vector2d unit = circle_point(theta0);
  const Eigen::VectorXd x = (1.0 + offset) * unit;
  const Eigen::VectorXd score = quadrature_score(qm, x, sigma, niso);
  return score.dot(unit);
}

inline double tangential_max_error(const QuadratureManifold& qm, double kappa,
                                   int grid, double sigma,
                                   const NisoParams* niso) {
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double theta = 2.0 * M_PI * i / grid;
    const Eigen::Vector2d unit = circle_point(theta);
    const Eigen::Vector2d tangent(-unit.y(), unit.x());
    const Eigen::VectorXd score = quadrature_score(qm, unit, sigma, niso);
    const Eigen::Vector2d tangential = score.dot(tangent) * tangent;
    const Eigen::Vector2d riemannian = -kappa * std::sin(theta) * tangent;
    worst = std::max(worst, (tangential - riemannian).norm());
  }
  return worst;
}

}  // namespace detail

/// Isotropic normal blow-up: || (I-P) grad log p_sigma || ~ offset / sigma^2.
inline NormalScaleSweep verify_normal_scale_iso(
    const VerificationSettings& s = {}) {
  const QuadratureManifold qm = s.circle();
  NormalScaleSweep sweep;
  sweep.sigmas = s.sigmas();
  for (double sigma : sweep.sigmas)
    sweep.norms.push_back(std::abs(detail::normal_score_at_offset(
        qm, s.theta0, s.offset_iso, sigma, nullptr)));
  sweep.fit = scale_exponent_fit(sweep.sigmas, sweep.norms);
  return sweep;
}

/// Tangential convergence P grad log p_sigma -> grad^M log p0.
inline TangentialSweep verify_tangential(const VerificationSettings& s,
                                         bool use_niso) {
  const QuadratureManifold qm = s.circle();
  const NisoParams niso(use_niso ? s.c_niso : 0.5);
  TangentialSweep sweep;
  sweep.sigmas = s.sigmas();
  for (double sigma : sweep.sigmas)
    sweep.max_errors.push_back(detail::tangential_max_error(
        qm, s.kappa, s.tangential_grid, sigma, use_niso ? &niso : nullptr));
  sweep.fit = scale_exponent_fit(sweep.sigmas, sweep.max_errors);
  return sweep;
}

/// Fixed-c behavior of the non-isotropic normal score: it matches
/// -(x - x*)_perp / (sigma^2 + c^2) and saturates at offset/c^2.
inline NisoNormalSweep verify_niso_normal(const VerificationSettings& s = {}) {
  const QuadratureManifold qm = s.circle();
  const NisoParams niso(s.c_niso);
  NisoNormalSweep sweep;
  sweep.sigmas = s.sigmas();
  double smallest_sigma = std::numeric_limits<double>::infinity();
  double measured_at_smallest = 0.0;
  for (double sigma : sweep.sigmas) {
    const double measured = detail::normal_score_at_offset(
        qm, s.theta0, s.offset_niso, sigma, &niso);
    const double predicted =
        -s.offset_niso / (sigma * sigma + s.c_niso * s.c_niso);
    sweep.measured.push_back(measured);
    sweep.predicted.push_back(predicted);
    const double rel = std::abs(measured - predicted) / std::abs(predicted);
    sweep.rel_error.push_back(rel);
    if (sigma <= 0.01)
      sweep.worst_rel_error_small_sigma =
          std::max(sweep.worst_rel_error_small_sigma, rel);
    if (sigma < smallest_sigma) {
      smallest_sigma = sigma;
      measured_at_smallest = measured;
    }
  }
  sweep.saturation_ratio = std::abs(measured_at_smallest) /
                           (s.offset_niso / (s.c_niso * s.c_niso));
  return sweep;
}

/// Self-consistency: doubling the quadrature resolution must not move any
/// swept score by more than 0.1%. Returns the worst relative change.
inline double quadrature_resolution_check(const VerificationSettings& s = {}) {
  const QuadratureManifold coarse = s.circle();
  const QuadratureManifold fine = s.circle(2 * s.circle_nodes);
  double worst = 0.0;
  for (double sigma : s.sigmas()) {
    for (int i = 0; i < 8; ++i) {
      const double theta = 2.0 * M_PI * i / 8 + 0.1;
      const Eigen::VectorXd x = detail::circle_point(theta);
      const Eigen::VectorXd a = quadrature_score(coarse, x, sigma, nullptr);
      const Eigen::VectorXd b = quadrature_score(fine, x, sigma, nullptr);
      worst = std::max(worst, (a - b).norm() / std::max(1e-12, b.norm()));
    }
    const Eigen::VectorXd y =
        (1.0 + s.offset_iso) * detail::circle_point(s.theta0);
    const Eigen::VectorXd a = quadrature_score(coarse, y, sigma, nullptr);
    const Eigen::VectorXd b = quadrature_score(fine, y, sigma, nullptr);
    worst = std::max(worst, (a - b).norm() / std::max(1e-12, b.norm()));
  }
  return worst;
}

struct TheoremReport {
  NormalScaleSweep iso_normal;
  TangentialSweep iso_tangential;
  NisoNormalSweep niso_normal;
  TangentialSweep niso_tangential;

  bool iso_normal_pass() const {
    return iso_normal.fit.slope >= -2.1 && iso_normal.fit.slope <= -1.9 &&
           iso_normal.fit.r_squared >= 0.999;
  }
  bool iso_tangential_pass() const { return iso_tangential.fit.slope >= 0.9; }
  bool niso_normal_pass() const {
    return niso_normal.worst_rel_error_small_sigma <= 0.02;
  }
  bool niso_tangential_pass() const {
    return niso_tangential.fit.slope >= 0.9;
  }
  bool all_pass() const {
    return iso_normal_pass() && iso_tangential_pass() && niso_normal_pass() &&
           niso_tangential_pass();
  }
};

inline TheoremReport run_theorem_verification(
    const VerificationSettings& s = {}) {
  TheoremReport report;
  report.iso_normal = verify_normal_scale_iso(s);
  report.iso_tangential = verify_tangential(s, false);
  report.niso_normal = verify_niso_normal(s);
  report.niso_tangential = verify_tangential(s, true);
  return report;
}

/// CSV rows (sigma, tangential error, normal score norm) per kernel family,
/// followed by the fitted slopes.
inline void write_verification_csv(const TheoremReport& report,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(12);
  out << "family,sigma,tangential_error,normal_score_norm\n";
  for (std::size_t i = 0; i < report.iso_normal.sigmas.size(); ++i)
    out << "iso," << report.iso_normal.sigmas[i] << ","
        << report.iso_tangential.max_errors[i] << ","
        << report.iso_normal.norms[i] << "\n";
  for (std::size_t i = 0; i < report.niso_normal.sigmas.size(); ++i)
    out << "niso," << report.niso_normal.sigmas[i] << ","
        << report.niso_tangential.max_errors[i] << ","
        << std::abs(report.niso_normal.measured[i]) << "\n";
  out << "# iso_normal_slope," << report.iso_normal.fit.slope << ",r2,"
      << report.iso_normal.fit.r_squared << "\n";
  out << "# iso_tangential_exponent," << report.iso_tangential.fit.slope
      << "\n";
  out << "# niso_tangential_exponent," << report.niso_tangential.fit.slope
      << "\n";
  out << "# niso_worst_rel_error_small_sigma,"
      << report.niso_normal.worst_rel_error_small_sigma << "\n";
  out << "# niso_saturation_ratio," << report.niso_normal.saturation_ratio
      << "\n";
}

}  // namespace mandiff
