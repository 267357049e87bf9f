#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "mandiff/errors.hpp"
#include "mandiff/manifold.hpp"
#include "mandiff/rng.hpp"

namespace mandiff {

/// Parameters of the non-isotropic perturbation. The extra normal noise has
/// the fixed scale c_niso = sigma_t^{alpha_t}; all covariance algebra works
/// with sigma^2 and c_niso^2 directly and never forms alpha_t.
struct NisoParams {
  double c_niso;

  explicit NisoParams(double c) : c_niso(c) {
    if (!(c > 0.0 && c < 1.0))
      throw ConfigError("c_niso must lie in (0, 1)");
  }
};

/// Diagnostic exponent alpha = log(c) / log(sigma). Only meaningful for
/// sigma < 1; the covariance itself stays valid for any sigma.
inline double alpha_exponent(double sigma, double c_niso) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (sigma >= 1.0)
    throw InvalidAlphaError("alpha diagnostic undefined for sigma >= 1");
  return std::log(c_niso) / std::log(sigma);
}

/// x + sigma * eps with eps standard normal.
inline Eigen::VectorXd perturb_iso(const Eigen::VectorXd& x, double sigma,
                                   Rng& rng) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  return x + sigma * rng.normal_vector(x.size());
}

/// x + sigma*eps1 + c_niso*N(x)*eps2: a draw from N(x, sigma^2 I + c^2 N N^T).
inline Eigen::VectorXd perturb_niso(const Manifold& m, const Eigen::VectorXd& x,
                                    double sigma, const NisoParams& p,
                                    Rng& rng) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  check_vector_dim(x, m.ambient_dim(), "perturb_niso");
  const Eigen::MatrixXd frame = m.normal_frame(x);
  return x + sigma * rng.normal_vector(x.size()) +
         p.c_niso * (frame * rng.normal_vector(frame.cols()));
}

/// Apply Sigma^{-1} to v through the projector split
///   Sigma^{-1} = sigma^{-2} P + (sigma^2 + c^2)^{-1} (I - P),
/// where c = alpha_scale = sigma^alpha. Never forms a dense inverse.
inline Eigen::VectorXd sigma_inverse_apply(const Manifold& m,
                                           const Eigen::VectorXd& x,
                                           double sigma, double alpha_scale,
                                           const Eigen::VectorXd& v) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  check_vector_dim(v, m.ambient_dim(), "sigma_inverse_apply");
  const Eigen::MatrixXd frame = m.normal_frame(x);
  const Eigen::VectorXd normal_part = frame * (frame.transpose() * v);
  const double c2 = alpha_scale * alpha_scale;
  return (v - normal_part) / (sigma * sigma) +
         normal_part / (sigma * sigma + c2);
}

/// Same split applied to the perturbation covariance itself (used by the
/// Niso loss target at the clean point).
inline Eigen::VectorXd niso_score_target(const Manifold& m,
                                         const Eigen::VectorXd& x_clean,
                                         const Eigen::VectorXd& x_noisy,
                                         double sigma, double c_niso) {
  return -sigma_inverse_apply(m, x_clean, sigma, c_niso, x_noisy - x_clean);
}

struct DeterminantResult {
  double value;
  double log_value;
};

/// det Sigma = sigma^{2d} (sigma^2 + c^2)^{n-d} with c = alpha_scale.
inline DeterminantResult sigma_det(double sigma, double alpha_scale, int n,
                                   int d) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(0 < d && d < n)) throw ConfigError("need 0 < d < n");
  const double c2 = alpha_scale * alpha_scale;
  const double log_det = 2.0 * d * std::log(sigma) +
                         (n - d) * std::log(sigma * sigma + c2);
  return {std::exp(log_det), log_det};
}

}  // namespace mandiff
