#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mandiff/errors.hpp"
#include "mandiff/manifold.hpp"
#include "mandiff/perturbation.hpp"

namespace mandiff {

/// Closed-form score of the isotropically perturbed planar Gaussian mixture
/// embedded at z = 0: per-mode covariance diag(s^2+sigma^2, s^2+sigma^2,
/// sigma^2). Stable through log-sum-exp.
inline Eigen::Vector3d gmm_plane_score(const Eigen::Vector3d& x, double sigma,
                                       const std::vector<Eigen::Vector2d>& modes,
                                       double mode_std) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (modes.empty()) throw ConfigError("need at least one mode");
  const double var_xy = mode_std * mode_std + sigma * sigma;
  std::vector<double> logw(modes.size());
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const double dx = x[0] - modes[k][0];
    const double dy = x[1] - modes[k][1];
    logw[k] = -(dx * dx + dy * dy) / (2.0 * var_xy);
    max_logw = std::max(max_logw, logw[k]);
  }
  double wsum = 0.0;
  Eigen::Vector2d grad_xy = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const double w = std::exp(logw[k] - max_logw);
    wsum += w;
    grad_xy += w * (modes[k] - x.head<2>());
  }
  Eigen::Vector3d score;
  score.head<2>() = grad_xy / (wsum * var_xy);
  score[2] = -x[2] / (sigma * sigma);
  return score;
}

/// The standard nine modes on {-1, 0, 1}^2.
inline std::vector<Eigen::Vector2d> gmm_plane_modes() {
  std::vector<Eigen::Vector2d> modes;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) modes.emplace_back(a, b);
  return modes;
}

/// Discretized target measure p0 dsigma_M on a 1-D or 2-D manifold patch,
/// used to compute reference perturbed scores by quadrature.
struct QuadratureManifold {
  Eigen::MatrixXd points;   // n x M node positions
  Eigen::VectorXd log_wp;   // log(weight_i * p0_i), normalized: sum w p0 = 1
  Eigen::MatrixXd normals;  // n x M unit normals (codimension 1)
  int ambient_dim = 0;
  int intrinsic_dim = 0;

  Eigen::Index node_count() const { return points.cols(); }

  /// Uniformly spaced nodes on the unit circle; `density` is the
  /// unnormalized p0 as a function of the angle.
  static QuadratureManifold circle(int nodes,
                                   const std::function<double(double)>& density) {
    if (nodes < 8) throw ConfigError("too few quadrature nodes");
    QuadratureManifold qm;
    qm.ambient_dim = 2;
    qm.intrinsic_dim = 1;
    qm.points.resize(2, nodes);
    qm.normals.resize(2, nodes);
    Eigen::VectorXd wp(nodes);
    const double dtheta = 2.0 * M_PI / nodes;
    for (int i = 0; i < nodes; ++i) {
      const double theta = i * dtheta;
      qm.points.col(i) = Eigen::Vector2d(std::cos(theta), std::sin(theta));
      qm.normals.col(i) = qm.points.col(i);
      const double p = density(theta);
      if (!(p > 0.0))
        throw ConfigError("density must be positive on the circle");
      wp[i] = dtheta * p;
    }
    qm.log_wp = (wp / wp.sum()).array().log();
    return qm;
  }

  /// Square grid on {z = 0}, side [-half_width, half_width]^2, embedded in
  /// R^3. Density must decay well inside the patch (8 sigma padding).
  static QuadratureManifold plane_patch(
      int nodes_per_side, double half_width,
      const std::function<double(double, double)>& density) {
    if (nodes_per_side < 8) throw ConfigError("too few quadrature nodes");
    QuadratureManifold qm;
    qm.ambient_dim = 3;
    qm.intrinsic_dim = 2;
    const int m = nodes_per_side * nodes_per_side;
    qm.points.resize(3, m);
    qm.normals.resize(3, m);
    Eigen::VectorXd wp(m);
    const double h = 2.0 * half_width / nodes_per_side;
    int idx = 0;
    for (int i = 0; i < nodes_per_side; ++i) {
      const double x = -half_width + (i + 0.5) * h;
      for (int j = 0; j < nodes_per_side; ++j) {
        const double y = -half_width + (j + 0.5) * h;
        qm.points.col(idx) = Eigen::Vector3d(x, y, 0.0);
        qm.normals.col(idx) = Eigen::Vector3d(0.0, 0.0, 1.0);
        const double p = density(x, y);
        if (!(p >= 0.0)) throw ConfigError("density must be nonnegative");
        wp[idx] = h * h * p;
        ++idx;
      }
    }
    qm.log_wp = ((wp.array() + 1e-300) / wp.sum()).log();
    return qm;
  }
};

namespace detail {

/// Per-node log kernel and gradient of the log kernel w.r.t. the query.
/// For the non-isotropic kernel, c > 0 is the fixed normal noise scale.
inline void kernel_terms(const QuadratureManifold& qm, const Eigen::VectorXd& x,
                         double sigma, double c, Eigen::VectorXd& log_kernel,
                         Eigen::MatrixXd& kernel_grad) {
  const Eigen::Index m = qm.node_count();
  log_kernel.resize(m);
  kernel_grad.resize(qm.ambient_dim, m);
  const double s2 = sigma * sigma;
  const double nvar = s2 + c * c;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd r = x - qm.points.col(i);
    if (c == 0.0) {
      log_kernel[i] = -r.squaredNorm() / (2.0 * s2);
      kernel_grad.col(i) = -r / s2;
    } else {
      const double rn = qm.normals.col(i).dot(r);
      const double tan2 = r.squaredNorm() - rn * rn;
      log_kernel[i] = -0.5 * (tan2 / s2 + rn * rn / nvar);
      kernel_grad.col(i) =
          -(r - rn * qm.normals.col(i)) / s2 - (rn / nvar) * qm.normals.col(i);
    }
  }
}

}  // namespace detail

/// grad log p_sigma(x) for the (an)isotropically perturbed quadrature
/// measure, accumulated in log space. Throws QuadratureUnderflowError when
/// every kernel log-weight is below -700.
inline Eigen::VectorXd quadrature_score(const QuadratureManifold& qm,
                                        const Eigen::VectorXd& x, double sigma,
                                        const NisoParams* niso = nullptr) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  check_vector_dim(x, qm.ambient_dim, "quadrature_score");
  Eigen::VectorXd log_kernel;
  Eigen::MatrixXd kernel_grad;
  detail::kernel_terms(qm, x, sigma, niso ? niso->c_niso : 0.0, log_kernel,
                       kernel_grad);
  if (log_kernel.maxCoeff() < -700.0)
    throw QuadratureUnderflowError(
        "query too far from the manifold for this sigma");
  const Eigen::VectorXd logs = log_kernel + qm.log_wp;
  const double shift = logs.maxCoeff();
  double denom = 0.0;
  Eigen::VectorXd num = Eigen::VectorXd::Zero(qm.ambient_dim);
  for (Eigen::Index i = 0; i < qm.node_count(); ++i) {
    const double w = std::exp(logs[i] - shift);
    denom += w;
    num += w * kernel_grad.col(i);
  }
  return num / denom;
}

/// log p_sigma(x) up to an additive constant shared across queries
/// (normalization and kernel prefactors dropped).
inline double quadrature_log_density(const QuadratureManifold& qm,
                                     const Eigen::VectorXd& x, double sigma,
                                     const NisoParams* niso = nullptr) {
  Eigen::VectorXd log_kernel;
  Eigen::MatrixXd kernel_grad;
  detail::kernel_terms(qm, x, sigma, niso ? niso->c_niso : 0.0, log_kernel,
                       kernel_grad);
  const Eigen::VectorXd logs = log_kernel + qm.log_wp;
  const double shift = logs.maxCoeff();
  return shift + std::log((logs.array() - shift).exp().sum());
}

/// Split v into tangential and normal parts at x: (P v, (I-P) v).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> tangential_normal_decompose(
    const Manifold& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
  check_vector_dim(v, m.ambient_dim(), "tangential_normal_decompose");
  const Eigen::MatrixXd frame = m.normal_frame(x);
  const Eigen::VectorXd normal = frame * (frame.transpose() * v);
  return {v - normal, normal};
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of log(norm) against log(sigma).
inline SlopeFit scale_exponent_fit(const std::vector<double>& sigmas,
                                   const std::vector<double>& norms) {
  if (sigmas.size() != norms.size())
    throw DimensionError("scale_exponent_fit: length mismatch");
  const std::size_t n = sigmas.size();
  if (n < 4) throw ConfigError("scale_exponent_fit needs at least 4 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigmas[i] > 0.0) || !(norms[i] > 0.0))
      throw ConfigError("scale_exponent_fit needs positive inputs");
    const double x = std::log(sigmas[i]);
    const double y = std::log(norms[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double nn = static_cast<double>(n);
  const double cov = sxy - sx * sy / nn;
  const double var_x = sxx - sx * sx / nn;
  const double var_y = syy - sy * sy / nn;
  SlopeFit fit;
  fit.slope = cov / var_x;
  fit.intercept = (sy - fit.slope * sx) / nn;
  fit.r_squared = var_y > 0.0 ? (cov * cov) / (var_x * var_y) : 1.0;
  return fit;
}

/// d/dtheta log p0 on the unit circle by central differences.
inline double riemannian_score_circle(double theta,
                                      const std::function<double(double)>& p0) {
  const double h = 1e-5;
  const double pp = p0(theta + h);
  const double pm = p0(theta - h);
  if (!(pp > 0.0) || !(pm > 0.0))
    throw ConfigError("circle density must be positive");
  return (std::log(pp) - std::log(pm)) / (2.0 * h);
}

/// The same Riemannian score as an ambient 2-vector along the tangent
/// (-sin theta, cos theta).
inline Eigen::Vector2d riemannian_score_circle_ambient(
    double theta, const std::function<double(double)>& p0) {
  const double ds = riemannian_score_circle(theta, p0);
  return ds * Eigen::Vector2d(-std::sin(theta), std::cos(theta));
}

}  // namespace mandiff
