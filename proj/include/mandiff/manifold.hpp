#pragma once

#include <cmath>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "mandiff/errors.hpp"

namespace mandiff {

inline void check_vector_dim(const Eigen::VectorXd& x, Eigen::Index n,
                             const char* what) {
  if (x.size() != n)
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(n) + ", got " +
                         std::to_string(x.size()));
}

/// Modified Gram-Schmidt over the columns of A in index order.
/// Throws GeometricDegeneracyError if the columns are not independent.
inline Eigen::MatrixXd orthonormalize_columns(Eigen::MatrixXd a) {
  const double scale = std::max(1.0, a.norm());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i)
      a.col(j) -= a.col(i).dot(a.col(j)) * a.col(i);
    const double nrm = a.col(j).norm();
    if (nrm <= 1e-12 * scale)
      throw GeometricDegeneracyError(
          "constraint gradient is rank deficient (column " +
          std::to_string(j) + ")");
    a.col(j) /= nrm;
  }
  return a;
}

/// Embedded submanifold {x in R^n : xi(x) = 0} with d = intrinsic dimension.
///
/// All operations are pure functions of immutable data and safe for
/// concurrent callers. The normal frame, projection matrix and closest-point
/// projection are also defined off the manifold wherever the constraint
/// gradient keeps full rank (meshes use the face owning the closest point).
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual int ambient_dim() const = 0;
  virtual int intrinsic_dim() const = 0;
  int codim() const { return ambient_dim() - intrinsic_dim(); }
  virtual std::string kind() const = 0;

  /// xi(x), length n-d; zero (within tolerance) iff x lies on the manifold.
  virtual Eigen::VectorXd constraint(const Eigen::VectorXd& x) const = 0;

  /// grad xi(x), n x (n-d), full column rank wherever defined.
  virtual Eigen::MatrixXd constraint_gradient(
      const Eigen::VectorXd& x) const = 0;

  /// Orthonormal basis of the normal space, n x (n-d). Deterministic:
  /// modified Gram-Schmidt over grad xi columns in index order.
  virtual Eigen::MatrixXd normal_frame(const Eigen::VectorXd& x) const {
    return orthonormalize_columns(constraint_gradient(x));
  }

  /// Tangent-space projector P = I - N N^T.
  Eigen::MatrixXd projection_matrix(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd frame = normal_frame(x);
    return Eigen::MatrixXd::Identity(ambient_dim(), ambient_dim()) -
           frame * frame.transpose();
  }

  /// Closest-point projection pi(x). Subclasses override with closed forms;
  /// the default runs constrained Gauss-Newton on xi(x) = 0.
  virtual Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  /// Geodesic endpoint from `base` along `tangent`. Only defined for
  /// variants that need it (hyperplane, sphere, SO(k)).
  virtual Eigen::VectorXd exp_map(const Eigen::VectorXd& base,
                                  const Eigen::VectorXd& tangent) const {
    (void)base;
    (void)tangent;
    throw UnsupportedMethodError("exp_map is not defined for " + kind());
  }

  double on_manifold_tol() const { return 1e-9; }

  bool is_on_manifold(const Eigen::VectorXd& x, double tol) const {
    return constraint(x).norm() <= tol;
  }
  bool is_on_manifold(const Eigen::VectorXd& x) const {
    return is_on_manifold(x, on_manifold_tol());
  }
};

/// Gauss-Newton iteration for xi(x)=0 moving along span(grad xi):
///   x <- x - grad xi (grad xi^T grad xi)^{-1} xi(x).
/// Approximates the closest point for small constraint violations.
inline Eigen::VectorXd project_gauss_newton(const Manifold& m,
                                            Eigen::VectorXd x,
                                            int max_iters = 50,
                                            double tol = 1e-10) {
  check_vector_dim(x, m.ambient_dim(), "project");
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd r = m.constraint(x);
    if (r.norm() <= tol) return x;
    const Eigen::MatrixXd g = m.constraint_gradient(x);
    const Eigen::MatrixXd gram = g.transpose() * g;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
      throw GeometricDegeneracyError("singular Gram matrix in projection");
    x -= g * ldlt.solve(r);
  }
  const double res = m.constraint(x).norm();
  if (res <= tol) return x;
  throw ProjectionError("Gauss-Newton projection did not converge", res);
}

inline Eigen::VectorXd Manifold::project(const Eigen::VectorXd& x) const {
  return project_gauss_newton(*this, x);
}

/// {x in R^n : x_n = 0}, the flat test manifold. d = n-1.
class HyperplaneManifold final : public Manifold {
 public:
  explicit HyperplaneManifold(int ambient_dim = 3) : n_(ambient_dim) {
    if (n_ < 2) throw ConfigError("hyperplane needs ambient dimension >= 2");
  }

  int ambient_dim() const override { return n_; }
  int intrinsic_dim() const override { return n_ - 1; }
  std::string kind() const override { return "hyperplane"; }

  Eigen::VectorXd constraint(const Eigen::VectorXd& x) const override {
    check_vector_dim(x, n_, "constraint");
    Eigen::VectorXd r(1);
    r[0] = x[n_ - 1];
    return r;
  }

  Eigen::MatrixXd constraint_gradient(const Eigen::VectorXd& x) const override {
    check_vector_dim(x, n_, "constraint_gradient");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_, 1);
    g(n_ - 1, 0) = 1.0;
    return g;
  }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const override {
    check_vector_dim(x, n_, "project");
    Eigen::VectorXd y = x;
    y[n_ - 1] = 0.0;
    return y;
  }

  Eigen::VectorXd exp_map(const Eigen::VectorXd& base,
                          const Eigen::VectorXd& tangent) const override {
    check_vector_dim(base, n_, "exp_map base");
    check_vector_dim(tangent, n_, "exp_map tangent");
    if (std::abs(tangent[n_ - 1]) > 1e-8)
      throw InvalidTangentError("tangent leaves the hyperplane");
    return base + tangent;
  }

 private:
  int n_;
};

/// Unit sphere S^{n-1} in R^n; n = 2 is the unit circle.
class SphereManifold final : public Manifold {
 public:
  explicit SphereManifold(int ambient_dim = 2) : n_(ambient_dim) {
    if (n_ < 2) throw ConfigError("sphere needs ambient dimension >= 2");
  }

  int ambient_dim() const override { return n_; }
  int intrinsic_dim() const override { return n_ - 1; }
  std::string kind() const override { return "sphere"; }

  Eigen::VectorXd constraint(const Eigen::VectorXd& x) const override {
    check_vector_dim(x, n_, "constraint");
    Eigen::VectorXd r(1);
    r[0] = 0.5 * (x.squaredNorm() - 1.0);
    return r;
  }

  Eigen::MatrixXd constraint_gradient(const Eigen::VectorXd& x) const override {
    check_vector_dim(x, n_, "constraint_gradient");
    return x;
  }

  Eigen::MatrixXd normal_frame(const Eigen::VectorXd& x) const override {
    check_vector_dim(x, n_, "normal_frame");
    const double nrm = x.norm();
    if (nrm <= 1e-12)
      throw GeometricDegeneracyError("sphere normal undefined at the origin");
    return x / nrm;
  }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const override {
    check_vector_dim(x, n_, "project");
    const double nrm = x.norm();
    if (nrm <= 1e-12)
      throw ProjectionError("sphere projection undefined at the origin", 1.0);
    return x / nrm;
  }

  /// Great-circle geodesic: cos(|v|) base + sin(|v|) v/|v|.
  Eigen::VectorXd exp_map(const Eigen::VectorXd& base,
                          const Eigen::VectorXd& tangent) const override {
    check_vector_dim(base, n_, "exp_map base");
    check_vector_dim(tangent, n_, "exp_map tangent");
    if (std::abs(base.dot(tangent)) > 1e-8)
      throw InvalidTangentError("tangent not orthogonal to sphere radius");
    const double theta = tangent.norm();
    if (theta == 0.0) return base;
    return std::cos(theta) * base + (std::sin(theta) / theta) * tangent;
  }

 private:
  int n_;
};

/// SO(k) as the zero set of the upper-triangular part (diagonal included)
/// of Q Q^T - I, with matrices flattened row-major into R^{k^2}.
/// n = k^2, d = k(k-1)/2, n-d = k(k+1)/2.
class SpecialOrthogonalManifold final : public Manifold {
 public:
  explicit SpecialOrthogonalManifold(int order) : k_(order) {
    if (k_ < 2) throw ConfigError("SO(k) needs order >= 2");
  }

  int order() const { return k_; }
  int ambient_dim() const override { return k_ * k_; }
  int intrinsic_dim() const override { return k_ * (k_ - 1) / 2; }
  std::string kind() const override { return "so" + std::to_string(k_); }

  Eigen::MatrixXd unflatten(const Eigen::VectorXd& x) const {
    check_vector_dim(x, ambient_dim(), "unflatten");
    Eigen::MatrixXd q(k_, k_);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) q(i, j) = x[i * k_ + j];
    return q;
  }

  Eigen::VectorXd flatten(const Eigen::MatrixXd& q) const {
    Eigen::VectorXd x(ambient_dim());
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) x[i * k_ + j] = q(i, j);
    return x;
  }

  /// Row-major upper-triangular entries (i <= j) of Q Q^T - I.
  Eigen::VectorXd constraint(const Eigen::VectorXd& x) const override {
    const Eigen::MatrixXd q = unflatten(x);
    const Eigen::MatrixXd res = q * q.transpose() -
                                Eigen::MatrixXd::Identity(k_, k_);
    Eigen::VectorXd r(codim());
    int idx = 0;
    for (int i = 0; i < k_; ++i)
      for (int j = i; j < k_; ++j) r[idx++] = res(i, j);
    return r;
  }

  /// d/dQ_ab of (Q Q^T)_ij = delta_ai Q_jb + delta_aj Q_ib.
  Eigen::MatrixXd constraint_gradient(const Eigen::VectorXd& x) const override {
    const Eigen::MatrixXd q = unflatten(x);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(ambient_dim(), codim());
    int col = 0;
    for (int i = 0; i < k_; ++i) {
      for (int j = i; j < k_; ++j) {
        for (int b = 0; b < k_; ++b) {
          g(i * k_ + b, col) += q(j, b);
          g(j * k_ + b, col) += q(i, b);
        }
        ++col;
      }
    }
    return g;
  }

  /// Polar factor via SVD, with the determinant sign fixed to +1.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const override {
    const Eigen::MatrixXd q = unflatten(x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        q, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXd u = svd.matrixU();
    const Eigen::MatrixXd v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(k_ - 1) *= -1.0;
    return flatten(u * v.transpose());
  }

  /// Q exp(A) with A = Q^T V skew-symmetric, via scaling-and-squaring expm.
  Eigen::VectorXd exp_map(const Eigen::VectorXd& base,
                          const Eigen::VectorXd& tangent) const override {
    const Eigen::MatrixXd q = unflatten(base);
    const Eigen::MatrixXd v = unflatten(tangent);
    const Eigen::MatrixXd a = q.transpose() * v;
    if ((a + a.transpose()).cwiseAbs().maxCoeff() > 1e-8)
      throw InvalidTangentError("tangent is not of the form Q*(skew)");
    const Eigen::MatrixXd skew = 0.5 * (a - a.transpose());
    return flatten(q * skew.exp());
  }

 private:
  int k_;
};

}  // namespace mandiff
