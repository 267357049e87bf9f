#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "mandiff/errors.hpp"
#include "mandiff/mesh.hpp"
#include "mandiff/oracles.hpp"
#include "mandiff/rng.hpp"

namespace mandiff {

/// Nine-mode planar Gaussian mixture (modes on {-1,0,1}^2, std 0.3)
/// embedded at z = 0. Rows are samples.
inline Eigen::MatrixXd sample_gmm_plane(Eigen::Index count, Rng& rng,
                                        double mode_std = 0.3) {
  if (count < 1) throw ConfigError("sample count must be >= 1");
  const std::vector<Eigen::Vector2d> modes = gmm_plane_modes();
  Eigen::MatrixXd out(count, 3);
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::Vector2d& mu = modes[rng.uniform_int(modes.size())];
    out(i, 0) = mu[0] + mode_std * rng.normal();
    out(i, 1) = mu[1] + mode_std * rng.normal();
    out(i, 2) = 0.0;
  }
  return out;
}

/// Haar-ish random SO(k) centers: QR of a Gaussian matrix with the sign of
/// the R diagonal fixed, then the determinant flipped to +1 if needed.
inline std::vector<Eigen::MatrixXd> random_son_centers(int k, int count,
                                                       Rng& rng) {
  std::vector<Eigen::MatrixXd> centers;
  centers.reserve(count);
  for (int c = 0; c < count; ++c) {
    const Eigen::MatrixXd g = rng.normal_matrix(k, k);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    if (q.determinant() < 0.0) q.col(0) *= -1.0;
    centers.push_back(q);
  }
  return centers;
}

/// Mixture of wrapped normals on SO(k): pick a center uniformly, draw a
/// skew-symmetric A with N(0, scale^2) strict-upper entries, return
/// center * expm(A) flattened row-major. Rows are samples.
inline Eigen::MatrixXd sample_wrapped_normal_son(
    int k, const std::vector<Eigen::MatrixXd>& centers, double scale,
    Eigen::Index count, Rng& rng) {
  if (centers.empty()) throw ConfigError("need at least one center");
  if (!(scale >= 0.0)) throw ConfigError("scale must be nonnegative");
  for (const auto& c : centers) {
    if (c.rows() != k || c.cols() != k)
      throw DimensionError("center has wrong shape");
    const double residual =
        (c * c.transpose() - Eigen::MatrixXd::Identity(k, k)).norm();
    if (residual > 1e-8)
      throw GeometricDegeneracyError("center is not on SO(k), |QQ^T - I| = " +
                                     std::to_string(residual));
  }
  Eigen::MatrixXd out(count, k * k);
  for (Eigen::Index s = 0; s < count; ++s) {
    const Eigen::MatrixXd& center = centers[rng.uniform_int(centers.size())];
    Eigen::MatrixXd skew = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        const double a = scale * rng.normal();
        skew(i, j) = a;
        skew(j, i) = -a;
      }
    const Eigen::MatrixXd q = center * skew.exp();
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) out(s, i * k + j) = q(i, j);
  }
  return out;
}

/// Von Mises-Fisher-like density exp(kappa mu.x) on the unit sphere S^{n-1},
/// sampled by rejection against the uniform measure. Rows are samples.
inline Eigen::MatrixXd sample_vmf_sphere(const Eigen::VectorXd& mu,
                                         double kappa, Eigen::Index count,
                                         Rng& rng) {
  if (count < 1) throw ConfigError("sample count must be >= 1");
  const Eigen::Index n = mu.size();
  if (std::abs(mu.norm() - 1.0) > 1e-8)
    throw ConfigError("vmf mean direction must be unit length");
  Eigen::MatrixXd out(count, n);
  for (Eigen::Index s = 0; s < count; ++s) {
    for (;;) {
      Eigen::VectorXd x = rng.normal_vector(n);
      const double nrm = x.norm();
      if (nrm <= 1e-12) continue;
      x /= nrm;
      if (std::log(rng.uniform() + 1e-300) <= kappa * (mu.dot(x) - 1.0)) {
        out.row(s) = x.transpose();
        break;
      }
    }
  }
  return out;
}

/// Target density on a mesh built from eigenfunctions of the cotangent
/// Laplacian: per selected eigenpair, the clamped (nonnegative part of the)
/// eigenfunction normalized over the surface; the target is their
/// equal-weight mixture.
struct MeshDensity {
  Eigen::VectorXd vertex_density;  // mixture density at vertices
  Eigen::VectorXd face_probs;      // area-weighted vertex average, sums to 1
  Eigen::VectorXd eigenvalues;     // of the selected pairs, ascending input
  std::vector<int> eigen_indices;
};

inline MeshDensity mesh_eigen_density(const TriangleMeshData& mesh,
                                      const std::vector<int>& eigen_indices) {
  if (mesh.vertex_count() > 3000)
    throw ConfigError("dense eigensolve capped at 3000 vertices");
  if (eigen_indices.empty()) throw ConfigError("need at least one eigenpair");
  const Eigen::MatrixXd stiffness =
      Eigen::MatrixXd(cotangent_laplacian(mesh));
  const Eigen::VectorXd mass = lumped_mass(mesh);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      stiffness, mass.asDiagonal().toDenseMatrix());
  if (solver.info() != Eigen::Success)
    throw NumericError("mesh eigendecomposition failed");

  auto integrate = [&mesh](const Eigen::VectorXd& per_vertex) {
    double total = 0.0;
    for (int f = 0; f < mesh.face_count(); ++f) {
      const auto& tri = mesh.faces[f];
      total += mesh.face_areas[f] *
               (per_vertex[tri[0]] + per_vertex[tri[1]] + per_vertex[tri[2]]) /
               3.0;
    }
    return total;
  };

  MeshDensity density;
  density.eigen_indices = eigen_indices;
  density.eigenvalues.resize(eigen_indices.size());
  Eigen::VectorXd mixture = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (std::size_t s = 0; s < eigen_indices.size(); ++s) {
    const int idx = eigen_indices[s];
    if (idx < 0 || idx >= mesh.vertex_count())
      throw ConfigError("eigen index " + std::to_string(idx) +
                        " out of range");
    density.eigenvalues[s] = solver.eigenvalues()[idx];
    Eigen::VectorXd phi = solver.eigenvectors().col(idx);
    // Eigenvector sign is arbitrary; keep the orientation whose positive
    // part carries the larger mass.
    const double pos_mass = integrate(phi.cwiseMax(0.0));
    const double neg_mass = integrate((-phi).cwiseMax(0.0));
    if (neg_mass > pos_mass) phi = -phi;
    Eigen::VectorXd clamped = phi.cwiseMax(0.0);
    const double z = integrate(clamped);
    if (!(z > 0.0))
      throw NumericError("clamped eigenfunction has zero mass");
    mixture += clamped / z;
  }
  mixture /= static_cast<double>(eigen_indices.size());
  density.vertex_density = mixture;

  density.face_probs.resize(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& tri = mesh.faces[f];
    density.face_probs[f] =
        mesh.face_areas[f] *
        (mixture[tri[0]] + mixture[tri[1]] + mixture[tri[2]]) / 3.0;
  }
  const double total = density.face_probs.sum();
  if (!(total > 0.0)) throw NumericError("mesh density has zero total mass");
  density.face_probs /= total;
  return density;
}

/// Draw from a MeshDensity: face by its probability, uniform barycentric
/// proposal, accept/reject against the linear per-face density with the
/// max vertex value as envelope. Rows are samples.
inline Eigen::MatrixXd sample_mesh_density(const TriangleMeshData& mesh,
                                           const MeshDensity& density,
                                           Eigen::Index count, Rng& rng) {
  if (count < 1) throw ConfigError("sample count must be >= 1");
  std::vector<double> cdf(mesh.face_count());
  double acc = 0.0;
  for (int f = 0; f < mesh.face_count(); ++f) {
    acc += density.face_probs[f];
    cdf[f] = acc;
  }
  Eigen::MatrixXd out(count, 3);
  for (Eigen::Index s = 0; s < count; ++s) {
    for (;;) {
      const double u = rng.uniform() * acc;
      const int face = static_cast<int>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const auto& tri = mesh.faces[std::min(face, mesh.face_count() - 1)];
      const double d0 = density.vertex_density[tri[0]];
      const double d1 = density.vertex_density[tri[1]];
      const double d2 = density.vertex_density[tri[2]];
      const double envelope = std::max({d0, d1, d2});
      const double r1 = std::sqrt(rng.uniform());
      const double r2 = rng.uniform();
      const double b0 = 1.0 - r1;
      const double b1 = r1 * (1.0 - r2);
      const double b2 = r1 * r2;
      const double value = b0 * d0 + b1 * d1 + b2 * d2;
      if (envelope <= 0.0) continue;
      if (rng.uniform() * envelope <= value) {
        const Eigen::Vector3d p = b0 * mesh.vertices[tri[0]] +
                                  b1 * mesh.vertices[tri[1]] +
                                  b2 * mesh.vertices[tri[2]];
        out.row(s) = p.transpose();
        break;
      }
    }
  }
  return out;
}

}  // namespace mandiff
