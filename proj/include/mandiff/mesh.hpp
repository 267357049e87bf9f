#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mandiff/errors.hpp"
#include "mandiff/manifold.hpp"

namespace mandiff {

/// Triangle mesh with precomputed per-face frame data. Built once,
/// read-only afterwards.
struct TriangleMeshData {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Eigen::Vector3d> face_normals;  // unit, from vertex winding
  std::vector<double> face_areas;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  double total_area() const {
    double s = 0.0;
    for (double a : face_areas) s += a;
    return s;
  }

  void finalize() {
    const int nv = vertex_count();
    face_normals.clear();
    face_areas.clear();
    face_normals.reserve(faces.size());
    face_areas.reserve(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
      for (int c = 0; c < 3; ++c)
        if (faces[f][c] < 0 || faces[f][c] >= nv)
          throw MeshQualityError("face " + std::to_string(f) +
                                 " references missing vertex");
      const Eigen::Vector3d& a = vertices[faces[f][0]];
      const Eigen::Vector3d& b = vertices[faces[f][1]];
      const Eigen::Vector3d& c = vertices[faces[f][2]];
      const Eigen::Vector3d n = (b - a).cross(c - a);
      const double n2 = n.norm();
      if (n2 <= 1e-14)
        throw MeshQualityError("degenerate (zero-area) face " +
                               std::to_string(f));
      face_normals.push_back(n / n2);
      face_areas.push_back(0.5 * n2);
    }
  }
};

struct ClosestPointResult {
  Eigen::Vector3d point;
  int face = -1;
  double distance = 0.0;
  Eigen::Vector3d barycentric;  // w.r.t. the owning face's vertices
};

/// Closest point on a single triangle (a,b,c) to p, with barycentrics.
inline Eigen::Vector3d closest_point_on_triangle(
    const Eigen::Vector3d& p, const Eigen::Vector3d& a,
    const Eigen::Vector3d& b, const Eigen::Vector3d& c,
    Eigen::Vector3d* bary = nullptr) {
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  auto out = [&](double u, double v, double w) {
    if (bary) *bary = Eigen::Vector3d(u, v, w);
    return Eigen::Vector3d(u * a + v * b + w * c);
  };
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return out(1, 0, 0);
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return out(0, 1, 0);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return out(1 - v, v, 0);
  }
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return out(0, 0, 1);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return out(1 - w, 0, w);
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return out(0, 1 - w, w);
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return out(1 - v - w, v, w);
}

/// Exhaustive closest-point query. Ties (shared edges/vertices) resolve to
/// the smallest face index.
inline ClosestPointResult closest_point(const TriangleMeshData& mesh,
                                        const Eigen::Vector3d& query) {
  ClosestPointResult best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int f = 0; f < mesh.face_count(); ++f) {
    Eigen::Vector3d bary;
    const Eigen::Vector3d cp = closest_point_on_triangle(
        query, mesh.vertices[mesh.faces[f][0]], mesh.vertices[mesh.faces[f][1]],
        mesh.vertices[mesh.faces[f][2]], &bary);
    const double d2 = (query - cp).squaredNorm();
    if (d2 < best_d2 - 1e-24 * (1.0 + best_d2)) {
      best_d2 = d2;
      best.point = cp;
      best.face = f;
      best.barycentric = bary;
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

/// OBJ subset reader: `v x y z` and triangle `f i j k` records, 1-based
/// indices; `f i/..` forms keep the vertex index. Everything else ignored.
inline TriangleMeshData load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshQualityError("cannot open OBJ file: " + path);
  TriangleMeshData mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw MeshQualityError("malformed vertex record: " + line);
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        const auto slash = tok.find('/');
        idx.push_back(std::stoi(tok.substr(0, slash)) - 1);
      }
      if (idx.size() != 3)
        throw MeshQualityError("only triangle faces are supported: " + line);
      mesh.faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  mesh.finalize();
  return mesh;
}

inline void save_obj(const TriangleMeshData& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshQualityError("cannot write OBJ file: " + path);
  out.precision(17);
  for (const auto& v : mesh.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

/// Regular icosahedron with unit circumradius (12 vertices, 20 faces).
inline TriangleMeshData make_icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMeshData mesh;
  const double raw[12][3] = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (const auto& v : raw)
    mesh.vertices.push_back(
        Eigen::Vector3d(v[0], v[1], v[2]).normalized());
  const int f[20][3] = {{0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10},
                        {0, 10, 11}, {1, 5, 9},  {5, 11, 4},  {11, 10, 2},
                        {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
                        {3, 2, 6},   {3, 6, 8},  {3, 8, 9},   {4, 9, 5},
                        {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (const auto& face : f) mesh.faces.push_back({face[0], face[1], face[2]});
  mesh.finalize();
  return mesh;
}

/// Cotangent stiffness matrix (positive semidefinite convention).
inline Eigen::SparseMatrix<double> cotangent_laplacian(
    const TriangleMeshData& mesh) {
  using T = Eigen::Triplet<double>;
  std::vector<T> trips;
  trips.reserve(mesh.face_count() * 12);
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& tri = mesh.faces[f];
    for (int corner = 0; corner < 3; ++corner) {
      const int i = tri[corner];
      const int j = tri[(corner + 1) % 3];
      const int k = tri[(corner + 2) % 3];
      // cotangent of the angle at k, opposite edge (i,j)
      const Eigen::Vector3d u = mesh.vertices[i] - mesh.vertices[k];
      const Eigen::Vector3d v = mesh.vertices[j] - mesh.vertices[k];
      const double cross = u.cross(v).norm();
      if (cross <= 1e-14)
        throw MeshQualityError("degenerate angle in face " + std::to_string(f));
      const double w = 0.5 * u.dot(v) / cross;
      trips.emplace_back(i, j, -w);
      trips.emplace_back(j, i, -w);
      trips.emplace_back(i, i, w);
      trips.emplace_back(j, j, w);
    }
  }
  Eigen::SparseMatrix<double> lap(mesh.vertex_count(), mesh.vertex_count());
  lap.setFromTriplets(trips.begin(), trips.end());
  return lap;
}

/// Lumped (barycentric) mass matrix diagonal: a third of incident face area.
inline Eigen::VectorXd lumped_mass(const TriangleMeshData& mesh) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int f = 0; f < mesh.face_count(); ++f)
    for (int c = 0; c < 3; ++c)
      mass[mesh.faces[f][c]] += mesh.face_areas[f] / 3.0;
  return mass;
}

/// Triangle-mesh manifold (n = 3, d = 2). Off-manifold geometry is assigned
/// from the face owning the closest point, smallest face index on ties.
class TriangleMeshManifold final : public Manifold {
 public:
  explicit TriangleMeshManifold(TriangleMeshData mesh)
      : mesh_(std::move(mesh)) {
    if (mesh_.face_normals.size() != mesh_.faces.size()) mesh_.finalize();
  }

  const TriangleMeshData& mesh() const { return mesh_; }

  int ambient_dim() const override { return 3; }
  int intrinsic_dim() const override { return 2; }
  std::string kind() const override { return "mesh"; }

  ClosestPointResult closest(const Eigen::VectorXd& x) const {
    check_vector_dim(x, 3, "closest");
    return closest_point(mesh_, Eigen::Vector3d(x[0], x[1], x[2]));
  }

  /// Signed distance to the mesh: |x - pi(x)| signed by the owning face
  /// normal. Zero exactly on the surface.
  Eigen::VectorXd constraint(const Eigen::VectorXd& x) const override {
    const ClosestPointResult cp = closest(x);
    const Eigen::Vector3d diff =
        Eigen::Vector3d(x[0], x[1], x[2]) - cp.point;
    const double side = mesh_.face_normals[cp.face].dot(diff);
    Eigen::VectorXd r(1);
    r[0] = (side >= 0.0 ? 1.0 : -1.0) * cp.distance;
    return r;
  }

  Eigen::MatrixXd constraint_gradient(const Eigen::VectorXd& x) const override {
    return normal_frame(x);
  }

  Eigen::MatrixXd normal_frame(const Eigen::VectorXd& x) const override {
    const ClosestPointResult cp = closest(x);
    return mesh_.face_normals[cp.face];
  }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const override {
    return closest(x).point;
  }

 private:
  TriangleMeshData mesh_;
};

}  // namespace mandiff
