#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "mandiff/errors.hpp"
#include "mandiff/mesh.hpp"
#include "mandiff/rng.hpp"

namespace mandiff {

// Sample sets are dense row-per-sample matrices throughout this module.

inline void check_sample_set(const Eigen::MatrixXd& x, const char* name) {
  if (x.rows() == 0)
    throw DimensionError(std::string(name) + ": empty sample set");
  if (!x.allFinite())
    throw NumericError(std::string(name) + ": non-finite samples");
}

/// Median of pairwise distances over the pooled rows of X and Y, the default
/// MMD bandwidth. Reported alongside every MMD value.
inline double median_heuristic_bandwidth(const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& y) {
  check_sample_set(x, "median_heuristic");
  check_sample_set(y, "median_heuristic");
  Eigen::MatrixXd pooled(x.rows() + y.rows(), x.cols());
  pooled << x, y;
  // Cap the pooled size so the heuristic stays O(4096^2).
  const Eigen::Index cap = 4096;
  if (pooled.rows() > cap) {
    const Eigen::Index stride = (pooled.rows() + cap - 1) / cap;
    Eigen::MatrixXd thin((pooled.rows() + stride - 1) / stride, pooled.cols());
    for (Eigen::Index i = 0, r = 0; i < pooled.rows(); i += stride, ++r)
      thin.row(r) = pooled.row(i);
    pooled = std::move(thin);
  }
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(pooled.rows()) * (pooled.rows() - 1) / 2);
  for (Eigen::Index i = 0; i < pooled.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j)
      d2.push_back((pooled.row(i) - pooled.row(j)).squaredNorm());
  if (d2.empty()) return 1.0;
  std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
  const double med = std::sqrt(d2[d2.size() / 2]);
  return med > 0.0 ? med : 1.0;
}

/// Biased V-statistic MMD with the Gaussian kernel
/// exp(-||a-b||^2 / (2 gamma^2)); returns sqrt(max(0, MMD^2)).
inline double mmd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                  double bandwidth) {
  check_sample_set(x, "mmd");
  check_sample_set(y, "mmd");
  if (x.cols() != y.cols()) throw DimensionError("mmd: dimension mismatch");
  if (!(bandwidth > 0.0)) throw ConfigError("mmd: bandwidth must be positive");
  const double inv = -0.5 / (bandwidth * bandwidth);
  auto mean_kernel = [inv](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
    const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * (a * b.transpose());
    d2.colwise() += a2;
    d2.rowwise() += b2.transpose();
    return (inv * d2.array()).exp().mean();
  };
  const double mmd2 =
      mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y);
  return std::sqrt(std::max(0.0, mmd2));
}

/// 1-D Wasserstein-1 between empirical measures via quantile coupling;
/// handles unequal sample counts.
inline double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw DimensionError("wasserstein1_1d: empty input");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t m = a.size(), n = b.size();
  double total = 0.0;
  std::size_t i = 0, j = 0;
  double q = 0.0;
  while (i < m && j < n) {
    const double qa = static_cast<double>(i + 1) / m;
    const double qb = static_cast<double>(j + 1) / n;
    const double qn = std::min(qa, qb);
    total += (qn - q) * std::abs(a[i] - b[j]);
    q = qn;
    if (qa <= qb) ++i;
    if (qb <= qa) ++j;
  }
  return total;
}

/// Sliced 1-Wasserstein: average 1-D W1 over uniform random directions.
inline double sliced_w1(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                        int n_proj, Rng& rng) {
  check_sample_set(x, "sliced_w1");
  check_sample_set(y, "sliced_w1");
  if (x.cols() != y.cols())
    throw DimensionError("sliced_w1: dimension mismatch");
  if (n_proj < 1) throw ConfigError("sliced_w1: need n_proj >= 1");
  const Eigen::Index dim = x.cols();
  double total = 0.0;
  for (int p = 0; p < n_proj; ++p) {
    Eigen::VectorXd dir = rng.normal_vector(dim);
    double nrm = dir.norm();
    while (nrm <= 1e-12) {
      dir = rng.normal_vector(dim);
      nrm = dir.norm();
    }
    dir /= nrm;
    const Eigen::VectorXd px = x * dir;
    const Eigen::VectorXd py = y * dir;
    total += wasserstein1_1d(
        std::vector<double>(px.data(), px.data() + px.size()),
        std::vector<double>(py.data(), py.data() + py.size()));
  }
  return total / n_proj;
}

namespace detail {

/// Dense square assignment by shortest augmenting paths (Jonker-Volgenant
/// style). Returns the minimizing column for each row.
inline std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n, 0.0), v(n, 0.0), shortest(n);
  std::vector<int> col4row(n, -1), row4col(n, -1), pred(n);
  std::vector<char> scanned_row(n), scanned_col(n);
  for (int cur = 0; cur < n; ++cur) {
    std::fill(shortest.begin(), shortest.end(), inf);
    std::fill(scanned_row.begin(), scanned_row.end(), 0);
    std::fill(scanned_col.begin(), scanned_col.end(), 0);
    int i = cur, sink = -1;
    double min_val = 0.0;
    while (sink == -1) {
      scanned_row[i] = 1;
      double lowest = inf;
      int pick = -1;
      for (int j = 0; j < n; ++j) {
        if (scanned_col[j]) continue;
        const double reduced = min_val + cost(i, j) - u[i] - v[j];
        if (reduced < shortest[j]) {
          shortest[j] = reduced;
          pred[j] = i;
        }
        if (shortest[j] < lowest ||
            (shortest[j] == lowest && row4col[j] == -1)) {
          lowest = shortest[j];
          pick = j;
        }
      }
      if (pick == -1 || lowest == inf)
        throw NumericError("assignment problem is infeasible");
      min_val = lowest;
      scanned_col[pick] = 1;
      if (row4col[pick] == -1)
        sink = pick;
      else
        i = row4col[pick];
    }
    u[cur] += min_val;
    for (int k = 0; k < n; ++k)
      if (scanned_row[k] && k != cur) u[k] += min_val - shortest[col4row[k]];
    for (int j = 0; j < n; ++j)
      if (scanned_col[j]) v[j] += shortest[j] - min_val;
    int j = sink;
    while (true) {
      const int i2 = pred[j];
      row4col[j] = i2;
      std::swap(col4row[i2], j);
      if (i2 == cur) break;
    }
  }
  return col4row;
}

}  // namespace detail

/// Exact 2-Wasserstein between equally sized sets (optimal assignment on
/// squared costs, then sqrt of the mean).
inline double w2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  check_sample_set(x, "w2");
  check_sample_set(y, "w2");
  if (x.cols() != y.cols()) throw DimensionError("w2: dimension mismatch");
  if (x.rows() != y.rows())
    throw DimensionError("w2: exact assignment needs |X| = |Y|");
  if (x.rows() > 4096)
    throw ConfigError(
        "w2: more than 4096 points; subsample with a recorded seed");
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = (x.row(i) - y.row(j)).squaredNorm();
  const std::vector<int> match = detail::solve_assignment(cost);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, match[i]);
  return std::sqrt(total / n);
}

/// Per-face relative-frequency histogram; points are classified by the face
/// owning their closest point.
inline Eigen::VectorXd face_histogram(const TriangleMeshData& mesh,
                                      const Eigen::MatrixXd& x) {
  check_sample_set(x, "face_histogram");
  if (x.cols() != 3) throw DimensionError("face_histogram: need 3-D points");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(mesh.face_count());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const ClosestPointResult cp =
        closest_point(mesh, Eigen::Vector3d(x(i, 0), x(i, 1), x(i, 2)));
    h[cp.face] += 1.0;
  }
  return h / static_cast<double>(x.rows());
}

/// Jensen-Shannon divergence (natural log, range [0, ln 2]) between the
/// face histograms of two sample sets.
inline double js_face_histogram(const TriangleMeshData& mesh,
                                const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& y) {
  const Eigen::VectorXd p = face_histogram(mesh, x);
  const Eigen::VectorXd q = face_histogram(mesh, y);
  auto kl_to_mix = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a[i] <= 0.0) continue;
      s += a[i] * std::log(a[i] / (0.5 * (a[i] + b[i])));
    }
    return s;
  };
  return 0.5 * kl_to_mix(p, q) + 0.5 * kl_to_mix(q, p);
}

}  // namespace mandiff
