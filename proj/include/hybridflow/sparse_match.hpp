#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hybridflow/delaunay.hpp"
#include "hybridflow/descriptors.hpp"

namespace hf {

enum class SeedOrigin { Graph, SmallCluster };

struct PixelMatch {
  float x1 = 0, y1 = 0;
  float x2 = 0, y2 = 0;
  double distance = 0.0;  // descriptor distance of the match
  int region_id = 0;
  SeedOrigin origin = SeedOrigin::Graph;

  float du() const { return x2 - x1; }
  float dv() const { return y2 - y1; }
};

using SeedSet = std::vector<PixelMatch>;

struct SparseMatchParams {
  int stride = 2;
  double ratio = 0.9;           // Lowe ratio, frame-1 side
  int ransac_iters = 2000;
  double ransac_thresh_px = 1.0;  // Sampson distance
  uint64_t seed = 0;
};

// Mutual nearest neighbors under L2 descriptor distance on a stride grid,
// with the ratio test applied on the frame-1 side.
inline std::vector<PixelMatch> match_pixels(const std::vector<PixelCoord>& region_a,
                                            const std::vector<PixelCoord>& region_b,
                                            const DescriptorField& field1,
                                            const DescriptorField& field2,
                                            int stride = 2, double ratio = 0.9) {
  std::vector<PixelCoord> sa, sb;
  for (const auto& p : region_a)
    if (p.x % stride == 0 && p.y % stride == 0) sa.push_back(p);
  for (const auto& p : region_b)
    if (p.x % stride == 0 && p.y % stride == 0) sb.push_back(p);
  if (sa.empty() || sb.empty()) return {};

  const int dims = field1.dims();
  Eigen::MatrixXf da(sa.size(), dims), db(sb.size(), dims);
  for (size_t i = 0; i < sa.size(); ++i)
    da.row(i) = Eigen::Map<const Eigen::VectorXf>(field1.at(sa[i].x, sa[i].y), dims);
  for (size_t i = 0; i < sb.size(); ++i)
    db.row(i) = Eigen::Map<const Eigen::VectorXf>(field2.at(sb[i].x, sb[i].y), dims);

  Eigen::VectorXf na = da.rowwise().squaredNorm();
  Eigen::VectorXf nb = db.rowwise().squaredNorm();
  Eigen::MatrixXf gram = da * db.transpose();

  std::vector<int> best_b(sa.size(), -1);
  std::vector<int> best_a(sb.size(), -1);
  std::vector<float> best_a_d2(sb.size(), std::numeric_limits<float>::max());
  std::vector<float> best_d2(sa.size()), second_d2(sa.size());
  for (size_t i = 0; i < sa.size(); ++i) {
    float b1 = std::numeric_limits<float>::max(), b2 = b1;
    int arg = -1;
    for (size_t j = 0; j < sb.size(); ++j) {
      float d2 = std::max(0.f, na(i) + nb(j) - 2.f * gram(i, j));
      if (d2 < b1) {
        b2 = b1;
        b1 = d2;
        arg = static_cast<int>(j);
      } else if (d2 < b2) {
        b2 = d2;
      }
      if (d2 < best_a_d2[j]) {
        best_a_d2[j] = d2;
        best_a[j] = static_cast<int>(i);
      }
    }
    best_b[i] = arg;
    best_d2[i] = b1;
    second_d2[i] = b2;
  }

  std::vector<PixelMatch> out;
  for (size_t i = 0; i < sa.size(); ++i) {
    int j = best_b[i];
    if (j < 0 || best_a[j] != static_cast<int>(i)) continue;  // not mutual
    if (sb.size() > 1) {
      double r = std::sqrt(best_d2[i]) / std::max(1e-12, std::sqrt(double(second_d2[i])));
      if (r >= ratio) continue;
    }
    PixelMatch m;
    m.x1 = static_cast<float>(sa[i].x);
    m.y1 = static_cast<float>(sa[i].y);
    m.x2 = static_cast<float>(sb[j].x);
    m.y2 = static_cast<float>(sb[j].y);
    m.distance = std::sqrt(std::max(0.f, best_d2[i]));
    out.push_back(m);
  }
  return out;
}

struct RansacResult {
  std::vector<PixelMatch> inliers;
  Eigen::Matrix3d fundamental = Eigen::Matrix3d::Zero();
  bool pass_through = false;  // fewer than 8 matches, filtering skipped
};

namespace detail {

struct NormalizeTransform {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
};

inline NormalizeTransform normalize_points(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double scale = 0.0;
  for (const auto& p : pts) scale += (p - mean).norm();
  scale /= static_cast<double>(pts.size());
  double s = scale > 1e-12 ? std::sqrt(2.0) / scale : 1.0;
  NormalizeTransform n;
  n.t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return n;
}

// Normalized 8-point estimate; returns false on rank deficiency.
inline bool eight_point(const std::vector<PixelMatch>& ms,
                        const std::vector<int>& idx, Eigen::Matrix3d& f_out) {
  std::vector<Eigen::Vector2d> p1, p2;
  for (int i : idx) {
    p1.emplace_back(ms[i].x1, ms[i].y1);
    p2.emplace_back(ms[i].x2, ms[i].y2);
  }
  auto n1 = normalize_points(p1), n2 = normalize_points(p2);
  Eigen::MatrixXd a(idx.size(), 9);
  for (size_t r = 0; r < idx.size(); ++r) {
    Eigen::Vector3d q1 = n1.t * p1[r].homogeneous();
    Eigen::Vector3d q2 = n2.t * p2[r].homogeneous();
    a.row(r) << q2.x() * q1.x(), q2.x() * q1.y(), q2.x(),
                q2.y() * q1.x(), q2.y() * q1.y(), q2.y(),
                q1.x(), q1.y(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  if (svd.rank() < 8) return false;
  Eigen::VectorXd fv = svd.matrixV().col(8);
  Eigen::Matrix3d f;
  f << fv(0), fv(1), fv(2), fv(3), fv(4), fv(5), fv(6), fv(7), fv(8);
  // Enforce rank 2.
  Eigen::JacobiSVD<Eigen::Matrix3d> fsvd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sv = fsvd.singularValues();
  sv(2) = 0.0;
  f = fsvd.matrixU() * sv.asDiagonal() * fsvd.matrixV().transpose();
  f_out = n2.t.transpose() * f * n1.t;
  return true;
}

inline double sampson_distance(const Eigen::Matrix3d& f, const PixelMatch& m) {
  Eigen::Vector3d x1(m.x1, m.y1, 1.0), x2(m.x2, m.y2, 1.0);
  Eigen::Vector3d fx1 = f * x1;
  Eigen::Vector3d ftx2 = f.transpose() * x2;
  double num = x2.dot(fx1);
  double den = fx1.head<2>().squaredNorm() + ftx2.head<2>().squaredNorm();
  return den > 1e-18 ? std::sqrt(num * num / den) : std::numeric_limits<double>::max();
}

}  // namespace detail

// Seeded RANSAC over the normalized 8-point algorithm with Sampson residuals.
// Adaptive early exit once the consensus makes more iterations pointless.
inline RansacResult ransac_fundamental(const std::vector<PixelMatch>& matches,
                                       double thresh_px = 1.0, int iters = 2000,
                                       uint64_t seed = 0) {
  RansacResult res;
  if (matches.size() < 8) {
    res.inliers = matches;
    res.pass_through = true;
    return res;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, matches.size() - 1);
  std::vector<char> best_mask;
  size_t best_count = 0;
  int needed = iters;
  for (int it = 0; it < std::min(iters, needed); ++it) {
    std::vector<int> idx;
    while (idx.size() < 8) {
      int c = static_cast<int>(pick(rng));
      if (std::find(idx.begin(), idx.end(), c) == idx.end()) idx.push_back(c);
    }
    Eigen::Matrix3d f;
    if (!detail::eight_point(matches, idx, f)) continue;  // degenerate sample
    std::vector<char> mask(matches.size(), 0);
    size_t count = 0;
    for (size_t i = 0; i < matches.size(); ++i)
      if (detail::sampson_distance(f, matches[i]) < thresh_px) {
        mask[i] = 1;
        ++count;
      }
    if (count > best_count) {
      best_count = count;
      best_mask = mask;
      res.fundamental = f;
      double w = static_cast<double>(count) / matches.size();
      double p_all = std::pow(w, 8);
      if (p_all > 1e-12)
        needed = static_cast<int>(
            std::min<double>(iters, std::log(1e-4) / std::log(1.0 - p_all) + 1.0));
    }
  }
  if (best_count == 0) {
    res.pass_through = true;
    res.inliers = matches;
    return res;
  }
  for (size_t i = 0; i < matches.size(); ++i)
    if (best_mask[i]) res.inliers.push_back(matches[i]);
  return res;
}

struct CentroidMatch {
  Point2 p1;  // frame 1 centroid
  Point2 p2;  // matched frame 2 centroid
};

// Affine outlier test against the superpixel's matched Delaunay neighbors.
// Fewer than three matched neighbors, or a rank-deficient fit, means keep.
inline bool affine_consistency(const CentroidMatch& self,
                               const std::vector<CentroidMatch>& neighbors,
                               double tol = -1.0) {
  if (neighbors.size() < 3) return true;
  Eigen::MatrixXd a(2 * neighbors.size(), 6);
  Eigen::VectorXd b(2 * neighbors.size());
  for (size_t i = 0; i < neighbors.size(); ++i) {
    const auto& m = neighbors[i];
    a.row(2 * i) << m.p1.x, m.p1.y, 1, 0, 0, 0;
    a.row(2 * i + 1) << 0, 0, 0, m.p1.x, m.p1.y, 1;
    b(2 * i) = m.p2.x;
    b(2 * i + 1) = m.p2.y;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.rank() < 6) return true;  // collinear neighbors: cannot test
  Eigen::VectorXd t = svd.solve(b);
  auto residual = [&](const CentroidMatch& m) {
    double px = t(0) * m.p1.x + t(1) * m.p1.y + t(2);
    double py = t(3) * m.p1.x + t(4) * m.p1.y + t(5);
    return std::hypot(px - m.p2.x, py - m.p2.y);
  };
  if (tol < 0) {
    std::vector<double> r;
    for (const auto& m : neighbors) r.push_back(residual(m));
    std::nth_element(r.begin(), r.begin() + r.size() / 2, r.end());
    tol = 2.0 * r[r.size() / 2] + 3.0;
  }
  return residual(self) <= tol;
}

}  // namespace hf
