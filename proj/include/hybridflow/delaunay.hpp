#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "hybridflow/image.hpp"

namespace hf {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

namespace geom {

// Filtered orientation predicate: positive if a->b->c turns counterclockwise.
// The float filter uses Shewchuk's static error bound; borderline cases fall
// back to exact rational arithmetic.
inline int orient2d(const Point2& a, const Point2& b, const Point2& c) {
  const double detleft = (a.x - c.x) * (b.y - c.y);
  const double detright = (a.y - c.y) * (b.x - c.x);
  const double det = detleft - detright;
  double detsum;
  if (detleft > 0) {
    if (detright <= 0) return det > 0 ? 1 : (det < 0 ? -1 : 0);
    detsum = detleft + detright;
  } else if (detleft < 0) {
    if (detright >= 0) return det > 0 ? 1 : (det < 0 ? -1 : 0);
    detsum = -detleft - detright;
  } else {
    return det > 0 ? 1 : (det < 0 ? -1 : 0);
  }
  constexpr double kErrBound = 3.3306690738754716e-16;
  if (det >= kErrBound * detsum || -det >= kErrBound * detsum)
    return det > 0 ? 1 : -1;

  mpq_class ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
  mpq_class d = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
  return sgn(d);
}

// Positive if d lies strictly inside the circumcircle of ccw triangle (a,b,c).
inline int incircle(const Point2& a, const Point2& b, const Point2& c,
                    const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;

  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double alift = adx * adx + ady * ady;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double blift = bdx * bdx + bdy * bdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double clift = cdx * cdx + cdy * cdy;

  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) +
                     clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  constexpr double kErrBound = 1.1102230246251577e-15;
  if (det > kErrBound * permanent || -det > kErrBound * permanent)
    return det > 0 ? 1 : -1;

  mpq_class qadx(a.x), qady(a.y), qbdx(b.x), qbdy(b.y), qcdx(c.x), qcdy(c.y),
      qdx(d.x), qdy(d.y);
  qadx -= qdx; qady -= qdy;
  qbdx -= qdx; qbdy -= qdy;
  qcdx -= qdx; qcdy -= qdy;
  mpq_class qalift = qadx * qadx + qady * qady;
  mpq_class qblift = qbdx * qbdx + qbdy * qbdy;
  mpq_class qclift = qcdx * qcdx + qcdy * qcdy;
  mpq_class q = qalift * (qbdx * qcdy - qcdx * qbdy) +
                qblift * (qcdx * qady - qadx * qcdy) +
                qclift * (qadx * qbdy - qbdx * qady);
  return sgn(q);
}

}  // namespace geom

namespace detail {

// Incremental sweep triangulation. Points are inserted in lexicographic order
// (collinear leading run deferred until a non-collinear seed exists), so every
// inserted point lies strictly outside the current hull. New points are fanned
// onto the visible hull edges; Lawson flips restore the empty-circumcircle
// property after each insertion.
class SweepDelaunay {
 public:
  std::vector<std::array<int, 3>> triangulate(const std::vector<Point2>& pts,
                                              const std::vector<int>& order) {
    pts_ = &pts;
    const int n = static_cast<int>(order.size());
    hull_next_.assign(pts.size(), -1);
    hull_prev_.assign(pts.size(), -1);
    hull_tri_.assign(pts.size(), -1);

    int fn = -1;  // first point breaking the leading collinear run
    for (int k = 2; k < n; ++k)
      if (geom::orient2d(pts[order[0]], pts[order[1]], pts[order[k]]) != 0) {
        fn = k;
        break;
      }
    if (fn < 0) return {};  // fully collinear, caller handles

    int a = order[0], b = order[1], c = order[fn];
    if (geom::orient2d(pts[a], pts[b], pts[c]) < 0) std::swap(b, c);
    int t0 = add_triangle(a, b, c, -1, -1, -1);
    hull_next_[a] = b; hull_next_[b] = c; hull_next_[c] = a;
    hull_prev_[b] = a; hull_prev_[c] = b; hull_prev_[a] = c;
    hull_tri_[a] = hull_tri_[b] = hull_tri_[c] = t0;
    hull_node_ = a;

    for (int k = 2; k < n; ++k) {
      if (k == fn) continue;
      insert(order[k]);
      lawson_fixpoint();
    }
    return tri_v_;
  }

 private:
  const std::vector<Point2>* pts_ = nullptr;
  std::vector<std::array<int, 3>> tri_v_;  // ccw vertices
  std::vector<std::array<int, 3>> tri_n_;  // neighbor across edge (v[e], v[e+1])
  std::vector<int> hull_next_, hull_prev_, hull_tri_;
  int hull_node_ = -1;

  int add_triangle(int a, int b, int c, int nab, int nbc, int nca) {
    tri_v_.push_back({a, b, c});
    tri_n_.push_back({nab, nbc, nca});
    return static_cast<int>(tri_v_.size()) - 1;
  }

  int edge_index(int t, int a, int b) const {
    for (int e = 0; e < 3; ++e)
      if (tri_v_[t][e] == a && tri_v_[t][(e + 1) % 3] == b) return e;
    return -1;
  }

  // Mutually link triangle t's edge e with whatever triangle shares it.
  void link(int t, int e, int nt) {
    tri_n_[t][e] = nt;
    if (nt >= 0) {
      int ne = edge_index(nt, tri_v_[t][(e + 1) % 3], tri_v_[t][e]);
      tri_n_[nt][ne] = t;
    }
  }

  void insert(int p) {
    const auto& pts = *pts_;
    int start = -1;
    int cur = hull_node_;
    do {
      if (geom::orient2d(pts[cur], pts[hull_next_[cur]], pts[p]) < 0) {
        start = cur;
        break;
      }
      cur = hull_next_[cur];
    } while (cur != hull_node_);
    // A strictly visible edge must exist for a point outside the hull.
    if (start < 0) throw ContractError("delaunay: internal hull invariant");

    int lo = start;
    while (geom::orient2d(pts[hull_prev_[lo]], pts[lo], pts[p]) < 0)
      lo = hull_prev_[lo];
    int hi = hull_next_[start];
    while (geom::orient2d(pts[hi], pts[hull_next_[hi]], pts[p]) < 0)
      hi = hull_next_[hi];

    // Fan ccw triangles (v, p, next(v)) over the visible chain lo..hi.
    int prev_tri = -1;
    int first_tri = -1;
    for (int v = lo; v != hi; v = hull_next_[v]) {
      int w = hull_next_[v];
      int t = add_triangle(w, v, p, -1, -1, -1);
      link(t, 0, hull_tri_[v]);          // edge (w, v) faces the old hull triangle
      if (prev_tri >= 0) link(t, 1, prev_tri);  // edge (v, p) meets previous fan
      if (first_tri < 0) first_tri = t;
      prev_tri = t;
    }

    for (int v = hull_next_[lo]; v != hi;) {
      int nxt = hull_next_[v];
      hull_next_[v] = hull_prev_[v] = -1;
      hull_tri_[v] = -1;
      v = nxt;
    }
    hull_next_[lo] = p;
    hull_prev_[p] = lo;
    hull_next_[p] = hi;
    hull_prev_[hi] = p;
    hull_tri_[lo] = first_tri;   // hull edge (lo, p) in triangle (w, lo, p)
    hull_tri_[p] = prev_tri;     // hull edge (p, hi) in triangle (hi, v, p)
    hull_node_ = p;
  }

  // Flip every locally non-Delaunay interior edge until none remain. Lawson's
  // lemma guarantees termination and a correct result under the strict
  // incircle test, including cocircular configurations.
  void lawson_fixpoint() {
    bool flipped = true;
    while (flipped) {
      flipped = false;
      for (int t = 0; t < static_cast<int>(tri_v_.size()); ++t)
        for (int e = 0; e < 3; ++e)
          if (maybe_flip(t, e)) flipped = true;
    }
  }

  bool maybe_flip(int t, int e) {
    int nt = tri_n_[t][e];
    if (nt < 0) return false;
    const auto& pts = *pts_;
    int a = tri_v_[t][e];
    int b = tri_v_[t][(e + 1) % 3];
    int c = tri_v_[t][(e + 2) % 3];
    int ne = edge_index(nt, b, a);
    int d = tri_v_[nt][(ne + 2) % 3];
    if (geom::incircle(pts[a], pts[b], pts[c], pts[d]) <= 0) return false;

    int n_ad = tri_n_[nt][(ne + 1) % 3];
    int n_db = tri_n_[nt][(ne + 2) % 3];
    int n_bc = tri_n_[t][(e + 1) % 3];
    int n_ca = tri_n_[t][(e + 2) % 3];

    tri_v_[t] = {a, d, c};
    tri_v_[nt] = {d, b, c};
    tri_n_[t] = {-1, -1, -1};
    tri_n_[nt] = {-1, -1, -1};
    link(t, 0, n_ad);
    link(t, 2, n_ca);
    link(nt, 0, n_db);
    link(nt, 1, n_bc);
    tri_n_[t][1] = nt;
    tri_n_[nt][2] = t;
    fix_hull_after_flip(t);
    fix_hull_after_flip(nt);
    return true;
  }

  void fix_hull_after_flip(int t) {
    for (int e = 0; e < 3; ++e)
      if (tri_n_[t][e] < 0) {
        int a = tri_v_[t][e];
        if (hull_next_[a] == tri_v_[t][(e + 1) % 3]) hull_tri_[a] = t;
      }
  }
};

}  // namespace detail

// Delaunay edge set over the points, as index pairs (i < j). Degenerate cases:
// two points give one edge, collinear points give the path along the line.
inline std::vector<std::pair<int, int>> delaunay(const std::vector<Point2>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 2) throw ContractError("delaunay: need at least 2 points");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (points[a].x != points[b].x) return points[a].x < points[b].x;
    return points[a].y < points[b].y;
  });
  for (int k = 1; k < n; ++k)
    if (points[order[k]].x == points[order[k - 1]].x &&
        points[order[k]].y == points[order[k - 1]].y)
      throw ContractError("delaunay: duplicate points");

  if (n == 2) return {{std::min(order[0], order[1]), std::max(order[0], order[1])}};

  bool all_collinear = true;
  for (int k = 2; k < n; ++k)
    if (geom::orient2d(points[order[0]], points[order[1]], points[order[k]]) != 0) {
      all_collinear = false;
      break;
    }
  std::vector<std::pair<int, int>> edges;
  if (all_collinear) {
    for (int k = 1; k < n; ++k)
      edges.emplace_back(std::min(order[k - 1], order[k]),
                         std::max(order[k - 1], order[k]));
    return edges;
  }

  detail::SweepDelaunay dt;
  auto tris = dt.triangulate(points, order);
  for (const auto& t : tris)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace hf
