#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <vector>

#include <Eigen/Dense>

#include "hybridflow/flow.hpp"
#include "hybridflow/sparse_match.hpp"

namespace hf {

// Per-pixel boundary strength in [0,1].
struct EdgeCostMap {
  int width = 0;
  int height = 0;
  std::vector<float> cost;

  float at(int x, int y) const { return cost[static_cast<size_t>(y) * width + x]; }
};

struct InterpolationParams {
  int k_neighbors = 25;
  double epsilon = 0.01;   // floor of the per-step path cost
};

struct RefinementParams {
  int outer_iters = 5;     // warping fixed-point iterations
  int solver_iters = 30;   // SOR sweeps per outer iteration
  double alpha_s = 10.0;   // smoothness weight
  double gamma = 5.0;      // gradient-constancy weight
  double omega = 1.85;     // SOR relaxation
};

// Gaussian-smoothed color-gradient magnitude, normalized to [0,1] by its
// 99th percentile.
inline EdgeCostMap edge_cost(const Image& img) {
  const int w = img.width(), h = img.height();
  EdgeCostMap m;
  m.width = w;
  m.height = h;
  std::vector<float> raw(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        double gx = (img.at_mirror(x + 1, y, c) - img.at_mirror(x - 1, y, c)) * 0.5;
        double gy = (img.at_mirror(x, y + 1, c) - img.at_mirror(x, y - 1, c)) * 0.5;
        acc += gx * gx + gy * gy;
      }
      raw[static_cast<size_t>(y) * w + x] = static_cast<float>(std::sqrt(acc));
    }

  // Separable Gaussian, sigma = 1, radius 3.
  const int radius = 3;
  std::vector<float> kernel(2 * radius + 1);
  float ksum = 0.f;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5f * i * i);
    ksum += kernel[i + radius];
  }
  for (float& k : kernel) k /= ksum;
  std::vector<float> tmp(raw.size());
  auto mirror = [](int i, int n) { return Image::mirror_index(i, n); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.f;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * raw[static_cast<size_t>(y) * w + mirror(x + i, w)];
      tmp[static_cast<size_t>(y) * w + x] = acc;
    }
  m.cost.resize(raw.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.f;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp[static_cast<size_t>(mirror(y + i, h)) * w + x];
      m.cost[static_cast<size_t>(y) * w + x] = acc;
    }

  std::vector<float> sorted = m.cost;
  size_t q = static_cast<size_t>(0.99 * (sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + q, sorted.end());
  float p99 = sorted[q];
  if (p99 > 0.f)
    for (float& c : m.cost) c = std::min(c / p99, 1.f);
  return m;
}

inline SeedSet assemble_seeds(const std::vector<SeedSet>& per_region) {
  // Region sets arrive in cluster-index order; duplicates (either frame's
  // pixel) resolve to the smaller descriptor distance.
  std::map<std::pair<int, int>, size_t> by_p1, by_p2;
  SeedSet out;
  auto better = [&](const PixelMatch& m, size_t at) {
    return m.distance < out[at].distance;
  };
  for (const SeedSet& set : per_region)
    for (const PixelMatch& m : set) {
      std::pair<int, int> k1{static_cast<int>(m.x1), static_cast<int>(m.y1)};
      std::pair<int, int> k2{static_cast<int>(m.x2), static_cast<int>(m.y2)};
      auto it1 = by_p1.find(k1);
      auto it2 = by_p2.find(k2);
      if (it1 == by_p1.end() && it2 == by_p2.end()) {
        by_p1[k1] = out.size();
        by_p2[k2] = out.size();
        out.push_back(m);
      } else if (it1 != by_p1.end() && it2 == by_p2.end()) {
        if (better(m, it1->second)) out[it1->second] = m;  // keeps p1 slot
      } else if (it1 == by_p1.end() && it2 != by_p2.end()) {
        if (better(m, it2->second)) out[it2->second] = m;
      } else if (it1->second == it2->second) {
        if (better(m, it1->second)) out[it1->second] = m;
      }
      // Conflicting double-collision (different slots): drop the newcomer.
    }
  return out;
}

namespace detail {

struct GeodesicLabels {
  std::vector<int> label;       // nearest seed per pixel
  std::vector<double> dist;     // geodesic distance to that seed
};

inline GeodesicLabels geodesic_voronoi(const SeedSet& seeds, const EdgeCostMap& cost,
                                       double epsilon) {
  const int w = cost.width, h = cost.height;
  GeodesicLabels g;
  g.label.assign(static_cast<size_t>(w) * h, -1);
  g.dist.assign(static_cast<size_t>(w) * h, std::numeric_limits<double>::max());
  using Item = std::pair<double, int>;  // (dist, pixel index)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (size_t s = 0; s < seeds.size(); ++s) {
    int x = std::clamp(static_cast<int>(std::lround(seeds[s].x1)), 0, w - 1);
    int y = std::clamp(static_cast<int>(std::lround(seeds[s].y1)), 0, h - 1);
    size_t i = static_cast<size_t>(y) * w + x;
    if (0.0 < g.dist[i]) {
      g.dist[i] = 0.0;
      g.label[i] = static_cast<int>(s);
      pq.push({0.0, static_cast<int>(i)});
    }
  }
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  while (!pq.empty()) {
    auto [d, ii] = pq.top();
    pq.pop();
    size_t i = static_cast<size_t>(ii);
    if (d > g.dist[i]) continue;
    int x = ii % w, y = ii / w;
    for (int k = 0; k < 4; ++k) {
      int nx = x + dx[k], ny = y + dy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      size_t ni = static_cast<size_t>(ny) * w + nx;
      double step = epsilon + 0.5 * (cost.at(x, y) + cost.at(nx, ny));
      if (d + step < g.dist[ni]) {
        g.dist[ni] = d + step;
        g.label[ni] = g.label[i];
        pq.push({g.dist[ni], static_cast<int>(ni)});
      }
    }
  }
  return g;
}

// Inter-seed distances approximated across geodesic Voronoi boundaries, then
// K-nearest seeds per seed by Dijkstra on that seed graph.
inline std::vector<std::vector<std::pair<int, double>>> seed_knn(
    const SeedSet& seeds, const GeodesicLabels& g, const EdgeCostMap& cost,
    double epsilon, int k) {
  const int w = cost.width, h = cost.height;
  std::map<std::pair<int, int>, double> arc;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t i = static_cast<size_t>(y) * w + x;
      for (auto [nx, ny] : {std::pair{x + 1, y}, std::pair{x, y + 1}}) {
        if (nx >= w || ny >= h) continue;
        size_t ni = static_cast<size_t>(ny) * w + nx;
        int a = g.label[i], b = g.label[ni];
        if (a == b || a < 0 || b < 0) continue;
        double step = epsilon + 0.5 * (cost.at(x, y) + cost.at(nx, ny));
        double d = g.dist[i] + step + g.dist[ni];
        auto key = std::minmax(a, b);
        auto [it, inserted] = arc.try_emplace({key.first, key.second}, d);
        if (!inserted) it->second = std::min(it->second, d);
      }
    }
  std::vector<std::vector<std::pair<int, double>>> adj(seeds.size());
  for (const auto& [key, d] : arc) {
    adj[key.first].push_back({key.second, d});
    adj[key.second].push_back({key.first, d});
  }

  std::vector<std::vector<std::pair<int, double>>> knn(seeds.size());
  std::vector<double> dist(seeds.size());
  for (size_t s = 0; s < seeds.size(); ++s) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::max());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[s] = 0.0;
    pq.push({0.0, static_cast<int>(s)});
    while (!pq.empty() && static_cast<int>(knn[s].size()) < k) {
      auto [d, t] = pq.top();
      pq.pop();
      if (d > dist[t]) continue;
      knn[s].push_back({t, d});
      for (auto [nb, ad] : adj[t])
        if (d + ad < dist[nb]) {
          dist[nb] = d + ad;
          pq.push({d + ad, nb});
        }
    }
  }
  return knn;
}

}  // namespace detail

// Edge-aware sparse-to-dense interpolation: per pixel, a locally-weighted
// affine fit over the K geodesically nearest seeds.
inline FlowField interpolate(const SeedSet& seeds, const EdgeCostMap& cost,
                             const InterpolationParams& params = {}) {
  if (seeds.empty()) throw ContractError("interpolate: no seeds");
  const int w = cost.width, h = cost.height;
  FlowField flow(w, h);

  auto g = detail::geodesic_voronoi(seeds, cost, params.epsilon);

  if (seeds.size() < 3) {
    // Nearest-seed constant fill.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const PixelMatch& s = seeds[g.label[flow.idx(x, y)]];
        flow.u[flow.idx(x, y)] = s.du();
        flow.v[flow.idx(x, y)] = s.dv();
      }
    return flow;
  }

  auto knn = detail::seed_knn(seeds, g, cost, params.epsilon, params.k_neighbors);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t i = flow.idx(x, y);
      const auto& neigh = knn[g.label[i]];
      double kth = 0.0;
      for (const auto& [s, d] : neigh) kth = std::max(kth, g.dist[i] + d);
      double sigma = std::max(kth / 3.0, params.epsilon);

      Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
      Eigen::Vector3d atu = Eigen::Vector3d::Zero(), atv = Eigen::Vector3d::Zero();
      double wsum = 0.0, umean = 0.0, vmean = 0.0;
      for (const auto& [si, sd] : neigh) {
        const PixelMatch& s = seeds[si];
        double d = g.dist[i] + sd;
        double wt = std::exp(-d / sigma);
        Eigen::Vector3d p(s.x1, s.y1, 1.0);
        ata += wt * p * p.transpose();
        atu += wt * s.du() * p;
        atv += wt * s.dv() * p;
        wsum += wt;
        umean += wt * s.du();
        vmean += wt * s.dv();
      }
      Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
      lu.setThreshold(1e-8);
      if (lu.rank() == 3) {
        Eigen::Vector3d cu = lu.solve(atu), cv = lu.solve(atv);
        Eigen::Vector3d p(x, y, 1.0);
        flow.u[i] = static_cast<float>(cu.dot(p));
        flow.v[i] = static_cast<float>(cv.dot(p));
      } else {
        flow.u[i] = static_cast<float>(umean / wsum);  // weighted mean fallback
        flow.v[i] = static_cast<float>(vmean / wsum);
      }
    }
  return flow;
}

namespace detail {

struct WarpSample {
  double value = 0.0;
  double gx = 0.0;
  double gy = 0.0;
  bool in_bounds = false;
};

inline double bilinear(const std::vector<double>& img, int w, int h, double x,
                       double y) {
  int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  double fx = x - x0, fy = y - y0;
  auto px = [&](int xx, int yy) {
    xx = std::clamp(xx, 0, w - 1);
    yy = std::clamp(yy, 0, h - 1);
    return img[static_cast<size_t>(yy) * w + xx];
  };
  return (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x0 + 1, y0) +
         (1 - fx) * fy * px(x0, y0 + 1) + fx * fy * px(x0 + 1, y0 + 1);
}

struct RefineBuffers {
  int w = 0, h = 0;
  std::vector<double> i1, i1x, i1y;      // frame 1 and gradients
  std::vector<double> i2, i2x, i2y;      // frame 2 and gradients
};

inline std::vector<double> to_gray(const Image& img) {
  std::vector<double> g(static_cast<size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      g[static_cast<size_t>(y) * img.width() + x] = img.gray(x, y);
  return g;
}

inline std::vector<double> gradient_x(const std::vector<double>& img, int w, int h) {
  std::vector<double> g(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
      g[static_cast<size_t>(y) * w + x] =
          (img[static_cast<size_t>(y) * w + xp] - img[static_cast<size_t>(y) * w + xm]) /
          (xp - xm);
    }
  return g;
}

inline std::vector<double> gradient_y(const std::vector<double>& img, int w, int h) {
  std::vector<double> g(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
      g[static_cast<size_t>(y) * w + x] =
          (img[static_cast<size_t>(yp) * w + x] - img[static_cast<size_t>(ym) * w + x]) /
          (yp - ym);
    }
  return g;
}

constexpr double kCharbEps2 = 1e-6;

inline double charbonnier(double s2) { return std::sqrt(s2 + kCharbEps2); }
inline double charbonnier_deriv(double s2) { return 0.5 / std::sqrt(s2 + kCharbEps2); }

}  // namespace detail

// Energy of the refinement objective; exposed so tests can audit monotonicity.
inline double refinement_energy(const FlowField& flow, const Image& img1,
                                const Image& img2, const RefinementParams& params) {
  const int w = flow.width, h = flow.height;
  auto i1 = detail::to_gray(img1);
  auto i2 = detail::to_gray(img2);
  auto i1x = detail::gradient_x(i1, w, h), i1y = detail::gradient_y(i1, w, h);
  auto i2x = detail::gradient_x(i2, w, h), i2y = detail::gradient_y(i2, w, h);
  double e = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t i = flow.idx(x, y);
      double wx = x + flow.u[i], wy = y + flow.v[i];
      if (wx >= 0 && wy >= 0 && wx <= w - 1 && wy <= h - 1) {
        double dz = detail::bilinear(i2, w, h, wx, wy) - i1[i];
        double dgx = detail::bilinear(i2x, w, h, wx, wy) - i1x[i];
        double dgy = detail::bilinear(i2y, w, h, wx, wy) - i1y[i];
        e += detail::charbonnier(dz * dz) +
             params.gamma * detail::charbonnier(dgx * dgx + dgy * dgy);
      }
      double ux = x + 1 < w ? flow.u[flow.idx(x + 1, y)] - flow.u[i] : 0.0;
      double uy = y + 1 < h ? flow.u[flow.idx(x, y + 1)] - flow.u[i] : 0.0;
      double vx = x + 1 < w ? flow.v[flow.idx(x + 1, y)] - flow.v[i] : 0.0;
      double vy = y + 1 < h ? flow.v[flow.idx(x, y + 1)] - flow.v[i] : 0.0;
      e += params.alpha_s * detail::charbonnier(ux * ux + uy * uy + vx * vx + vy * vy);
    }
  return e;
}

// Single full-scale variational refinement: warping fixed point around a
// linearized brightness + gradient-constancy data term with robust
// penalties, solved by SOR with red-black ordering.
inline FlowField refine(const FlowField& init, const Image& img1, const Image& img2,
                        const RefinementParams& params = {}) {
  const int w = init.width, h = init.height;
  for (size_t i = 0; i < init.size(); ++i)
    if (!std::isfinite(init.u[i]) || !std::isfinite(init.v[i]))
      throw ContractError("refine: non-finite input flow");

  auto i1 = detail::to_gray(img1);
  auto i2 = detail::to_gray(img2);
  auto i1x = detail::gradient_x(i1, w, h), i1y = detail::gradient_y(i1, w, h);
  auto i2x = detail::gradient_x(i2, w, h), i2y = detail::gradient_y(i2, w, h);
  auto i2xx = detail::gradient_x(i2x, w, h);
  auto i2xy = detail::gradient_y(i2x, w, h);
  auto i2yy = detail::gradient_y(i2y, w, h);

  std::vector<double> u(init.u.begin(), init.u.end());
  std::vector<double> v(init.v.begin(), init.v.end());
  std::vector<double> du(u.size()), dv(u.size());
  const size_t n = u.size();
  auto idx = [w](int x, int y) { return static_cast<size_t>(y) * w + x; };

  for (int outer = 0; outer < params.outer_iters; ++outer) {
    // Warp frame 2 and its derivatives.
    std::vector<double> iz(n), ix(n), iy(n), ixz(n), iyz(n), ixx(n), ixy(n), iyy(n);
    std::vector<char> in_bounds(n, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        size_t i = idx(x, y);
        double wx = x + u[i], wy = y + v[i];
        if (wx < 0 || wy < 0 || wx > w - 1 || wy > h - 1) continue;
        in_bounds[i] = 1;
        iz[i] = detail::bilinear(i2, w, h, wx, wy) - i1[i];
        ix[i] = detail::bilinear(i2x, w, h, wx, wy);
        iy[i] = detail::bilinear(i2y, w, h, wx, wy);
        ixz[i] = ix[i] - i1x[i];
        iyz[i] = iy[i] - i1y[i];
        ixx[i] = detail::bilinear(i2xx, w, h, wx, wy);
        ixy[i] = detail::bilinear(i2xy, w, h, wx, wy);
        iyy[i] = detail::bilinear(i2yy, w, h, wx, wy);
      }

    // Lagged robustness weights at dw = 0.
    std::vector<double> wd(n, 0.0), wg(n, 0.0), ws(n);
    for (size_t i = 0; i < n; ++i) {
      if (in_bounds[i]) {
        wd[i] = detail::charbonnier_deriv(iz[i] * iz[i]);
        wg[i] = params.gamma *
                detail::charbonnier_deriv(ixz[i] * ixz[i] + iyz[i] * iyz[i]);
      }
    }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        size_t i = idx(x, y);
        double ux = x + 1 < w ? u[idx(x + 1, y)] - u[i] : 0.0;
        double uy = y + 1 < h ? u[idx(x, y + 1)] - u[i] : 0.0;
        double vx = x + 1 < w ? v[idx(x + 1, y)] - v[i] : 0.0;
        double vy = y + 1 < h ? v[idx(x, y + 1)] - v[i] : 0.0;
        ws[i] = detail::charbonnier_deriv(ux * ux + uy * uy + vx * vx + vy * vy);
      }

    std::fill(du.begin(), du.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);

    // Red-black SOR on the coupled (du, dv) system.
    for (int sweep = 0; sweep < params.solver_iters; ++sweep) {
      for (int parity = 0; parity < 2; ++parity) {
        for (int y = 0; y < h; ++y)
          for (int x = (y + parity) % 2; x < w; x += 2) {
            size_t i = idx(x, y);
            double a11 = wd[i] * ix[i] * ix[i] +
                         wg[i] * (ixx[i] * ixx[i] + ixy[i] * ixy[i]);
            double a12 = wd[i] * ix[i] * iy[i] +
                         wg[i] * (ixx[i] * ixy[i] + ixy[i] * iyy[i]);
            double a22 = wd[i] * iy[i] * iy[i] +
                         wg[i] * (ixy[i] * ixy[i] + iyy[i] * iyy[i]);
            double b1 = -(wd[i] * ix[i] * iz[i] +
                          wg[i] * (ixx[i] * ixz[i] + ixy[i] * iyz[i]));
            double b2 = -(wd[i] * iy[i] * iz[i] +
                          wg[i] * (ixy[i] * ixz[i] + iyy[i] * iyz[i]));
            double wsumc = 0.0, su = 0.0, sv = 0.0;
            auto add_neighbor = [&](int nx, int ny, double edge_w) {
              size_t j = idx(nx, ny);
              wsumc += edge_w;
              su += edge_w * (u[j] + du[j] - u[i]);
              sv += edge_w * (v[j] + dv[j] - v[i]);
            };
            if (x + 1 < w) add_neighbor(x + 1, y, 0.5 * (ws[i] + ws[idx(x + 1, y)]));
            if (x > 0) add_neighbor(x - 1, y, 0.5 * (ws[i] + ws[idx(x - 1, y)]));
            if (y + 1 < h) add_neighbor(x, y + 1, 0.5 * (ws[i] + ws[idx(x, y + 1)]));
            if (y > 0) add_neighbor(x, y - 1, 0.5 * (ws[i] + ws[idx(x, y - 1)]));

            double s = params.alpha_s;
            double m11 = a11 + s * wsumc;
            double m22 = a22 + s * wsumc;
            double r1 = b1 + s * su;
            double r2 = b2 + s * sv;
            double det = m11 * m22 - a12 * a12;
            if (std::abs(det) < 1e-12) continue;
            double ndu = (m22 * r1 - a12 * r2) / det;
            double ndv = (m11 * r2 - a12 * r1) / det;
            du[i] += params.omega * (ndu - du[i]);
            dv[i] += params.omega * (ndv - dv[i]);
          }
      }
    }
    for (size_t i = 0; i < n; ++i) {
      u[i] += du[i];
      v[i] += dv[i];
    }
  }

  FlowField out(w, h);
  for (size_t i = 0; i < n; ++i) {
    out.u[i] = static_cast<float>(u[i]);
    out.v[i] = static_cast<float>(v[i]);
  }
  return out;
}

}  // namespace hf
