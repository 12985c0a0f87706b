#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "hybridflow/descriptors.hpp"

namespace hf {

struct SlicParams {
  int superpixel_size = 2223;  // |s|, pixels
  double compactness = 10.0;
  int iterations = 10;
};

struct Superpixel {
  int id = 0;
  std::vector<PixelCoord> pixels;  // 4-connected
  double cx = 0.0, cy = 0.0;       // centroid, subpixel
};

// Partition of one cluster's mask into superpixels. ids index into
// `superpixels`; the raster holds -1 outside the mask.
struct SuperpixelMap {
  int cluster_index = 0;
  int width = 0;
  int height = 0;
  std::vector<Superpixel> superpixels;
  std::vector<int> id_raster;

  int id_at(int x, int y) const { return id_raster[static_cast<size_t>(y) * width + x]; }
};

inline int target_count(size_t cluster_area, int s_size) {
  if (s_size < 16) throw ContractError("target_count: superpixel size too small");
  long k = std::lround(static_cast<double>(cluster_area) / s_size);
  return static_cast<int>(std::max(1L, k));
}

inline std::array<double, 3> rgb_to_lab(float r, float g, float b) {
  auto inv_gamma = [](double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  double R = inv_gamma(r), G = inv_gamma(g), B = inv_gamma(b);
  double X = 0.4124564 * R + 0.3575761 * G + 0.1804375 * B;
  double Y = 0.2126729 * R + 0.7151522 * G + 0.0721750 * B;
  double Z = 0.0193339 * R + 0.1191920 * G + 0.9503041 * B;
  // D65 white
  X /= 0.95047;
  Z /= 1.08883;
  auto f = [](double t) {
    return t > 0.008856 ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0;
  };
  double fx = f(X), fy = f(Y), fz = f(Z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

namespace detail {

struct SlicCenter {
  double l = 0, a = 0, b = 0, x = 0, y = 0;
};

// 4-connected components of an arbitrary pixel set.
inline std::vector<std::vector<PixelCoord>> connected_components(
    const std::vector<PixelCoord>& pixels, int width, int height) {
  std::vector<int8_t> in_mask(static_cast<size_t>(width) * height, 0);
  for (const auto& p : pixels) in_mask[static_cast<size_t>(p.y) * width + p.x] = 1;
  std::vector<int8_t> seen(in_mask.size(), 0);
  std::vector<std::vector<PixelCoord>> comps;
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  for (const auto& start : pixels) {
    size_t si = static_cast<size_t>(start.y) * width + start.x;
    if (seen[si]) continue;
    comps.emplace_back();
    std::queue<PixelCoord> q;
    q.push(start);
    seen[si] = 1;
    while (!q.empty()) {
      PixelCoord p = q.front();
      q.pop();
      comps.back().push_back(p);
      for (int k = 0; k < 4; ++k) {
        int nx = p.x + dx[k], ny = p.y + dy[k];
        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        size_t ni = static_cast<size_t>(ny) * width + nx;
        if (in_mask[ni] && !seen[ni]) {
          seen[ni] = 1;
          q.push({nx, ny});
        }
      }
    }
  }
  return comps;
}

// SLIC k-means over one connected component; writes superpixel ids >= id_base
// into id_raster and returns the number of superpixels created.
inline int slic_component(const Image& img, const std::vector<PixelCoord>& comp,
                          int kappa, const SlicParams& params, int id_base,
                          std::vector<int>& id_raster) {
  const int W = img.width(), H = img.height();
  auto ridx = [W](int x, int y) { return static_cast<size_t>(y) * W + x; };

  int min_x = comp[0].x, max_x = comp[0].x, min_y = comp[0].y, max_y = comp[0].y;
  for (const auto& p : comp) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const int bw = max_x - min_x + 1, bh = max_y - min_y + 1;

  std::vector<int8_t> in_mask(static_cast<size_t>(W) * H, 0);
  for (const auto& p : comp) in_mask[ridx(p.x, p.y)] = 1;

  // Precompute Lab for the component's bounding box.
  std::vector<std::array<double, 3>> lab(static_cast<size_t>(W) * H);
  for (const auto& p : comp)
    lab[ridx(p.x, p.y)] = rgb_to_lab(img.at(p.x, p.y, 0), img.at(p.x, p.y, 1),
                                     img.at(p.x, p.y, 2));

  const double S = std::sqrt(static_cast<double>(comp.size()) / kappa);

  // Square seed grid over the bounding box, kept when inside the mask,
  // perturbed to the lowest-gradient position in a 3x3 neighborhood.
  auto grad_mag = [&](int x, int y) {
    double gx = img.gray_mirror(x + 1, y) - img.gray_mirror(x - 1, y);
    double gy = img.gray_mirror(x, y + 1) - img.gray_mirror(x, y - 1);
    return gx * gx + gy * gy;
  };
  int nx = std::max(1, static_cast<int>(std::lround(bw / S)));
  int ny = std::max(1, static_cast<int>(std::lround(bh / S)));
  std::vector<SlicCenter> centers;
  for (int gy = 0; gy < ny; ++gy)
    for (int gx = 0; gx < nx; ++gx) {
      int sx = min_x + static_cast<int>((gx + 0.5) * bw / nx);
      int sy = min_y + static_cast<int>((gy + 0.5) * bh / ny);
      if (sx > max_x || sy > max_y || !in_mask[ridx(sx, sy)]) continue;
      int best_x = sx, best_y = sy;
      double best_g = grad_mag(sx, sy);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          int px = sx + dx, py = sy + dy;
          if (px < 0 || py < 0 || px >= W || py >= H || !in_mask[ridx(px, py)]) continue;
          double g = grad_mag(px, py);
          if (g < best_g) {
            best_g = g;
            best_x = px;
            best_y = py;
          }
        }
      const auto& c = lab[ridx(best_x, best_y)];
      centers.push_back({c[0], c[1], c[2], static_cast<double>(best_x),
                         static_cast<double>(best_y)});
    }
  if (centers.empty()) {
    const auto& p = comp[comp.size() / 2];
    const auto& c = lab[ridx(p.x, p.y)];
    centers.push_back({c[0], c[1], c[2], static_cast<double>(p.x),
                       static_cast<double>(p.y)});
  }

  const double m2_over_s2 = (params.compactness * params.compactness) / (S * S);
  std::vector<int> assign(static_cast<size_t>(W) * H, -1);
  std::vector<double> best_d(static_cast<size_t>(W) * H);

  for (int iter = 0; iter < params.iterations; ++iter) {
    for (const auto& p : comp) best_d[ridx(p.x, p.y)] = std::numeric_limits<double>::max();
    const int win = std::max(1, static_cast<int>(std::ceil(2.0 * S)));
    for (size_t ci = 0; ci < centers.size(); ++ci) {
      const SlicCenter& c = centers[ci];
      int x0 = std::max(0, static_cast<int>(c.x) - win);
      int x1 = std::min(W - 1, static_cast<int>(c.x) + win);
      int y0 = std::max(0, static_cast<int>(c.y) - win);
      int y1 = std::min(H - 1, static_cast<int>(c.y) + win);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          size_t i = ridx(x, y);
          if (!in_mask[i]) continue;
          const auto& px = lab[i];
          double dl = px[0] - c.l, da = px[1] - c.a, db = px[2] - c.b;
          double dx = x - c.x, dy = y - c.y;
          double d = dl * dl + da * da + db * db +
                     (dx * dx + dy * dy) * m2_over_s2;
          if (d < best_d[i]) {
            best_d[i] = d;
            assign[i] = static_cast<int>(ci);
          }
        }
    }
    // Mask pixels outside every search window: nearest center spatially.
    for (const auto& p : comp) {
      size_t i = ridx(p.x, p.y);
      if (assign[i] >= 0 && best_d[i] < std::numeric_limits<double>::max()) continue;
      double best = std::numeric_limits<double>::max();
      for (size_t ci = 0; ci < centers.size(); ++ci) {
        double dx = p.x - centers[ci].x, dy = p.y - centers[ci].y;
        double d = dx * dx + dy * dy;
        if (d < best) {
          best = d;
          assign[i] = static_cast<int>(ci);
        }
      }
    }
    // Center update.
    std::vector<SlicCenter> acc(centers.size());
    std::vector<size_t> cnt(centers.size(), 0);
    for (const auto& p : comp) {
      size_t i = ridx(p.x, p.y);
      int ci = assign[i];
      const auto& px = lab[i];
      acc[ci].l += px[0];
      acc[ci].a += px[1];
      acc[ci].b += px[2];
      acc[ci].x += p.x;
      acc[ci].y += p.y;
      ++cnt[ci];
    }
    for (size_t ci = 0; ci < centers.size(); ++ci) {
      if (cnt[ci] == 0) continue;  // empty center keeps its position
      double n = static_cast<double>(cnt[ci]);
      centers[ci] = {acc[ci].l / n, acc[ci].a / n, acc[ci].b / n,
                     acc[ci].x / n, acc[ci].y / n};
    }
  }

  // Connectivity: keep each label's largest fragment, absorb the rest into
  // the largest adjacent superpixel.
  std::vector<std::vector<PixelCoord>> by_label(centers.size());
  for (const auto& p : comp) by_label[assign[ridx(p.x, p.y)]].push_back(p);

  std::vector<std::vector<PixelCoord>> fragments;
  std::vector<int> frag_label;
  std::vector<size_t> main_frag_of_label(centers.size(),
                                         std::numeric_limits<size_t>::max());
  for (size_t li = 0; li < by_label.size(); ++li) {
    if (by_label[li].empty()) continue;
    auto comps = connected_components(by_label[li], W, H);
    size_t largest = 0;
    for (size_t k = 1; k < comps.size(); ++k)
      if (comps[k].size() > comps[largest].size()) largest = k;
    for (size_t k = 0; k < comps.size(); ++k) {
      if (k == largest) main_frag_of_label[li] = fragments.size();
      fragments.push_back(std::move(comps[k]));
      frag_label.push_back(static_cast<int>(li));
    }
  }

  std::vector<int> frag_of_pixel(static_cast<size_t>(W) * H, -1);
  for (size_t fi = 0; fi < fragments.size(); ++fi)
    for (const auto& p : fragments[fi]) frag_of_pixel[ridx(p.x, p.y)] = static_cast<int>(fi);

  // Final superpixels: one per surviving main fragment.
  std::vector<std::vector<PixelCoord>> final_px;
  std::vector<int> final_of_frag(fragments.size(), -1);
  for (size_t li = 0; li < by_label.size(); ++li)
    if (main_frag_of_label[li] != std::numeric_limits<size_t>::max()) {
      final_of_frag[main_frag_of_label[li]] = static_cast<int>(final_px.size());
      final_px.push_back(fragments[main_frag_of_label[li]]);
    }

  // Orphan fragments, largest first, merge into the biggest adjacent final
  // superpixel; repeat until all are placed (mask is connected, so this
  // terminates).
  std::vector<size_t> orphans;
  for (size_t fi = 0; fi < fragments.size(); ++fi)
    if (final_of_frag[fi] < 0) orphans.push_back(fi);
  std::sort(orphans.begin(), orphans.end(), [&](size_t a, size_t b) {
    return fragments[a].size() > fragments[b].size();
  });
  const int dx4[4] = {1, -1, 0, 0}, dy4[4] = {0, 0, 1, -1};
  bool progressed = true;
  while (!orphans.empty() && progressed) {
    progressed = false;
    std::vector<size_t> still;
    for (size_t fi : orphans) {
      std::vector<size_t> adj_area(final_px.size(), 0);
      for (const auto& p : fragments[fi])
        for (int k = 0; k < 4; ++k) {
          int nx = p.x + dx4[k], ny = p.y + dy4[k];
          if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
          int nf = frag_of_pixel[ridx(nx, ny)];
          if (nf < 0 || final_of_frag[nf] < 0) continue;
          adj_area[final_of_frag[nf]] = final_px[final_of_frag[nf]].size();
        }
      int best = -1;
      size_t best_area = 0;
      for (size_t si = 0; si < adj_area.size(); ++si)
        if (adj_area[si] > best_area) {
          best_area = adj_area[si];
          best = static_cast<int>(si);
        }
      if (best < 0) {
        still.push_back(fi);
        continue;
      }
      for (const auto& p : fragments[fi]) final_px[best].push_back(p);
      final_of_frag[fi] = best;
      progressed = true;
    }
    orphans = std::move(still);
  }
  // Unreachable orphans (disconnected input guarded upstream) become their own
  // superpixels rather than being dropped.
  for (size_t fi : orphans) {
    final_of_frag[fi] = static_cast<int>(final_px.size());
    final_px.push_back(fragments[fi]);
  }

  for (size_t si = 0; si < final_px.size(); ++si)
    for (const auto& p : final_px[si])
      id_raster[ridx(p.x, p.y)] = id_base + static_cast<int>(si);
  return static_cast<int>(final_px.size());
}

}  // namespace detail

inline SuperpixelMap slic(const Image& img, const std::vector<PixelCoord>& mask,
                          int kappa, const SlicParams& params = {}) {
  if (mask.size() < static_cast<size_t>(kappa))
    throw ContractError("slic: mask smaller than requested superpixel count");
  SuperpixelMap spm;
  spm.width = img.width();
  spm.height = img.height();
  spm.id_raster.assign(static_cast<size_t>(spm.width) * spm.height, -1);

  // Disconnected masks: SLIC per connected component, kappa apportioned by area.
  auto comps = detail::connected_components(mask, spm.width, spm.height);
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front().y != b.front().y ? a.front().y < b.front().y
                                      : a.front().x < b.front().x;
  });
  int id_base = 0;
  for (const auto& comp : comps) {
    int k = std::max(1, static_cast<int>(std::lround(
                            static_cast<double>(kappa) * comp.size() / mask.size())));
    k = std::min(k, static_cast<int>(comp.size()));
    id_base += detail::slic_component(img, comp, k, params, id_base, spm.id_raster);
  }

  spm.superpixels.resize(id_base);
  for (int i = 0; i < id_base; ++i) spm.superpixels[i].id = i;
  for (const auto& p : mask) {
    int id = spm.id_at(p.x, p.y);
    Superpixel& s = spm.superpixels[id];
    s.pixels.push_back(p);
    s.cx += p.x;
    s.cy += p.y;
  }
  for (Superpixel& s : spm.superpixels) {
    s.cx /= static_cast<double>(s.pixels.size());
    s.cy /= static_cast<double>(s.pixels.size());
  }
  return spm;
}

}  // namespace hf
