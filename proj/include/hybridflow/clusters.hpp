#pragma once

#include <map>
#include <vector>

#include "hybridflow/descriptors.hpp"

namespace hf {

// Index-level pixel set (possibly spatially disconnected).
struct Cluster {
  int index = 0;
  std::vector<PixelCoord> pixels;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;

  size_t area() const { return pixels.size(); }
};

enum class Route { Large, Small, Skipped };

struct ClusterPair {
  int index = 0;
  const Cluster* a = nullptr;
  const Cluster* b = nullptr;
  Route route = Route::Skipped;
};

struct ClusterPairing {
  std::vector<ClusterPair> pairs;  // ascending index order
};

constexpr size_t kLargeClusterArea = 10000;  // strict: both sides must exceed
constexpr size_t kMinSmallClusterPixels = 16;

inline std::vector<Cluster> build_clusters(const LabelMap& labels) {
  std::map<int, Cluster> by_index;
  for (int y = 0; y < labels.height; ++y)
    for (int x = 0; x < labels.width; ++x) {
      int idx = labels.at(x, y);
      auto [it, inserted] = by_index.try_emplace(idx);
      Cluster& c = it->second;
      if (inserted) {
        c.index = idx;
        c.min_x = c.max_x = x;
        c.min_y = c.max_y = y;
      } else {
        c.min_x = std::min(c.min_x, x);
        c.max_x = std::max(c.max_x, x);
        c.min_y = std::min(c.min_y, y);
        c.max_y = std::max(c.max_y, y);
      }
      c.pixels.push_back({x, y});
    }
  std::vector<Cluster> out;
  out.reserve(by_index.size());
  for (auto& [idx, c] : by_index) out.push_back(std::move(c));
  return out;
}

// Match by shared class index; Large only when both areas exceed the threshold.
inline ClusterPairing pair_clusters(const std::vector<Cluster>& a,
                                    const std::vector<Cluster>& b,
                                    size_t large_threshold = kLargeClusterArea) {
  std::map<int, const Cluster*> b_by_index;
  for (const Cluster& c : b) b_by_index[c.index] = &c;

  ClusterPairing pairing;
  for (const Cluster& ca : a) {
    auto it = b_by_index.find(ca.index);
    if (it == b_by_index.end()) {
      pairing.pairs.push_back({ca.index, &ca, nullptr, Route::Skipped});
      continue;
    }
    const Cluster* cb = it->second;
    Route route = (ca.area() > large_threshold && cb->area() > large_threshold)
                      ? Route::Large
                      : Route::Small;
    pairing.pairs.push_back({ca.index, &ca, cb, route});
  }
  return pairing;
}

// Small pairs too thin for RANSAC contribute nothing.
inline bool min_match_filter(const ClusterPair& pair) {
  if (pair.route != Route::Small) return true;
  return pair.a->area() >= kMinSmallClusterPixels &&
         pair.b->area() >= kMinSmallClusterPixels;
}

inline void apply_min_match_filter(ClusterPairing& pairing) {
  for (ClusterPair& p : pairing.pairs)
    if (!min_match_filter(p)) p.route = Route::Skipped;
}

}  // namespace hf
