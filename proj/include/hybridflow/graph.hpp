#pragma once

#include <cmath>
#include <vector>

#include "hybridflow/delaunay.hpp"
#include "hybridflow/descriptors.hpp"
#include "hybridflow/slic.hpp"

namespace hf {

struct GraphNode {
  Point2 centroid;
  std::vector<float> descriptor;   // mean descriptor over the superpixel
  std::array<double, 6> color{};   // <mu_r, mu_g, mu_b, sigma_r, sigma_g, sigma_b>
  int superpixel_id = 0;
};

struct GraphEdge {
  int i = 0;  // endpoint node indices, i < j
  int j = 0;
  double theta = 0.0;   // angle to the horizontal axis, [0, pi)
  double length = 0.0;  // pixels
};

// G = {P, E, T}: superpixel-centroid nodes with Delaunay edges. The incidence
// structure is implied by the endpoint indices stored per edge.
struct MatchGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  // Node x edge incidence; column k has 1s at the edge's two endpoints.
  std::vector<std::vector<uint8_t>> incidence() const {
    std::vector<std::vector<uint8_t>> t(nodes.size(),
                                        std::vector<uint8_t>(edges.size(), 0));
    for (size_t k = 0; k < edges.size(); ++k) {
      t[edges[k].i][k] = 1;
      t[edges[k].j][k] = 1;
    }
    return t;
  }
};

inline double edge_angle(const Point2& a, const Point2& b) {
  double theta = std::atan2(b.y - a.y, b.x - a.x);
  if (theta < 0) theta += M_PI;           // undirected: fold to [0, pi)
  if (theta >= M_PI) theta -= M_PI;       // atan2 can return exactly pi
  return theta;
}

inline MatchGraph build_graph(const SuperpixelMap& spm, const DescriptorField& field,
                              const Image& image) {
  if (spm.superpixels.empty()) throw ContractError("build_graph: empty superpixel map");
  MatchGraph g;
  g.nodes.reserve(spm.superpixels.size());
  for (const Superpixel& s : spm.superpixels) {
    GraphNode node;
    node.centroid = {s.cx, s.cy};
    node.superpixel_id = s.id;
    node.descriptor.assign(field.dims(), 0.f);
    std::vector<double> acc(field.dims(), 0.0);
    for (const PixelCoord& p : s.pixels) {
      const float* d = field.at(p.x, p.y);
      for (int c = 0; c < field.dims(); ++c) acc[c] += d[c];
    }
    for (int c = 0; c < field.dims(); ++c)
      node.descriptor[c] = static_cast<float>(acc[c] / s.pixels.size());
    ColorStats cs = color_stats(image, s.pixels);
    node.color = cs.as_vec();
    g.nodes.push_back(std::move(node));
  }

  if (g.nodes.size() >= 2) {
    std::vector<Point2> pts;
    pts.reserve(g.nodes.size());
    for (const GraphNode& n : g.nodes) pts.push_back(n.centroid);
    for (auto [i, j] : delaunay(pts)) {
      GraphEdge e;
      e.i = i;
      e.j = j;
      e.theta = edge_angle(pts[i], pts[j]);
      e.length = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y);
      g.edges.push_back(e);
    }
  }
  return g;
}

}  // namespace hf
