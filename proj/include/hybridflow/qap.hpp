#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "hybridflow/graph.hpp"
#include "hybridflow/hungarian.hpp"
#include "hybridflow/sinkhorn.hpp"

namespace hf {

struct MatchParams {
  double alpha_step = 0.01;
  int max_inner_iters = 30;
  double inner_tol = 1e-6;
  int sinkhorn_iters = 50;
  double sinkhorn_tol = 1e-6;
  bool deformable = true;
  int deformable_rounds = 4;
  double unmatched_tau = -1.0;  // < 0 selects the 1/N default
};

// Partial one-to-one assignment between two node sets.
struct Correspondence {
  Eigen::MatrixXd soft;          // N1 x N2 slice of the padded doubly-stochastic iterate
  std::vector<int> match;        // per G1 node: matched G2 node, or -1
  double objective = 0.0;        // 1_C^T K 1_C through the factors
  std::vector<double> alpha_trace;  // J_alpha after each inner solve
};

inline double node_affinity(const GraphNode& a, const GraphNode& b) {
  return std::exp(-descriptor_distance(a.descriptor, b.descriptor, Norm::L1));
}

namespace detail {

inline double angle_diff(double ta, double tb) {
  double d = std::abs(ta - tb);         // both in [0, pi)
  return std::min(d, M_PI - d);         // undirected wrap, [0, pi/2]
}

inline double length_diff(double la, double lb) {
  double mean = 0.5 * (la + lb);
  return mean > 0 ? std::abs(la - lb) / mean : 0.0;
}

inline double color_l1(const std::array<double, 6>& a, const std::array<double, 6>& b) {
  double s = 0.0;
  for (int i = 0; i < 6; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

// lambda^E for one endpoint alignment (i<->k, j<->l).
inline double edge_affinity_oriented(const GraphNode& pi, const GraphNode& pj,
                                     double theta_a, double len_a,
                                     const GraphNode& pk, const GraphNode& pl,
                                     double theta_b, double len_b) {
  double dp_ik = descriptor_distance(pi.descriptor, pk.descriptor, Norm::L1);
  double dp_jl = descriptor_distance(pj.descriptor, pl.descriptor, Norm::L1);
  double dp_ij = descriptor_distance(pi.descriptor, pj.descriptor, Norm::L1);
  double dp_kl = descriptor_distance(pk.descriptor, pl.descriptor, Norm::L1);
  double dc_ik = color_l1(pi.color, pk.color);
  double dc_jl = color_l1(pj.color, pl.color);
  double dc_ij = color_l1(pi.color, pj.color);
  double dc_kl = color_l1(pk.color, pl.color);

  double phi = (dp_ik + dp_jl)              // first order, gradient
             + std::abs(dp_ij - dp_kl)      // second order, gradient
             + (dc_ik + dc_jl)              // first order, color
             + std::abs(dc_ij - dc_kl);     // second order, color
  double expo = phi + angle_diff(theta_a, theta_b) + length_diff(len_a, len_b);
  return std::exp(-0.5 * expo);
}

}  // namespace detail

// Undirected edges admit two endpoint alignments; the affinity is the better one.
inline double edge_affinity(const MatchGraph& g1, const GraphEdge& ea,
                            const MatchGraph& g2, const GraphEdge& eb) {
  double fwd = detail::edge_affinity_oriented(
      g1.nodes[ea.i], g1.nodes[ea.j], ea.theta, ea.length,
      g2.nodes[eb.i], g2.nodes[eb.j], eb.theta, eb.length);
  double rev = detail::edge_affinity_oriented(
      g1.nodes[ea.i], g1.nodes[ea.j], ea.theta, ea.length,
      g2.nodes[eb.j], g2.nodes[eb.i], eb.theta, eb.length);
  return std::max(fwd, rev);
}

// K is never materialized; it is represented through these factors.
struct AffinityFactors {
  Eigen::MatrixXd node;   // N1 x N2, lambda^P
  Eigen::MatrixXd edge;   // M1 x M2, lambda^E (orientation-max)
  std::vector<int> h1, t1;  // G1 edge endpoints (head = smaller index)
  std::vector<int> h2, t2;
  int n1 = 0, n2 = 0;
};

inline AffinityFactors build_affinities(const MatchGraph& g1, const MatchGraph& g2) {
  AffinityFactors f;
  f.n1 = static_cast<int>(g1.nodes.size());
  f.n2 = static_cast<int>(g2.nodes.size());
  f.node.resize(f.n1, f.n2);
  for (int i = 0; i < f.n1; ++i)
    for (int k = 0; k < f.n2; ++k)
      f.node(i, k) = node_affinity(g1.nodes[i], g2.nodes[k]);
  const int m1 = static_cast<int>(g1.edges.size());
  const int m2 = static_cast<int>(g2.edges.size());
  f.edge.resize(m1, m2);
  f.h1.resize(m1);
  f.t1.resize(m1);
  f.h2.resize(m2);
  f.t2.resize(m2);
  for (int a = 0; a < m1; ++a) {
    f.h1[a] = g1.edges[a].i;
    f.t1[a] = g1.edges[a].j;
  }
  for (int b = 0; b < m2; ++b) {
    f.h2[b] = g2.edges[b].i;
    f.t2[b] = g2.edges[b].j;
  }
  for (int a = 0; a < m1; ++a)
    for (int b = 0; b < m2; ++b)
      f.edge(a, b) = edge_affinity(g1, g1.edges[a], g2, g2.edges[b]);
  if (!f.node.allFinite() || !f.edge.allFinite())
    throw ContractError("graph match: non-finite affinities");
  return f;
}

// Single K entry; reference oracle, O(1) given the factors' source graphs.
inline double affinity_element(const MatchGraph& g1, const MatchGraph& g2,
                               int i, int j, int k, int l) {
  if (i == j && k == l) return node_affinity(g1.nodes[i], g2.nodes[k]);
  if (i == j || k == l) return 0.0;
  auto find_edge = [](const MatchGraph& g, int a, int b) -> const GraphEdge* {
    for (const GraphEdge& e : g.edges)
      if ((e.i == a && e.j == b) || (e.i == b && e.j == a)) return &e;
    return nullptr;
  };
  const GraphEdge* ea = find_edge(g1, i, j);
  const GraphEdge* eb = find_edge(g2, k, l);
  if (!ea || !eb) return 0.0;
  return edge_affinity(g1, *ea, g2, *eb);
}

namespace detail {

// y = K x on the padded N x N iterate, composed through the factors:
// diagonal block applies lambda^P elementwise; the edge part routes X through
// the two incidence gathers for each of the four endpoint orientations.
inline Eigen::MatrixXd apply_k(const AffinityFactors& f, const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
  y.topLeftCorner(f.n1, f.n2) =
      f.node.cwiseProduct(x.topLeftCorner(f.n1, f.n2));
  const int m1 = static_cast<int>(f.h1.size());
  const int m2 = static_cast<int>(f.h2.size());
  // Process one G2 edge at a time so every read and write stays inside four
  // n-length columns (L1-resident) instead of scattering across the n x n
  // iterate.
  Eigen::VectorXd acc_h(n), acc_t(n);
  for (int b = 0; b < m2; ++b) {
    const int hb = f.h2[b], tb = f.t2[b];
    const double* col_h = x.col(hb).data();
    const double* col_t = x.col(tb).data();
    acc_h.setZero();
    acc_t.setZero();
    const double* wcol = f.edge.col(b).data();
    for (int a = 0; a < m1; ++a) {
      const double w = wcol[a];
      const int ha = f.h1[a], ta = f.t1[a];
      acc_h[ha] += w * col_t[ta];
      acc_h[ta] += w * col_t[ha];
      acc_t[ha] += w * col_h[ta];
      acc_t[ta] += w * col_h[ha];
    }
    y.col(hb) += acc_h;
    y.col(tb) += acc_t;
  }
  return y;
}

inline double quad_form(const AffinityFactors& f, const Eigen::MatrixXd& x) {
  return x.cwiseProduct(apply_k(f, x)).sum();
}

// Spectral bound for the convex/concave split, by power iteration on K.
inline double spectral_bound(const AffinityFactors& f, int n) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(n, n);
  v /= v.norm();
  double lambda = 1.0;
  for (int it = 0; it < 30; ++it) {
    Eigen::MatrixXd w = apply_k(f, v);
    double nw = w.norm();
    if (nw == 0.0) break;
    lambda = nw;
    v = w / nw;
  }
  return lambda * 1.05 + 1e-9;
}

inline Eigen::MatrixXd permutation_matrix(const std::vector<int>& col, int n) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) p(i, col[i]) = 1.0;
  return p;
}

}  // namespace detail

inline double discrete_objective(const AffinityFactors& f,
                                 const std::vector<int>& match) {
  const int n = std::max(f.n1, f.n2);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < f.n1; ++i)
    if (i < static_cast<int>(match.size()) && match[i] >= 0) c(i, match[i]) = 1.0;
  return detail::quad_form(f, c);
}

// Graduated convex-to-concave path over the Birkhoff polytope, conditional
// gradient inner solves, Hungarian discretization of the final soft iterate.
inline Correspondence match_from_factors(const AffinityFactors& f,
                                         const MatchParams& params = {}) {
  const int n = std::max(f.n1, f.n2);
  Correspondence out;
  if (n == 0) return out;

  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  sinkhorn_project(x, params.sinkhorn_iters, params.sinkhorn_tol);
  const double c = detail::spectral_bound(f, n);

  // K x is maintained across iterations; a fresh apply is needed only after
  // the iterate actually moves.
  Eigen::MatrixXd kx = detail::apply_k(f, x);

  // G2 edge lookup so p^T K p of a permutation costs O(M1) instead of a
  // dense quadratic form.
  std::unordered_map<long long, int> g2_edge;
  const int m1 = static_cast<int>(f.h1.size());
  const int m2 = static_cast<int>(f.h2.size());
  for (int b = 0; b < m2; ++b) {
    g2_edge[static_cast<long long>(f.h2[b]) * n + f.t2[b]] = b;
    g2_edge[static_cast<long long>(f.t2[b]) * n + f.h2[b]] = b;
  }
  auto perm_quad = [&](const std::vector<int>& col) {
    double s = 0.0;
    for (int i = 0; i < f.n1; ++i)
      if (col[i] < f.n2) s += f.node(i, col[i]);
    for (int a = 0; a < m1; ++a) {
      int ci = col[f.h1[a]], cj = col[f.t1[a]];
      if (ci >= f.n2 || cj >= f.n2) continue;
      auto it = g2_edge.find(static_cast<long long>(ci) * n + cj);
      if (it != g2_edge.end()) s += 2.0 * f.edge(a, it->second);
    }
    return s;
  };

  for (double alpha = 0.0; alpha <= 1.0 + 1e-12; alpha += params.alpha_step) {
    const double reg = (2.0 * alpha - 1.0) * c;
    for (int it = 0; it < params.max_inner_iters; ++it) {
      Eigen::MatrixXd grad = 2.0 * (kx + reg * x);
      std::vector<int> col = max_weight_assignment(grad);
      // directional quantities for d = p - x, with p the LP vertex
      double grad_p = 0.0, kx_p = 0.0, x_p = 0.0;
      for (int i = 0; i < n; ++i) {
        grad_p += grad(i, col[i]);
        kx_p += kx(i, col[i]);
        x_p += x(i, col[i]);
      }
      double g = grad_p - grad.cwiseProduct(x).sum();
      if (g <= params.inner_tol) break;
      double xkx = x.cwiseProduct(kx).sum();
      double xx = x.squaredNorm();
      double q = (perm_quad(col) - 2.0 * kx_p + xkx) + reg * (n - 2.0 * x_p + xx);
      double t = 1.0;
      if (q < 0.0) t = std::min(1.0, g / (-2.0 * q));
      x *= (1.0 - t);
      for (int i = 0; i < n; ++i) x(i, col[i]) += t;
      kx = detail::apply_k(f, x);
    }
    out.alpha_trace.push_back(x.cwiseProduct(kx).sum() + reg * x.squaredNorm());
  }

  std::vector<int> col = max_weight_assignment(x);
  out.match.assign(f.n1, -1);
  for (int i = 0; i < f.n1; ++i)
    if (col[i] < f.n2) out.match[i] = col[i];  // dummy columns stay unmatched
  out.soft = x.topLeftCorner(f.n1, f.n2);
  out.objective = discrete_objective(f, out.match);
  return out;
}

inline Correspondence path_follow_match(const MatchGraph& g1, const MatchGraph& g2,
                                        const MatchParams& params = {}) {
  if (g1.nodes.empty() || g2.nodes.empty())
    throw ContractError("path_follow_match: empty graph");
  return match_from_factors(build_affinities(g1, g2), params);
}

struct Affine2 {
  // p' = [a b; c d] p + [tx; ty]
  double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;

  Point2 apply(const Point2& p) const {
    return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty};
  }
};

namespace detail {

// Weighted least-squares transform from soft correspondence weights.
// similarity: 4 dof (a, b, tx, ty) with c = -b, d = a. affine: 6 dof.
inline std::optional<Affine2> fit_transform(const std::vector<Point2>& src,
                                            const std::vector<Point2>& dst,
                                            const Eigen::MatrixXd& weights,
                                            bool similarity) {
  const int n1 = static_cast<int>(src.size());
  const int n2 = static_cast<int>(dst.size());
  const int dof = similarity ? 4 : 6;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(dof, dof);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(dof);
  double wsum = 0.0;
  for (int i = 0; i < n1; ++i)
    for (int k = 0; k < n2; ++k) {
      double w = weights(i, k);
      if (w <= 1e-12) continue;
      wsum += w;
      const Point2& p = src[i];
      const Point2& q = dst[k];
      if (similarity) {
        // rows: [x -y 1 0; y x 0 1] * [a b tx ty] = [qx qy]
        Eigen::Matrix<double, 2, 4> J;
        J << p.x, -p.y, 1, 0, p.y, p.x, 0, 1;
        Eigen::Vector2d r(q.x, q.y);
        ata += w * J.transpose() * J;
        atb += w * J.transpose() * r;
      } else {
        Eigen::Matrix<double, 2, 6> J;
        J << p.x, p.y, 1, 0, 0, 0, 0, 0, 0, p.x, p.y, 1;
        Eigen::Vector2d r(q.x, q.y);
        ata += w * J.transpose() * J;
        atb += w * J.transpose() * r;
      }
    }
  if (wsum <= 1e-9) return std::nullopt;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ata);
  if (lu.rank() < dof) return std::nullopt;  // degenerate configuration
  Eigen::VectorXd s = lu.solve(atb);
  Affine2 t;
  if (similarity) {
    t.a = s(0); t.b = -s(1); t.c = s(1); t.d = s(0); t.tx = s(2); t.ty = s(3);
  } else {
    t.a = s(0); t.b = s(1); t.tx = s(2); t.c = s(3); t.d = s(4); t.ty = s(5);
  }
  return t;
}

inline MatchGraph warp_graph(const MatchGraph& g, const Affine2& t) {
  MatchGraph w = g;
  for (GraphNode& n : w.nodes) n.centroid = t.apply(n.centroid);
  for (GraphEdge& e : w.edges) {
    e.theta = edge_angle(w.nodes[e.i].centroid, w.nodes[e.j].centroid);
    e.length = std::hypot(w.nodes[e.i].centroid.x - w.nodes[e.j].centroid.x,
                          w.nodes[e.i].centroid.y - w.nodes[e.j].centroid.y);
  }
  return w;
}

}  // namespace detail

// Alternates correspondence optimization with a global similarity-then-affine
// transform fit, keeping the best-objective round. Degenerate fits fall back
// to the pure path-following result.
inline Correspondence deformable_match(const MatchGraph& g1, const MatchGraph& g2,
                                       const MatchParams& params = {}) {
  if (g1.nodes.size() < 3 || g2.nodes.size() < 3)
    return path_follow_match(g1, g2, params);

  std::vector<Point2> src, dst;
  for (const GraphNode& n : g1.nodes) src.push_back(n.centroid);
  for (const GraphNode& n : g2.nodes) dst.push_back(n.centroid);

  Affine2 transform;  // identity
  Correspondence best;
  bool have_best = false;
  for (int round = 0; round < params.deformable_rounds; ++round) {
    MatchGraph g1w = detail::warp_graph(g1, transform);
    Correspondence corr = path_follow_match(g1w, g2, params);
    if (!have_best || corr.objective > best.objective) {
      best = corr;
      have_best = true;
    }
    if (round + 1 == params.deformable_rounds) break;
    std::vector<Point2> src_w;
    for (const GraphNode& n : g1w.nodes) src_w.push_back(n.centroid);
    bool similarity = round < params.deformable_rounds / 2;
    auto step = detail::fit_transform(src, dst, corr.soft, similarity);
    if (!step) break;  // rank-deficient: keep the best correspondence so far
    transform = *step;
  }
  return best;
}

struct UnmatchedNodes {
  std::vector<int> g1;  // node indices without a confident assignment
  std::vector<int> g2;
};

// Assignments to dummies or with soft weight strictly below tau are unmatched.
inline UnmatchedNodes unmatched_nodes(const Correspondence& corr, double tau = -1.0) {
  UnmatchedNodes out;
  const int n1 = static_cast<int>(corr.soft.rows());
  const int n2 = static_cast<int>(corr.soft.cols());
  const int n = std::max(n1, n2);
  if (tau < 0) tau = n > 0 ? 1.0 / n : 0.0;
  std::vector<char> g2_matched(n2, 0);
  for (int i = 0; i < n1; ++i) {
    int k = corr.match[i];
    if (k < 0 || corr.soft(i, k) < tau) {
      out.g1.push_back(i);
    } else {
      g2_matched[k] = 1;
    }
  }
  for (int k = 0; k < n2; ++k)
    if (!g2_matched[k]) out.g2.push_back(k);
  return out;
}

}  // namespace hf
