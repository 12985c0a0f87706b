#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hybridflow/clusters.hpp"
#include "hybridflow/densify.hpp"
#include "hybridflow/descriptors.hpp"
#include "hybridflow/flow.hpp"
#include "hybridflow/qap.hpp"
#include "hybridflow/slic.hpp"
#include "hybridflow/sparse_match.hpp"

namespace hf {

struct PipelineConfig {
  DescriptorParams descriptor;
  size_t cluster_area_threshold = kLargeClusterArea;
  size_t min_small_cluster = kMinSmallClusterPixels;
  SlicParams slic;
  MatchParams match;
  SparseMatchParams sparse;
  double affine_tol = -1.0;  // < 0: adaptive (2 * median residual + 3 px)
  size_t max_graph_nodes = 400;  // larger segmentations fall back to direct matching
  InterpolationParams interp;
  RefinementParams refine;
  uint64_t seed = 0;
  int jobs = 1;

  void set(const std::string& key, const std::string& value);
  void validate() const;
};

namespace detail {

inline long cfg_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw FormatError("config: bad integer for " + key + ": '" + value + "'");
  }
}

inline double cfg_real(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw FormatError("config: bad number for " + key + ": '" + value + "'");
  }
}

}  // namespace detail

inline void PipelineConfig::set(const std::string& key, const std::string& value) {
  using detail::cfg_int;
  using detail::cfg_real;
  if (key == "patch_size") descriptor.patch_size = static_cast<int>(cfg_int(key, value));
  else if (key == "cells") descriptor.cells = static_cast<int>(cfg_int(key, value));
  else if (key == "bins") descriptor.bins = static_cast<int>(cfg_int(key, value));
  else if (key == "sigma") descriptor.sigma = cfg_real(key, value);
  else if (key == "cluster_area_threshold")
    cluster_area_threshold = static_cast<size_t>(cfg_int(key, value));
  else if (key == "min_small_cluster")
    min_small_cluster = static_cast<size_t>(cfg_int(key, value));
  else if (key == "superpixel_size") slic.superpixel_size = static_cast<int>(cfg_int(key, value));
  else if (key == "compactness") slic.compactness = cfg_real(key, value);
  else if (key == "slic_iterations") slic.iterations = static_cast<int>(cfg_int(key, value));
  else if (key == "alpha_step") match.alpha_step = cfg_real(key, value);
  else if (key == "max_inner_iters") match.max_inner_iters = static_cast<int>(cfg_int(key, value));
  else if (key == "inner_tol") match.inner_tol = cfg_real(key, value);
  else if (key == "sinkhorn_iters") match.sinkhorn_iters = static_cast<int>(cfg_int(key, value));
  else if (key == "sinkhorn_tol") match.sinkhorn_tol = cfg_real(key, value);
  else if (key == "deformable") match.deformable = cfg_int(key, value) != 0;
  else if (key == "deformable_rounds")
    match.deformable_rounds = static_cast<int>(cfg_int(key, value));
  else if (key == "unmatched_tau") match.unmatched_tau = cfg_real(key, value);
  else if (key == "stride") sparse.stride = static_cast<int>(cfg_int(key, value));
  else if (key == "ratio") sparse.ratio = cfg_real(key, value);
  else if (key == "ransac_iters") sparse.ransac_iters = static_cast<int>(cfg_int(key, value));
  else if (key == "ransac_thresh_px") sparse.ransac_thresh_px = cfg_real(key, value);
  else if (key == "affine_tol") affine_tol = cfg_real(key, value);
  else if (key == "max_graph_nodes")
    max_graph_nodes = static_cast<size_t>(cfg_int(key, value));
  else if (key == "interp_k") interp.k_neighbors = static_cast<int>(cfg_int(key, value));
  else if (key == "interp_epsilon") interp.epsilon = cfg_real(key, value);
  else if (key == "refine_outer_iters") refine.outer_iters = static_cast<int>(cfg_int(key, value));
  else if (key == "refine_solver_iters")
    refine.solver_iters = static_cast<int>(cfg_int(key, value));
  else if (key == "alpha_s") refine.alpha_s = cfg_real(key, value);
  else if (key == "gamma") refine.gamma = cfg_real(key, value);
  else if (key == "omega") refine.omega = cfg_real(key, value);
  else if (key == "seed") seed = static_cast<uint64_t>(cfg_int(key, value));
  else if (key == "jobs") jobs = static_cast<int>(cfg_int(key, value));
  else throw FormatError("config: unknown key '" + key + "'");
}

inline void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw FormatError(std::string("config: ") + what);
  };
  require(descriptor.patch_size > 0 && descriptor.cells > 0 && descriptor.bins > 0,
          "descriptor dimensions must be positive");
  require(descriptor.patch_size % descriptor.cells == 0,
          "cells must divide patch_size");
  require(descriptor.sigma > 0, "sigma must be positive");
  require(cluster_area_threshold > 0, "cluster_area_threshold must be positive");
  require(slic.superpixel_size >= 16, "superpixel_size must be >= 16");
  require(slic.compactness > 0 && slic.iterations > 0, "SLIC params must be positive");
  require(match.alpha_step > 0 && match.alpha_step <= 1, "alpha_step must be in (0,1]");
  require(match.max_inner_iters > 0 && match.sinkhorn_iters > 0,
          "solver iteration counts must be positive");
  require(match.deformable_rounds > 0, "deformable_rounds must be positive");
  require(max_graph_nodes > 0, "max_graph_nodes must be positive");
  require(sparse.stride > 0, "stride must be positive");
  require(sparse.ratio > 0 && sparse.ratio <= 1, "ratio must be in (0,1]");
  require(sparse.ransac_iters > 0 && sparse.ransac_thresh_px > 0,
          "RANSAC params must be positive");
  require(interp.k_neighbors > 0 && interp.epsilon > 0,
          "interpolation params must be positive");
  require(refine.outer_iters > 0 && refine.solver_iters > 0,
          "refinement iteration counts must be positive");
  require(refine.alpha_s > 0 && refine.gamma >= 0, "refinement weights must be positive");
  require(refine.omega > 0 && refine.omega < 2, "omega must be in (0,2)");
  require(jobs > 0, "jobs must be positive");
}

// Flat key=value lines; '#' starts a comment; blank lines ignored.
inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  PipelineConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto is_space = [](unsigned char c) { return std::isspace(c); };
    line.erase(line.begin(), std::find_if_not(line.begin(), line.end(), is_space));
    line.erase(std::find_if_not(line.rbegin(), line.rend(), is_space).base(), line.end());
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config: line " + std::to_string(lineno) + " is not key=value");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    key.erase(std::find_if_not(key.rbegin(), key.rend(), is_space).base(), key.end());
    value.erase(value.begin(), std::find_if_not(value.begin(), value.end(), is_space));
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

struct RunReport {
  std::vector<std::pair<std::string, double>> stage_ms;  // ordered stage timings
  size_t cluster_pairs = 0;
  size_t large_pairs = 0;
  size_t small_pairs = 0;
  size_t superpixels = 0;
  size_t unmatched_nodes = 0;
  size_t graph_seeds = 0;
  size_t small_cluster_seeds = 0;
  double total_ms = 0.0;

  size_t total_seeds() const { return graph_seeds + small_cluster_seeds; }
};

// Optional capture of intermediate artifacts for visualization.
struct ComputeArtifacts {
  LabelMap labels1;
  std::vector<int> superpixel_raster;  // global superpixel ids, -1 where none
  SeedSet seeds;
  FlowField interpolated;
};

namespace detail {

inline uint64_t derive_seed(uint64_t global, uint64_t region) {
  // splitmix64 over the combined stream id
  uint64_t z = global + 0x9E3779B97F4A7C15ULL * (region + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class StageTimer {
 public:
  explicit StageTimer(RunReport& report) : report_(report) {}
  template <typename F>
  auto run(const std::string& name, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(name, t0);
    } else {
      auto result = f();
      record(name, t0);
      return result;
    }
  }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    report_.stage_ms.emplace_back(name, ms);
  }
  RunReport& report_;
};

struct RegionResult {
  SeedSet seeds;
  size_t superpixels = 0;
  size_t unmatched = 0;
  std::vector<int> sp_raster;  // frame-1 superpixel ids, only when captured
};

// Large-cluster route: SLIC on both masks, graph construction, deformable
// graph matching, affine consistency over matched Delaunay neighbors, then
// per-superpixel pixel matching with epipolar filtering.
inline RegionResult process_small_pair(const ClusterPair& pair,
                                       const DescriptorField& f1,
                                       const DescriptorField& f2,
                                       const PipelineConfig& cfg);

inline RegionResult process_large_pair(const ClusterPair& pair, const Image& img1,
                                       const Image& img2, const DescriptorField& f1,
                                       const DescriptorField& f2,
                                       const PipelineConfig& cfg,
                                       bool capture_raster = false) {
  RegionResult res;
  int kappa1 = target_count(pair.a->area(), cfg.slic.superpixel_size);
  int kappa2 = target_count(pair.b->area(), cfg.slic.superpixel_size);
  SuperpixelMap spm1 = slic(img1, pair.a->pixels, kappa1, cfg.slic);
  SuperpixelMap spm2 = slic(img2, pair.b->pixels, kappa2, cfg.slic);
  spm1.cluster_index = spm2.cluster_index = pair.index;
  res.superpixels = spm1.superpixels.size() + spm2.superpixels.size();
  if (capture_raster) res.sp_raster = spm1.id_raster;

  // Heavily fragmented masks can blow the segmentation far past the target
  // count; graph matching is cubic in the node count, so such pairs fall
  // back to direct region matching instead.
  if (spm1.superpixels.size() > cfg.max_graph_nodes ||
      spm2.superpixels.size() > cfg.max_graph_nodes) {
    RegionResult small = process_small_pair(pair, f1, f2, cfg);
    small.superpixels = res.superpixels;
    small.sp_raster = std::move(res.sp_raster);
    return small;
  }

  MatchGraph g1 = build_graph(spm1, f1, img1);
  MatchGraph g2 = build_graph(spm2, f2, img2);
  Correspondence corr = cfg.match.deformable ? deformable_match(g1, g2, cfg.match)
                                             : path_follow_match(g1, g2, cfg.match);
  UnmatchedNodes un = unmatched_nodes(corr, cfg.match.unmatched_tau);
  res.unmatched = un.g1.size() + un.g2.size();
  std::vector<char> confident(g1.nodes.size(), 1);
  for (int i : un.g1) confident[i] = 0;

  // Delaunay adjacency in G1 restricted to confidently matched nodes.
  std::vector<std::vector<int>> adj(g1.nodes.size());
  for (const GraphEdge& e : g1.edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  auto centroid_match = [&](int i) {
    return CentroidMatch{g1.nodes[i].centroid, g2.nodes[corr.match[i]].centroid};
  };
  std::vector<char> keep(g1.nodes.size(), 0);
  for (size_t i = 0; i < g1.nodes.size(); ++i) {
    if (!confident[i] || corr.match[i] < 0) continue;
    std::vector<CentroidMatch> neighbors;
    for (int j : adj[i])
      if (confident[j] && corr.match[j] >= 0) neighbors.push_back(centroid_match(j));
    keep[i] = affine_consistency(centroid_match(static_cast<int>(i)), neighbors,
                                 cfg.affine_tol);
  }

  for (size_t i = 0; i < g1.nodes.size(); ++i) {
    if (!keep[i]) continue;
    const Superpixel& s1 = spm1.superpixels[g1.nodes[i].superpixel_id];
    const Superpixel& s2 = spm2.superpixels[g2.nodes[corr.match[i]].superpixel_id];
    auto matches = match_pixels(s1.pixels, s2.pixels, f1, f2, cfg.sparse.stride,
                                cfg.sparse.ratio);
    uint64_t sp_seed = derive_seed(cfg.seed, (static_cast<uint64_t>(pair.index) << 20) |
                                                 (i + 1));
    RansacResult rr = ransac_fundamental(matches, cfg.sparse.ransac_thresh_px,
                                         cfg.sparse.ransac_iters, sp_seed);
    for (PixelMatch m : rr.inliers) {
      m.region_id = pair.index;
      m.origin = SeedOrigin::Graph;
      res.seeds.push_back(m);
    }
  }
  return res;
}

inline RegionResult process_small_pair(const ClusterPair& pair,
                                       const DescriptorField& f1,
                                       const DescriptorField& f2,
                                       const PipelineConfig& cfg) {
  RegionResult res;
  auto matches = match_pixels(pair.a->pixels, pair.b->pixels, f1, f2,
                              cfg.sparse.stride, cfg.sparse.ratio);
  RansacResult rr =
      ransac_fundamental(matches, cfg.sparse.ransac_thresh_px, cfg.sparse.ransac_iters,
                         derive_seed(cfg.seed, static_cast<uint64_t>(pair.index)));
  for (PixelMatch m : rr.inliers) {
    m.region_id = pair.index;
    m.origin = SeedOrigin::SmallCluster;
    res.seeds.push_back(m);
  }
  return res;
}

}  // namespace detail

// Full pipeline over one frame pair. Deterministic for fixed config + seed:
// per-region RNG streams are derived from (seed, region), and region results
// merge in cluster-index order regardless of worker scheduling.
inline FlowField compute(const Image& img1, const Image& img2,
                         const PipelineConfig& cfg, RunReport* report_out = nullptr,
                         ComputeArtifacts* artifacts = nullptr) {
  cfg.validate();
  if (img1.width() != img2.width() || img1.height() != img2.height())
    throw FormatError("compute: frame dimensions differ");

  RunReport report;
  detail::StageTimer timer(report);
  auto t_start = std::chrono::steady_clock::now();

  DescriptorField f1 = timer.run("descriptors_1",
                                 [&] { return dense_descriptors(img1, cfg.descriptor); });
  DescriptorField f2 = timer.run("descriptors_2",
                                 [&] { return dense_descriptors(img2, cfg.descriptor); });
  LabelMap labels1 = timer.run("classify_1", [&] { return classify_pixels(f1); });
  LabelMap labels2 = timer.run("classify_2", [&] { return classify_pixels(f2); });
  if (artifacts) artifacts->labels1 = labels1;

  std::vector<Cluster> clusters1 = build_clusters(labels1);
  std::vector<Cluster> clusters2 = build_clusters(labels2);
  ClusterPairing pairing =
      pair_clusters(clusters1, clusters2, cfg.cluster_area_threshold);
  for (ClusterPair& p : pairing.pairs)
    if (p.route == Route::Small &&
        (p.a->area() < cfg.min_small_cluster || p.b->area() < cfg.min_small_cluster))
      p.route = Route::Skipped;
  for (const ClusterPair& p : pairing.pairs) {
    if (p.route == Route::Skipped) continue;
    ++report.cluster_pairs;
    if (p.route == Route::Large) ++report.large_pairs;
    else ++report.small_pairs;
  }
  if (report.cluster_pairs == 0)
    throw FormatError("compute: no seeds — no cluster pair survived routing");

  // Worker pool over cluster pairs; results land in per-pair slots so the
  // merge order is independent of scheduling.
  std::vector<detail::RegionResult> results(pairing.pairs.size());
  timer.run("sparse_matching", [&] {
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (size_t i = next.fetch_add(1); i < pairing.pairs.size();
           i = next.fetch_add(1)) {
        const ClusterPair& p = pairing.pairs[i];
        try {
          if (p.route == Route::Large)
            results[i] = detail::process_large_pair(p, img1, img2, f1, f2, cfg,
                                                    artifacts != nullptr);
          else if (p.route == Route::Small)
            results[i] = detail::process_small_pair(p, f1, f2, cfg);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    int n_workers = std::min<int>(cfg.jobs, static_cast<int>(pairing.pairs.size()));
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
  });

  std::vector<SeedSet> per_region;
  if (artifacts)
    artifacts->superpixel_raster.assign(
        static_cast<size_t>(img1.width()) * img1.height(), -1);
  int sp_id_offset = 0;
  for (detail::RegionResult& r : results) {
    report.superpixels += r.superpixels;
    report.unmatched_nodes += r.unmatched;
    if (artifacts && !r.sp_raster.empty()) {
      int max_id = -1;
      for (size_t i = 0; i < r.sp_raster.size(); ++i)
        if (r.sp_raster[i] >= 0) {
          artifacts->superpixel_raster[i] = sp_id_offset + r.sp_raster[i];
          max_id = std::max(max_id, r.sp_raster[i]);
        }
      sp_id_offset += max_id + 1;
    }
    if (!r.seeds.empty()) per_region.push_back(std::move(r.seeds));
  }
  SeedSet seeds = assemble_seeds(per_region);
  if (seeds.empty())
    throw FormatError("compute: no seeds — sparse matching left every region empty");
  for (const PixelMatch& m : seeds)
    (m.origin == SeedOrigin::Graph ? report.graph_seeds : report.small_cluster_seeds)++;
  if (artifacts) artifacts->seeds = seeds;

  EdgeCostMap cost = timer.run("edge_cost", [&] { return edge_cost(img1); });
  FlowField interp =
      timer.run("interpolate", [&] { return interpolate(seeds, cost, cfg.interp); });
  if (artifacts) artifacts->interpolated = interp;
  FlowField flow =
      timer.run("refine", [&] { return refine(interp, img1, img2, cfg.refine); });

  report.total_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
  if (report_out) *report_out = report;
  return flow;
}

// ----------------------------------------------------------------------------
// Evaluation harness

enum class Metric { Epe, Fi, Both };

struct EvalRow {
  std::string frame;
  double epe = 0.0;
  double fi = 0.0;
  bool ok = false;
  std::string error;  // set when the row failed (missing gt, parse error, ...)
};

struct EvalTable {
  std::vector<EvalRow> rows;
  double mean_epe = 0.0;
  double mean_fi = 0.0;
  size_t ok_count = 0;

  bool has_errors() const { return ok_count != rows.size(); }
};

inline FlowField read_flow_any(const std::string& path) {
  if (detail::ends_with(path, ".flo")) return read_flow_flo(path);
  if (detail::ends_with(path, ".png")) return read_flow_kitti(path);
  throw FormatError("unrecognized flow format: " + path);
}

inline void write_flow_any(const FlowField& f, const std::string& path) {
  if (detail::ends_with(path, ".flo")) return write_flow_flo(f, path);
  if (detail::ends_with(path, ".png")) return write_flow_kitti(f, path);
  throw FormatError("unrecognized flow format: " + path);
}

// Pairs prediction files with ground truth by filename stem; rows that fail
// (missing gt, corrupt file) are listed but excluded from the means.
inline EvalTable evaluate(const std::string& pred_dir, const std::string& gt_dir,
                          Metric metric = Metric::Both) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(pred_dir)) throw IoError("not a directory: " + pred_dir);
  if (!fs::is_directory(gt_dir)) throw IoError("not a directory: " + gt_dir);

  std::map<std::string, fs::path> gt_by_stem;
  for (const auto& entry : fs::directory_iterator(gt_dir)) {
    std::string ext = entry.path().extension().string();
    if (ext == ".flo" || ext == ".png") gt_by_stem[entry.path().stem().string()] = entry.path();
  }

  std::vector<fs::path> preds;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    std::string ext = entry.path().extension().string();
    if (ext == ".flo" || ext == ".png") preds.push_back(entry.path());
  }
  std::sort(preds.begin(), preds.end());
  if (preds.empty()) throw FormatError("no flow files in " + pred_dir);

  EvalTable table;
  for (const fs::path& p : preds) {
    EvalRow row;
    row.frame = p.stem().string();
    try {
      auto it = gt_by_stem.find(row.frame);
      if (it == gt_by_stem.end()) throw IoError("no ground truth for " + row.frame);
      FlowField pred = read_flow_any(p.string());
      FlowField gt = read_flow_any(it->second.string());
      if (metric != Metric::Fi) row.epe = epe(pred, gt).epe_all;
      if (metric != Metric::Epe) row.fi = fi_rate(pred, gt).fi_rate;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    table.rows.push_back(row);
  }
  for (const EvalRow& r : table.rows) {
    if (!r.ok) continue;
    table.mean_epe += r.epe;
    table.mean_fi += r.fi;
    ++table.ok_count;
  }
  if (table.ok_count > 0) {
    table.mean_epe /= static_cast<double>(table.ok_count);
    table.mean_fi /= static_cast<double>(table.ok_count);
  }
  return table;
}

// ----------------------------------------------------------------------------
// Visualization helpers

// Distinct-ish color per label via bit-mixed hashing.
inline Image label_map_to_image(const LabelMap& labels) {
  Image img(labels.width, labels.height);
  for (int y = 0; y < labels.height; ++y)
    for (int x = 0; x < labels.width; ++x) {
      uint64_t h = detail::derive_seed(0x5bd1e995, labels.at(x, y));
      img.at(x, y, 0) = ((h >> 0) & 0xff) / 255.f;
      img.at(x, y, 1) = ((h >> 8) & 0xff) / 255.f;
      img.at(x, y, 2) = ((h >> 16) & 0xff) / 255.f;
    }
  return img;
}

// Frame 1 with superpixel boundaries burned in.
inline Image superpixel_boundary_image(const Image& img,
                                       const std::vector<int>& id_raster) {
  Image out = img;
  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int id = id_raster[static_cast<size_t>(y) * w + x];
      bool boundary = false;
      if (x + 1 < w && id_raster[static_cast<size_t>(y) * w + x + 1] != id) boundary = true;
      if (y + 1 < h && id_raster[static_cast<size_t>(y + 1) * w + x] != id) boundary = true;
      if (boundary) {
        out.at(x, y, 0) = 1.f;
        out.at(x, y, 1) = 1.f;
        out.at(x, y, 2) = 0.f;
      }
    }
  return out;
}

// Frame 1 with one marker pixel per seed.
inline Image seed_overlay_image(const Image& img, const SeedSet& seeds) {
  Image out = img;
  for (const PixelMatch& m : seeds) {
    int x = std::clamp(static_cast<int>(std::lround(m.x1)), 0, img.width() - 1);
    int y = std::clamp(static_cast<int>(std::lround(m.y1)), 0, img.height() - 1);
    out.at(x, y, 0) = m.origin == SeedOrigin::Graph ? 0.f : 1.f;
    out.at(x, y, 1) = 1.f;
    out.at(x, y, 2) = 0.f;
  }
  return out;
}

}  // namespace hf
