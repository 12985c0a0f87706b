// hybridflow: dense optical flow estimation and evaluation.
//
//   hybridflow compute <img1> <img2> -o out.flo [--viz dir] [--config file]
//                      [--seed n] [--jobs k]
//   hybridflow eval --pred <dir> --gt <dir> [--metric epe|fi|both] [--csv file]
//   hybridflow viz <flow> -o out.png
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal invariant violation.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hybridflow/pipeline.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

hf::PipelineConfig resolve_config(const std::string& config_path) {
  if (!config_path.empty()) return hf::load_config(config_path);
  if (const char* env = std::getenv("HYBRIDFLOW_CONFIG"); env && *env)
    return hf::load_config(env);
  return {};
}

int run_compute(const std::string& img1_path, const std::string& img2_path,
                const std::string& out_path, const std::string& viz_dir,
                const std::string& config_path, long long seed_override,
                int jobs_override) {
  hf::PipelineConfig cfg = resolve_config(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  if (jobs_override > 0) cfg.jobs = jobs_override;
  cfg.validate();

  hf::Image img1 = hf::read_image(img1_path);
  hf::Image img2 = hf::read_image(img2_path);

  hf::RunReport report;
  hf::ComputeArtifacts artifacts;
  hf::ComputeArtifacts* capture = viz_dir.empty() ? nullptr : &artifacts;
  hf::FlowField flow = hf::compute(img1, img2, cfg, &report, capture);
  hf::write_flow_any(flow, out_path);

  std::cerr << "seeds: " << report.total_seeds() << " (graph " << report.graph_seeds
            << ", small-cluster " << report.small_cluster_seeds << ")\n"
            << "cluster pairs: " << report.cluster_pairs << " (large "
            << report.large_pairs << ", small " << report.small_pairs << ")\n"
            << "superpixels: " << report.superpixels << ", unmatched nodes: "
            << report.unmatched_nodes << "\n";
  for (const auto& [stage, ms] : report.stage_ms)
    std::cerr << "  " << stage << ": " << std::fixed << std::setprecision(1) << ms
              << " ms\n";
  std::cerr << "total: " << std::fixed << std::setprecision(1) << report.total_ms
            << " ms\n";

  if (capture) {
    namespace fs = std::filesystem;
    fs::create_directories(viz_dir);
    hf::write_image((fs::path(viz_dir) / "labels.png").string(),
                    hf::label_map_to_image(artifacts.labels1));
    hf::write_image((fs::path(viz_dir) / "superpixels.png").string(),
                    hf::superpixel_boundary_image(img1, artifacts.superpixel_raster));
    hf::write_image((fs::path(viz_dir) / "seeds.png").string(),
                    hf::seed_overlay_image(img1, artifacts.seeds));
    hf::write_image((fs::path(viz_dir) / "interpolated.png").string(),
                    hf::flow_to_color(artifacts.interpolated));
    hf::write_image((fs::path(viz_dir) / "flow.png").string(),
                    hf::flow_to_color(flow));
  }
  return 0;
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& metric_name, const std::string& csv_path) {
  hf::Metric metric = hf::Metric::Both;
  if (metric_name == "epe") metric = hf::Metric::Epe;
  else if (metric_name == "fi") metric = hf::Metric::Fi;
  else if (metric_name != "both")
    throw CLI::ValidationError("--metric must be epe, fi, or both");

  hf::EvalTable table = hf::evaluate(pred_dir, gt_dir, metric);

  std::ostringstream csv;
  csv << "frame,epe,fi,seeds,runtime_ms\n";
  for (const hf::EvalRow& row : table.rows) {
    if (row.ok)
      csv << row.frame << "," << row.epe << "," << row.fi << ",,\n";
    else
      csv << row.frame << ",error,error,,\n";
  }
  if (csv_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(csv_path);
    if (!out) throw hf::IoError("cannot open for write: " + csv_path);
    out << csv.str();
  }

  std::cout << "\n" << std::left << std::setw(24) << "frame" << std::right
            << std::setw(10) << "epe" << std::setw(10) << "fi" << "\n";
  for (const hf::EvalRow& row : table.rows) {
    std::cout << std::left << std::setw(24) << row.frame << std::right;
    if (row.ok)
      std::cout << std::setw(10) << std::fixed << std::setprecision(3) << row.epe
                << std::setw(10) << row.fi << "\n";
    else
      std::cout << "  ERROR: " << row.error << "\n";
  }
  std::cout << std::left << std::setw(24) << "mean" << std::right << std::setw(10)
            << std::fixed << std::setprecision(3) << table.mean_epe << std::setw(10)
            << table.mean_fi << "  (" << table.ok_count << "/" << table.rows.size()
            << " frames)\n";
  return table.has_errors() ? kExitData : 0;
}

int run_viz(const std::string& flow_path, const std::string& out_path) {
  hf::FlowField flow = hf::read_flow_any(flow_path);
  hf::write_image(out_path, hf::flow_to_color(flow));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HybridFlow dense optical flow"};
  app.require_subcommand(1);

  auto* compute = app.add_subcommand("compute", "Estimate flow for a frame pair");
  std::string img1, img2, out = "out.flo", viz_dir, config_path;
  long long seed = -1;
  int jobs = 0;
  compute->add_option("img1", img1, "first frame")->required();
  compute->add_option("img2", img2, "second frame")->required();
  compute->add_option("-o,--output", out, "output flow file (.flo or .png)");
  compute->add_option("--viz", viz_dir, "directory for debug rasters");
  compute->add_option("--config", config_path, "key=value config file");
  compute->add_option("--seed", seed, "RNG seed override");
  compute->add_option("--jobs", jobs, "worker count override");

  auto* eval = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  std::string pred_dir, gt_dir, metric = "both", csv_path;
  eval->add_option("--pred", pred_dir, "prediction directory")->required();
  eval->add_option("--gt", gt_dir, "ground-truth directory")->required();
  eval->add_option("--metric", metric, "epe, fi, or both");
  eval->add_option("--csv", csv_path, "write CSV here instead of stdout");

  auto* viz = app.add_subcommand("viz", "Render a flow file to a color image");
  std::string flow_path, viz_out = "out.png";
  viz->add_option("flow", flow_path, "flow file (.flo or .png)")->required();
  viz->add_option("-o,--output", viz_out, "output image");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (compute->parsed())
      return run_compute(img1, img2, out, viz_dir, config_path, seed, jobs);
    if (eval->parsed()) return run_eval(pred_dir, gt_dir, metric, csv_path);
    if (viz->parsed()) return run_viz(flow_path, viz_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const hf::ContractError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const hf::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const hf::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
