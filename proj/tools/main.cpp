// SPDX-License-Identifier: Apache-2.0
//
// forestseg command line: label propagation, instance segmentation,
// evaluation, training crop export and cloud inspection.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "forestseg/cloud_io.hpp"
#include "forestseg/crops.hpp"
#include "forestseg/errors.hpp"
#include "forestseg/evaluation.hpp"
#include "forestseg/fixture.hpp"
#include "forestseg/predictions.hpp"
#include "forestseg/propagation.hpp"
#include "forestseg/segmentation.hpp"
#include "forestseg/threading.hpp"
#include "forestseg/version.hpp"

namespace fs = forestseg;

namespace {

int g_verbosity = 1;

void log_info(const std::string& msg) {
  if (g_verbosity >= 1) std::cerr << "[forestseg] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (g_verbosity >= 2) std::cerr << "[forestseg] " << msg << "\n";
}

struct GlobalOpts {
  int threads = 0;  // 0: FORESTSEG_THREADS env or hardware default
  std::string config_path;
  nlohmann::json config = nlohmann::json::object();
  CLI::Option* threads_opt = nullptr;

  void add(CLI::App& app) {
    threads_opt = app.add_option(
        "--threads", threads,
        "Worker threads (default: FORESTSEG_THREADS env or all cores)");
    app.add_option("--config", config_path,
                   "JSON config file; command line flags take precedence");
    app.add_flag_callback(
        "-v,--verbose", [] { g_verbosity = 2; }, "Chatty logging");
    app.add_flag_callback(
        "-q,--quiet", [] { g_verbosity = 0; }, "Errors only");
  }

  // Called at the start of every subcommand, after parsing.
  void finalize() {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw fs::io_error("cannot open config " + config_path);
      try {
        in >> config;
      } catch (const nlohmann::json::parse_error& e) {
        throw fs::parse_error(config_path, 0, e.byte, e.what());
      }
    }
    int effective = threads;
    if (threads_opt->count() == 0) {
      if (config.contains("threads")) {
        effective = config.at("threads").get<int>();
      } else if (const char* env = std::getenv("FORESTSEG_THREADS")) {
        effective = std::atoi(env);
      }
    }
    fs::set_thread_count(effective);
    log_debug("threads: " + std::to_string(fs::thread_count()));
  }

  /// Config-file fallback for an option the user did not pass explicitly.
  template <typename T>
  void fallback(const CLI::Option* opt, const char* section, const char* key,
                T& value) const {
    if (opt != nullptr && opt->count() > 0) return;
    if (!config.contains(section)) return;
    const auto& s = config.at(section);
    if (s.contains(key)) value = s.at(key).template get<T>();
  }
};

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw fs::io_error("cannot write " + path);
  out << content;
  if (!content.empty() && content.back() != '\n') out << "\n";
  if (!out) throw fs::io_error("write failed for " + path);
}

std::vector<std::int32_t> instances_from_labels(const fs::LabeledCloud& cloud) {
  std::vector<std::int32_t> ids(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    ids[i] = cloud.labels[i].is_tree() ? cloud.labels[i].tree_id() : 0;
  }
  return ids;
}

// ---------------------------------------------------------------- propagate

struct PropagateArgs {
  std::string raw_path, seeds_path, out_path, report_path;
  fs::PropagationParams params;
  CLI::Option *radius_opt = nullptr, *linkage_opt = nullptr,
              *min_height_opt = nullptr;
};

void run_propagate(GlobalOpts& globals, PropagateArgs& args) {
  globals.finalize();
  globals.fallback(args.radius_opt, "propagate", "radius",
                   args.params.propagate_radius);
  globals.fallback(args.linkage_opt, "propagate", "linkage",
                   args.params.linkage_radius);
  globals.fallback(args.min_height_opt, "propagate", "min_height",
                   args.params.min_tree_height);
  args.params.validate();

  log_info("loading raw cloud " + args.raw_path);
  const fs::LabeledCloud raw = fs::load_cloud(args.raw_path);
  log_info("loading seed cloud " + args.seeds_path);
  const fs::LabeledCloud seeds = fs::load_cloud(args.seeds_path);

  log_info("propagating labels over " + std::to_string(raw.size()) +
           " points from " + std::to_string(seeds.size()) + " seeds");
  fs::PropagationResult result = fs::propagate_full(raw, seeds, args.params);
  fs::save_cloud(result.cloud, args.out_path);
  if (!args.report_path.empty()) {
    write_text_file(args.report_path, result.summary.to_json_string());
  }

  const fs::PropagationSummary& s = result.summary;
  std::cout << "points          : " << s.n_points << "\n"
            << "trees           : " << s.n_trees() << "\n"
            << "tree points     : " << s.n_tree_points << "\n"
            << "non-tree points : " << s.n_non_tree << "\n"
            << "non-annotated   : " << s.n_non_annotated << "\n";
}

// ------------------------------------------------------------------ segment

struct SegmentArgs {
  std::string cloud_path, pred_path, out_path, mask_out_path, report_path;
  fs::ClusterParams params;
  double tile_size = 35.0;
  double inner_size = 8.0;
  CLI::Option *eps_opt = nullptr, *min_pts_opt = nullptr,
              *threshold_opt = nullptr, *assign_opt = nullptr,
              *tile_opt = nullptr, *inner_opt = nullptr,
              *cluster_2d_opt = nullptr;
};

void run_segment(GlobalOpts& globals, SegmentArgs& args) {
  globals.finalize();
  globals.fallback(args.eps_opt, "segment", "eps", args.params.eps);
  globals.fallback(args.min_pts_opt, "segment", "min_pts",
                   args.params.min_pts);
  globals.fallback(args.threshold_opt, "segment", "threshold",
                   args.params.semantic_threshold);
  globals.fallback(args.assign_opt, "segment", "assign_radius",
                   args.params.assign_radius);
  globals.fallback(args.tile_opt, "segment", "tile", args.tile_size);
  globals.fallback(args.inner_opt, "segment", "inner", args.inner_size);
  globals.fallback(args.cluster_2d_opt, "segment", "cluster_2d",
                   args.params.cluster_2d);
  args.params.validate();

  log_info("loading cloud " + args.cloud_path);
  const fs::LabeledCloud cloud = fs::load_cloud(args.cloud_path);
  log_info("loading predictions " + args.pred_path);
  const fs::PredictionSet pred = fs::load_predictions(args.pred_path, cloud);

  const fs::TilePlan plan = fs::plan_tiles(fs::bounding_box_2d(cloud.points),
                                           args.tile_size, args.inner_size);
  log_info("segmenting with " + std::to_string(plan.tiles.size()) + " tiles");
  const std::vector<std::int32_t> ids =
      fs::segment_tiled(cloud, pred, args.params, plan);

  fs::LabeledCloud out = cloud;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.labels[i] = ids[i] > 0 ? fs::PointLabel::tree(ids[i])
                               : fs::PointLabel::non_tree();
  }
  fs::save_cloud(out, args.out_path);

  if (!args.mask_out_path.empty()) {
    const std::vector<std::uint8_t> mask =
        fs::semantic_classify(pred, args.params.semantic_threshold);
    fs::save_mask(mask, args.mask_out_path);
  }

  std::int32_t n_instances = 0;
  std::size_t n_masked = 0;
  for (const std::int32_t id : ids) {
    n_instances = std::max(n_instances, id);
    if (id > 0) ++n_masked;
  }
  if (!args.report_path.empty()) {
    const nlohmann::json report{
        {"n_points", cloud.size()},
        {"n_instances", n_instances},
        {"n_instance_points", n_masked},
        {"params",
         {{"eps", args.params.eps},
          {"min_pts", args.params.min_pts},
          {"threshold", args.params.semantic_threshold},
          {"assign_radius", args.params.assign_radius},
          {"cluster_2d", args.params.cluster_2d},
          {"tile", args.tile_size},
          {"inner", args.inner_size}}},
    };
    write_text_file(args.report_path, report.dump(2));
  }
  std::cout << "points    : " << cloud.size() << "\n"
            << "instances : " << n_instances << "\n";
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string gt_path, pred_path, mask_path, report_path;
  fs::EvaluationParams params;
  CLI::Option* min_instance_opt = nullptr;
};

void run_evaluate(GlobalOpts& globals, EvaluateArgs& args) {
  globals.finalize();
  std::size_t min_pts = args.params.min_instance_points;
  globals.fallback(args.min_instance_opt, "evaluate", "min_instance_points",
                   min_pts);
  args.params.min_instance_points = min_pts;

  log_info("loading ground truth " + args.gt_path);
  const fs::LabeledCloud gt = fs::load_cloud(args.gt_path);
  log_info("loading prediction " + args.pred_path);
  const fs::LabeledCloud pred_cloud = fs::load_cloud(args.pred_path);
  if (pred_cloud.size() != gt.size()) {
    throw fs::argument_error(
        "ground truth has " + std::to_string(gt.size()) +
        " points but prediction has " + std::to_string(pred_cloud.size()));
  }
  const std::vector<std::int32_t> instances =
      instances_from_labels(pred_cloud);

  std::vector<std::uint8_t> mask;
  if (!args.mask_path.empty()) {
    mask = fs::load_mask(args.mask_path);
    if (mask.size() != gt.size()) {
      throw fs::argument_error("mask has " + std::to_string(mask.size()) +
                               " entries but the cloud has " +
                               std::to_string(gt.size()) + " points");
    }
    for (std::uint8_t& m : mask) m &= 1;
  }

  const fs::EvaluationReport report =
      fs::evaluate(gt, instances, mask, args.params);
  if (!args.report_path.empty()) {
    write_text_file(args.report_path, report.to_json_string());
  }
  std::cout << report.format_summary();
}

// --------------------------------------------------------------------- crop

struct CropArgs {
  std::string cloud_path, out_dir;
  fs::CropSpec spec;
  CLI::Option *size_opt = nullptr, *inner_opt = nullptr, *seed_opt = nullptr,
              *count_opt = nullptr;
};

void run_crop(GlobalOpts& globals, CropArgs& args) {
  globals.finalize();
  globals.fallback(args.size_opt, "crop", "size", args.spec.crop_size);
  globals.fallback(args.inner_opt, "crop", "inner", args.spec.inner_size);
  globals.fallback(args.seed_opt, "crop", "seed", args.spec.seed);
  globals.fallback(args.count_opt, "crop", "count", args.spec.count);
  args.spec.validate();

  log_info("loading cloud " + args.cloud_path);
  const fs::LabeledCloud cloud = fs::load_cloud(args.cloud_path);
  const fs::CropManifest manifest =
      fs::export_crops(cloud, args.spec, args.out_dir);
  std::cout << "crops written : " << manifest.crops.size() << "\n"
            << "manifest      : " << args.out_dir << "/manifest.json\n";
}

// --------------------------------------------------------------------- info

struct InfoArgs {
  std::string cloud_path, meta_path, report_path;
};

void run_info(GlobalOpts& globals, InfoArgs& args) {
  globals.finalize();
  fs::LabeledCloud cloud = fs::load_cloud(args.cloud_path);
  if (!args.meta_path.empty()) {
    cloud.meta = fs::load_dataset_meta(args.meta_path);
  }
  const fs::PropagationSummary summary =
      fs::summarize_labels(cloud, fs::PropagationParams{});
  const fs::Box2 bbox = fs::bounding_box_2d(cloud.points);
  double min_z = 0.0, max_z = 0.0;
  if (!cloud.empty()) {
    min_z = max_z = cloud.points[0].z;
    for (const fs::Point3& p : cloud.points) {
      min_z = std::min(min_z, p.z);
      max_z = std::max(max_z, p.z);
    }
  }

  std::cout << "points          : " << summary.n_points << "\n"
            << "trees           : " << summary.n_trees() << "\n"
            << "tree points     : " << summary.n_tree_points << "\n"
            << "non-tree points : " << summary.n_non_tree << "\n"
            << "non-annotated   : " << summary.n_non_annotated << "\n"
            << "unlabeled       : " << summary.n_unlabeled << "\n"
            << "bounds x        : [" << bbox.min_x << ", " << bbox.max_x
            << "]\n"
            << "bounds y        : [" << bbox.min_y << ", " << bbox.max_y
            << "]\n"
            << "bounds z        : [" << min_z << ", " << max_z << "]\n";
  if (!cloud.meta.name.empty()) {
    std::cout << "dataset         : " << cloud.meta.name << " ("
              << cloud.meta.country << ", " << cloud.meta.forest_type << ", "
              << cloud.meta.sensor << ")\n";
  }

  if (!args.report_path.empty()) {
    nlohmann::json j{
        {"n_points", summary.n_points},
        {"n_trees", summary.n_trees()},
        {"n_tree_points", summary.n_tree_points},
        {"n_non_tree", summary.n_non_tree},
        {"n_non_annotated", summary.n_non_annotated},
        {"n_unlabeled", summary.n_unlabeled},
        {"bounds",
         {{"min_x", bbox.min_x},
          {"max_x", bbox.max_x},
          {"min_y", bbox.min_y},
          {"max_y", bbox.max_y},
          {"min_z", min_z},
          {"max_z", max_z}}},
    };
    write_text_file(args.report_path, j.dump(2));
  }
}

// -------------------------------------------------------------- gen-fixture

struct GenFixtureArgs {
  std::string out_dir;
  fs::ForestFixtureParams params;
  std::vector<std::int32_t> withhold;
};

void run_gen_fixture(GlobalOpts& globals, GenFixtureArgs& args) {
  globals.finalize();
  args.params.withhold_seed_trees = args.withhold;

  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  if (ec) {
    throw fs::io_error("cannot create directory " + args.out_dir + ": " +
                       ec.message());
  }

  log_info("generating fixture into " + args.out_dir);
  const fs::ForestFixture fixture = fs::generate_forest(args.params);
  fs::save_cloud(fixture.gt, args.out_dir + "/gt.fseg");
  fs::save_cloud(fixture.raw, args.out_dir + "/raw.fseg");
  fs::save_cloud(fixture.seeds, args.out_dir + "/seeds.fseg");
  fs::save_predictions(fixture.predictions, args.out_dir + "/pred.fprd");

  nlohmann::json bases = nlohmann::json::array();
  for (std::size_t t = 0; t < fixture.bases.size(); ++t) {
    bases.push_back({{"id", t + 1},
                     {"base", {fixture.bases[t].x, fixture.bases[t].y,
                               fixture.bases[t].z}},
                     {"height", fixture.tree_heights[t]}});
  }
  const nlohmann::json j{
      {"n_points", fixture.gt.size()},
      {"n_seeds", fixture.seeds.size()},
      {"trees", bases},
      {"params",
       {{"n_trees", args.params.n_trees},
        {"n_small_trees", args.params.n_small_trees},
        {"spacing", args.params.spacing},
        {"points_per_tree", args.params.points_per_tree},
        {"crown_radius", args.params.crown_radius},
        {"ground_spacing", args.params.ground_spacing},
        {"offset_noise_sigma", args.params.offset_noise_sigma},
        {"score_flip_rate", args.params.score_flip_rate},
        {"seed_fraction", args.params.seed_fraction},
        {"seed", args.params.seed}}},
  };
  write_text_file(args.out_dir + "/fixture.json", j.dump(2));
  std::cout << "fixture points : " << fixture.gt.size() << "\n"
            << "seed points    : " << fixture.seeds.size() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forest point cloud tree segmentation toolkit"};
  app.set_version_flag("--version", fs::kVersion);
  app.require_subcommand(1);

  GlobalOpts globals;
  globals.add(app);

  // propagate
  PropagateArgs prop;
  CLI::App* propagate =
      app.add_subcommand("propagate",
                         "Propagate published tree labels onto a raw cloud "
                         "and classify the remainder");
  propagate->add_option("--raw", prop.raw_path, "Raw (unlabeled) cloud")
      ->required();
  propagate->add_option("--seeds", prop.seeds_path, "Tree-labeled seed cloud")
      ->required();
  propagate->add_option("--out", prop.out_path, "Output labeled cloud")
      ->required();
  prop.radius_opt =
      propagate->add_option("--radius", prop.params.propagate_radius,
                            "Majority vote radius in meters");
  prop.linkage_opt =
      propagate->add_option("--linkage", prop.params.linkage_radius,
                            "Non-tree linkage radius in meters");
  prop.min_height_opt = propagate->add_option(
      "--min-height", prop.params.min_tree_height,
      "Minimum tree height in meters; smaller trees become non-tree "
      "(inclusive: a tree at exactly this height is kept)");
  propagate->add_option("--report", prop.report_path, "Summary JSON path");
  propagate->callback([&] { run_propagate(globals, prop); });

  // segment
  SegmentArgs seg;
  CLI::App* segment = app.add_subcommand(
      "segment", "Group predicted offsets into tree instances");
  segment->add_option("--cloud", seg.cloud_path, "Input cloud")->required();
  segment->add_option("--pred", seg.pred_path, "Prediction file (FPRD)")
      ->required();
  segment->add_option("--out", seg.out_path, "Output instance cloud")
      ->required();
  seg.eps_opt =
      segment->add_option("--eps", seg.params.eps, "Clustering radius");
  seg.min_pts_opt = segment->add_option("--min-pts", seg.params.min_pts,
                                        "Core point neighbor count");
  seg.threshold_opt = segment->add_option(
      "--threshold", seg.params.semantic_threshold, "Tree score threshold");
  seg.assign_opt = segment->add_option("--assign-radius",
                                       seg.params.assign_radius,
                                       "Noise adoption radius");
  seg.tile_opt = segment->add_option("--tile", seg.tile_size,
                                     "Processing window size in meters");
  seg.inner_opt = segment->add_option("--inner", seg.inner_size,
                                      "Inner (kept) window size in meters");
  seg.cluster_2d_opt = segment->add_flag("--cluster-2d",
                                         seg.params.cluster_2d,
                                         "Cluster on (x, y) only");
  segment->add_option("--mask-out", seg.mask_out_path,
                      "Write the semantic mask as an FMSK sidecar");
  segment->add_option("--report", seg.report_path, "Summary JSON path");
  segment->callback([&] { run_segment(globals, seg); });

  // evaluate
  EvaluateArgs eval;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Compare predicted instances against ground truth");
  evaluate->add_option("--gt", eval.gt_path, "Ground truth cloud")->required();
  evaluate->add_option("--pred", eval.pred_path, "Predicted instance cloud")
      ->required();
  evaluate->add_option("--pred-mask", eval.mask_path,
                       "Semantic mask sidecar (FMSK, bit0 = tree)");
  evaluate->add_option("--report", eval.report_path, "Report JSON path");
  eval.min_instance_opt = evaluate->add_option(
      "--min-instance-points", eval.params.min_instance_points,
      "Ignore predicted instances smaller than this");
  evaluate->callback([&] { run_evaluate(globals, eval); });

  // crop
  CropArgs crop;
  CLI::App* crop_cmd = app.add_subcommand(
      "crop", "Export random training crops with supervision masks");
  crop_cmd->add_option("--cloud", crop.cloud_path, "Input cloud")->required();
  crop_cmd->add_option("--out", crop.out_dir, "Output directory")->required();
  crop.count_opt = crop_cmd->add_option("--count", crop.spec.count,
                                        "Number of crops")
                       ->required();
  crop.seed_opt = crop_cmd->add_option("--seed", crop.spec.seed, "RNG seed");
  crop.size_opt =
      crop_cmd->add_option("--size", crop.spec.crop_size, "Crop square side");
  crop.inner_opt = crop_cmd->add_option("--inner", crop.spec.inner_size,
                                        "Inner square side");
  crop_cmd->callback([&] { run_crop(globals, crop); });

  // info
  InfoArgs info;
  CLI::App* info_cmd =
      app.add_subcommand("info", "Print cloud statistics and bounds");
  info_cmd->add_option("--cloud", info.cloud_path, "Input cloud")->required();
  info_cmd->add_option("--meta", info.meta_path, "Dataset metadata JSON");
  info_cmd->add_option("--report", info.report_path, "Statistics JSON path");
  info_cmd->callback([&] { run_info(globals, info); });

  // gen-fixture (hidden): reproducible synthetic scenes for tests and demos
  GenFixtureArgs gen;
  CLI::App* gen_cmd = app.add_subcommand(
      "gen-fixture", "Generate a synthetic forest fixture");
  gen_cmd->group("");  // hidden from help
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--trees", gen.params.n_trees, "Tree count");
  gen_cmd->add_option("--small-trees", gen.params.n_small_trees,
                      "Trees below the height cutoff");
  gen_cmd->add_option("--spacing", gen.params.spacing, "Base grid spacing");
  gen_cmd->add_option("--points-per-tree", gen.params.points_per_tree,
                      "Points per tree");
  gen_cmd->add_option("--crown-radius", gen.params.crown_radius,
                      "Crown radius");
  gen_cmd->add_option("--ground-spacing", gen.params.ground_spacing,
                      "Ground sheet spacing");
  gen_cmd->add_option("--slope-x", gen.params.terrain_slope_x,
                      "Terrain slope along x");
  gen_cmd->add_option("--slope-y", gen.params.terrain_slope_y,
                      "Terrain slope along y");
  gen_cmd->add_option("--offset-noise", gen.params.offset_noise_sigma,
                      "Gaussian sigma on tree offsets");
  gen_cmd->add_option("--flip-rate", gen.params.score_flip_rate,
                      "Fraction of non-tree points flipped to tree score");
  gen_cmd->add_option("--seed-fraction", gen.params.seed_fraction,
                      "Fraction of tree points published as seeds");
  gen_cmd->add_option("--withhold", gen.withhold,
                      "Tree ids excluded from the seed cloud");
  gen_cmd->add_option("--seed", gen.params.seed, "RNG seed");
  gen_cmd->callback([&] { run_gen_fixture(globals, gen); });

  // Global flags are accepted after the subcommand as well.
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage problems exit 1 regardless of CLI11's internal code; --help and
    // --version stay 0.
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const fs::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::argument_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
