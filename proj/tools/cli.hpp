#pragma once

// Command-line front end. `run` is separate from main() so tests can drive
// the tool in-process.
//
// Exit codes: 0 success, 1 I/O or other failure, 2 malformed input,
// 3 unknown class, 4 invalid configuration or arguments.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qaf2d/io.hpp"
#include "qaf2d/qaf2d.hpp"

namespace qaf2d::cli {

/// CLI11 config reader for JSON files. Top-level keys are long option names
/// without dashes; a nested object named after a subcommand holds that
/// subcommand's options. Command-line flags take precedence.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::stringstream ss;
    ss << input.rdbuf();
    const io::Json doc = io::parse_document(ss.str(), "config");
    if (!doc.is_object()) throw ParseError("config: top level must be an object", 1, 1);
    std::vector<CLI::ConfigItem> items;
    collect(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const io::Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void collect(const io::Json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        collect(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
  bool verbose = false;

  void log(const std::string& msg) const {
    if (verbose) err << msg << '\n';
  }
};

inline void add_grid_options(CLI::App& sub, AnchorGenConfig& cfg) {
  sub.add_option("--step-x", cfg.step_x, "2D center step along u (pixels)")->capture_default_str();
  sub.add_option("--step-y", cfg.step_y, "2D center step along v (pixels)")->capture_default_str();
  sub.add_option("--depth-min", cfg.depth_min, "smallest depth candidate (m)")->capture_default_str();
  sub.add_option("--depth-max", cfg.depth_max, "largest depth candidate (m)")->capture_default_str();
  sub.add_option("--depth-step", cfg.depth_step, "depth spacing (m)")->capture_default_str();
  sub.add_option("--step-w", cfg.step_w, "width step (m)")->capture_default_str();
  sub.add_option("--step-h", cfg.step_h, "height step (m)")->capture_default_str();
  sub.add_option("--step-l", cfg.step_l, "length step (m)")->capture_default_str();
  sub.add_option("--n-theta", cfg.n_theta, "yaw grid has 2*n_theta values")->capture_default_str();
  sub.add_option("--iou-threshold", cfg.iou_threshold, "keep anchors with IoU strictly above this")
      ->capture_default_str();
}

inline SizeRangeTable load_table(const std::optional<std::string>& path, ClassRegistry& registry) {
  if (!path) return default_table();
  return io::table_from_json(io::parse_document(io::read_file(*path), *path), registry, *path);
}

// ---- subcommands ---------------------------------------------------------------

struct StatsArgs {
  std::string annotations;
  std::string out;
};

inline int run_stats(const StatsArgs& a, const Streams& s) {
  ClassRegistry registry = ClassRegistry::nuscenes();
  const auto records = io::annotations_from_jsonl(io::read_file(a.annotations), registry, a.annotations);
  const SizeRangeTable table = compute_size_ranges(records, registry);
  io::write_file(a.out, io::table_to_json(table).dump(2) + "\n");
  s.log(fmt::format("{} records, {} classes -> {}", records.size(), table.size(), a.out));
  return 0;
}

struct SimulateArgs {
  SceneConfig scene;
  std::vector<std::string> class_weights;
  std::vector<double> region_x{-50.0, 50.0};
  std::vector<double> region_y{-50.0, 50.0};
  std::vector<double> region_z{-1.0, 1.0};
  std::optional<std::uint64_t> noise_seed;
  std::optional<std::string> table;
  std::string out_scene;
  std::optional<std::string> out_detections;
};

inline int run_simulate(SimulateArgs a, const Streams& s) {
  ClassRegistry registry = ClassRegistry::nuscenes();
  const SizeRangeTable table = load_table(a.table, registry);
  for (const std::string& entry : a.class_weights) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw ConfigError("class weight must look like name=weight: " + entry);
    const std::string name = entry.substr(0, eq);
    if (!registry.contains(name) || !table.contains(registry.id(name))) throw UnknownClassError(name);
    try {
      a.scene.class_weights[registry.id(name)] = std::stod(entry.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw ConfigError("bad class weight: " + entry);
    }
  }
  a.scene.region_x = {a.region_x[0], a.region_x[1]};
  a.scene.region_y = {a.region_y[0], a.region_y[1]};
  a.scene.region_z = {a.region_z[0], a.region_z[1]};

  const Scene scene = generate_scene(a.scene, table);
  const std::string scene_text = io::scene_to_json(scene, registry).dump(2) + "\n";
  std::string det_text;
  if (a.out_detections) {
    const auto dets = perturb_detections(scene, a.scene, table, a.noise_seed.value_or(a.scene.seed + 1));
    std::vector<io::Json> rows;
    for (std::size_t c = 0; c < dets.size(); ++c) {
      for (const SceneDetection& d : dets[c]) rows.push_back(io::detection_to_json(scene.camera_ids[c], d.box, registry));
    }
    det_text = io::dump_lines(rows);
  }
  io::write_file(a.out_scene, scene_text);
  if (a.out_detections) io::write_file(*a.out_detections, det_text);
  std::size_t n2d = 0;
  for (const auto& c : scene.gt_2d) n2d += c.size();
  s.log(fmt::format("{} cameras, {} objects, {} ground-truth 2D boxes", scene.cameras.size(), scene.objects.size(), n2d));
  return 0;
}

struct GenArgs {
  std::string detections;
  std::string cameras;
  std::optional<std::string> table;
  std::string out;
  AnchorGenConfig cfg;
};

inline int run_gen_anchors(const GenArgs& a, unsigned threads, const Streams& s) {
  a.cfg.validate();
  ClassRegistry registry = ClassRegistry::nuscenes();
  const SizeRangeTable table = load_table(a.table, registry);
  const auto cams = io::cameras_from_json(io::parse_document(io::read_file(a.cameras), a.cameras), a.cameras);
  const auto dets = io::detections_from_jsonl(io::read_file(a.detections), registry, a.detections);

  std::vector<Box2D> boxes;
  std::vector<CameraModel> per_box;
  for (const io::Detection& d : dets) {
    if (!table.contains(d.box.class_id)) throw UnknownClassError(registry.name(d.box.class_id));
    boxes.push_back(d.box);
    per_box.push_back(cams.at(d.camera));
  }
  const auto anchors = generate_for_frame(boxes, per_box, table, a.cfg, threads);
  io::write_file(a.out, io::anchors_to_jsonl(anchors));
  s.log(fmt::format("{} detections -> {} anchors", boxes.size(), anchors.size()));
  return 0;
}

struct MatchArgs {
  std::string predictions;
  std::string ground_truths;
  double lambda_cls = MatchWeights{}.cls;
  double lambda_box = MatchWeights{}.box;
  std::optional<std::string> out;
};

inline int run_match(const MatchArgs& a, const Streams& s) {
  if (!std::isfinite(a.lambda_cls) || !std::isfinite(a.lambda_box)) throw ConfigError("match weights must be finite");
  ClassRegistry registry = ClassRegistry::nuscenes();
  const auto preds = io::predictions_from_jsonl(io::read_file(a.predictions), registry, a.predictions);
  const auto gts = io::ground_truths_from_jsonl(io::read_file(a.ground_truths), registry, a.ground_truths);
  const Assignment m = class_constrained_match(preds, gts, {a.lambda_cls, a.lambda_box});
  const std::string text = io::assignment_to_json(m).dump(2) + "\n";
  if (a.out) {
    io::write_file(*a.out, text);
  } else {
    s.out << text;
  }
  s.log(fmt::format("{} predictions, {} ground truths, {} pairs", preds.size(), gts.size(), m.pairs.size()));
  return 0;
}

struct EvalArgs {
  std::string anchors;
  std::string scene;
  std::optional<std::string> out;
  std::vector<double> thresholds = default_recall_thresholds();
  double depth_min = AnchorGenConfig{}.depth_min;
  double depth_max = AnchorGenConfig{}.depth_max;
};

inline void print_report(const RecallReport& r, const ClassRegistry& registry, std::ostream& out) {
  out << fmt::format("objects {}  considered {}  with anchors {}\n", r.total, r.considered, r.with_anchor);
  out << fmt::format("{:>10} {:>10} {:>8}\n", "threshold", "covered", "recall");
  for (std::size_t t = 0; t < r.thresholds.size(); ++t) {
    out << fmt::format("{:>10.2f} {:>10} {:>8.4f}\n", r.thresholds[t], r.covered[t], r.recall[t]);
  }
  out << fmt::format("{:<22}{:>6}", "class", "gt");
  for (double t : r.thresholds) out << fmt::format(" {:>8}", fmt::format("@{:g}m", t));
  out << '\n';
  for (const auto& [id, c] : r.per_class) {
    out << fmt::format("{:<22}{:>6}", registry.name(id), c.considered);
    for (double v : c.recall) out << fmt::format(" {:>8.4f}", v);
    out << '\n';
  }
  auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); };
  out << fmt::format("best-anchor distance: mean {} m, median {} m; yaw error: mean {} rad\n",
                     opt(r.mean_best_distance), opt(r.median_best_distance), opt(r.mean_best_yaw_error));
}

inline int run_eval(const EvalArgs& a, const Streams& s) {
  if (!(a.depth_min <= a.depth_max)) throw ConfigError("depth-min must not exceed depth-max");
  ClassRegistry registry = ClassRegistry::nuscenes();
  const Scene scene = io::scene_from_json(io::parse_document(io::read_file(a.scene), a.scene), registry, a.scene);
  const auto anchors = io::anchors_from_jsonl(io::read_file(a.anchors), a.anchors);
  const auto targets = scene_targets(scene);
  RecallReport report;
  try {
    report = anchor_recall(anchors, targets, a.thresholds, {a.depth_min, a.depth_max});
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  const std::string text = io::report_to_json(report, registry).dump(2) + "\n";
  if (a.out) io::write_file(*a.out, text);
  print_report(report, registry, s.out);
  return 0;
}

struct PromptArgs {
  PromptShape shape;
};

inline int run_prompt_params(const PromptArgs& a, const Streams& s) {
  const double real = prompt_param_count(a.shape);
  const std::int64_t floored = prompt_param_count_floor(a.shape);
  s.out << fmt::format("real-valued: {}\n", real);
  s.out << fmt::format("floored: {}\n", floored);
  s.out << fmt::format("{:>5} {:>16} {:>10} {:>16}\n", "tau", "real-valued", "floored", "ratio-to-0.1");
  PromptShape probe = a.shape;
  probe.tau = 0.1;
  const double base = prompt_param_count(probe);
  for (int k = 1; k <= 5; ++k) {
    probe.tau = 0.1 * k;
    const double v = prompt_param_count(probe);
    s.out << fmt::format("{:>5.1f} {:>16.2f} {:>10} {:>16.6f}\n", probe.tau, v, prompt_param_count_floor(probe), v / base);
  }
  return 0;
}

// ---- entry point -------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"3D query anchors from 2D detections", "qaf2d"};
  app.set_version_flag("--version", QAF2D_VERSION);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; flags take precedence");
  app.require_subcommand(1);
  unsigned threads = 0;
  bool verbose = false;
  app.add_option("--threads", threads, "worker threads (0 = one per hardware thread)")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "per-class size ranges from annotation JSON Lines");
  stats_cmd->add_option("--annotations", stats.annotations)->required();
  stats_cmd->add_option("--out", stats.out)->required();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "synthetic surround-camera scene");
  sim_cmd->add_option("--seed", sim.scene.seed)->capture_default_str();
  sim_cmd->add_option("--cameras", sim.scene.n_cameras)->capture_default_str();
  sim_cmd->add_option("--objects", sim.scene.n_objects)->capture_default_str();
  sim_cmd->add_option("--class-weight", sim.class_weights, "name=weight, repeatable");
  sim_cmd->add_option("--region-x", sim.region_x)->expected(2)->capture_default_str();
  sim_cmd->add_option("--region-y", sim.region_y)->expected(2)->capture_default_str();
  sim_cmd->add_option("--region-z", sim.region_z)->expected(2)->capture_default_str();
  sim_cmd->add_option("--ring-radius", sim.scene.ring_radius)->capture_default_str();
  sim_cmd->add_option("--focal", sim.scene.focal)->capture_default_str();
  sim_cmd->add_option("--image-width", sim.scene.image_width)->capture_default_str();
  sim_cmd->add_option("--image-height", sim.scene.image_height)->capture_default_str();
  sim_cmd->add_option("--center-sigma", sim.scene.noise.center_sigma)->capture_default_str();
  sim_cmd->add_option("--size-sigma", sim.scene.noise.size_sigma)->capture_default_str();
  sim_cmd->add_option("--drop-prob", sim.scene.noise.drop_prob)->capture_default_str();
  sim_cmd->add_option("--fp-rate", sim.scene.noise.false_positive_rate)->capture_default_str();
  sim_cmd->add_option("--noise-seed", sim.noise_seed, "defaults to seed + 1");
  sim_cmd->add_option("--table", sim.table, "size table JSON (default: built-in nuScenes ranges)");
  sim_cmd->add_option("--out-scene", sim.out_scene)->required();
  sim_cmd->add_option("--out-detections", sim.out_detections, "noisy 2D detections as JSON Lines");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-anchors", "lift 2D detections into 3D anchors");
  gen_cmd->add_option("--detections", gen.detections)->required();
  gen_cmd->add_option("--cameras", gen.cameras, "JSON with a \"cameras\" array (scene files qualify)")->required();
  gen_cmd->add_option("--table", gen.table);
  gen_cmd->add_option("--out", gen.out)->required();
  add_grid_options(*gen_cmd, gen.cfg);

  MatchArgs match;
  auto* match_cmd = app.add_subcommand("match", "class-constrained Hungarian matching");
  match_cmd->add_option("--predictions", match.predictions)->required();
  match_cmd->add_option("--ground-truths", match.ground_truths)->required();
  match_cmd->add_option("--lambda-cls", match.lambda_cls)->capture_default_str();
  match_cmd->add_option("--lambda-box", match.lambda_box)->capture_default_str();
  match_cmd->add_option("--out", match.out, "default: stdout");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "anchor recall against a scene");
  eval_cmd->add_option("--anchors", ev.anchors)->required();
  eval_cmd->add_option("--scene", ev.scene)->required();
  eval_cmd->add_option("--out", ev.out);
  eval_cmd->add_option("--thresholds", ev.thresholds)->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--depth-min", ev.depth_min)->capture_default_str();
  eval_cmd->add_option("--depth-max", ev.depth_max)->capture_default_str();

  PromptArgs prompt;
  auto* prompt_cmd = app.add_subcommand("prompt-params", "visual-prompt parameter count");
  prompt_cmd->add_option("--channels", prompt.shape.channels)->required();
  prompt_cmd->add_option("--height", prompt.shape.height)->required();
  prompt_cmd->add_option("--width", prompt.shape.width)->required();
  prompt_cmd->add_option("--tau", prompt.shape.tau)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << QAF2D_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  const Streams s{out, err, verbose};
  try {
    if (stats_cmd->parsed()) return run_stats(stats, s);
    if (sim_cmd->parsed()) return run_simulate(sim, s);
    if (gen_cmd->parsed()) return run_gen_anchors(gen, threads, s);
    if (match_cmd->parsed()) return run_match(match, s);
    if (eval_cmd->parsed()) return run_eval(ev, s);
    if (prompt_cmd->parsed()) return run_prompt_params(prompt, s);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const UnknownClassError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace qaf2d::cli
