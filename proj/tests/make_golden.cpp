// Writes the gen-anchors golden file using the brute-force oracle:
//   make_golden <detections.jsonl> <cameras.json> <config.json> <out.jsonl>

#include <iostream>

#include "oracles.hpp"
#include "qaf2d/io.hpp"

int main(int argc, char** argv) {
  using namespace qaf2d;
  if (argc != 5) {
    std::cerr << "usage: make_golden <detections> <cameras> <config> <out>\n";
    return 4;
  }
  ClassRegistry registry = ClassRegistry::nuscenes();
  const SizeRangeTable table = default_table();
  const auto dets = io::detections_from_jsonl(io::read_file(argv[1]), registry, argv[1]);
  const auto cams = io::cameras_from_json(io::parse_document(io::read_file(argv[2]), argv[2]), argv[2]);
  const io::Json opts = io::parse_document(io::read_file(argv[3]), argv[3]).at("gen-anchors");

  AnchorGenConfig cfg;
  cfg.step_x = opts.value("step-x", cfg.step_x);
  cfg.step_y = opts.value("step-y", cfg.step_y);
  cfg.depth_min = opts.value("depth-min", cfg.depth_min);
  cfg.depth_max = opts.value("depth-max", cfg.depth_max);
  cfg.depth_step = opts.value("depth-step", cfg.depth_step);
  cfg.step_w = opts.value("step-w", cfg.step_w);
  cfg.step_h = opts.value("step-h", cfg.step_h);
  cfg.step_l = opts.value("step-l", cfg.step_l);
  cfg.n_theta = opts.value("n-theta", cfg.n_theta);
  cfg.iou_threshold = opts.value("iou-threshold", cfg.iou_threshold);

  std::vector<Anchor3D> all;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    auto part = oracle::naive_anchors(dets[i].box, cams.at(dets[i].camera), table, cfg);
    for (Anchor3D& a : part) a.source_box_index = static_cast<int>(i);
    all.insert(all.end(), part.begin(), part.end());
  }
  io::write_file(argv[4], io::anchors_to_jsonl(all));
  std::cout << all.size() << " anchors\n";
  return 0;
}
