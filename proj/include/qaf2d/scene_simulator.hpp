#pragma once

// Synthetic surround-camera scenes with ground-truth 3D boxes, their exact 2D
// projections, and a noisy copy of those projections that stands in for a 2D
// detector.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qaf2d/anchor_stats.hpp"
#include "qaf2d/errors.hpp"
#include "qaf2d/geometry.hpp"
#include "qaf2d/random.hpp"

namespace qaf2d {

struct DetectionNoise {
  double center_sigma = 0.0;    ///< pixels, per axis
  double size_sigma = 0.0;      ///< relative, per side
  double drop_prob = 0.0;
  double false_positive_rate = 0.0;  ///< chance each kept box spawns a false positive
};

struct SceneConfig {
  int n_cameras = 6;
  int n_objects = 20;
  /// Sampling weight per class id. Empty means uniform over the table.
  std::map<int, double> class_weights;
  Range region_x{-50.0, 50.0};
  Range region_y{-50.0, 50.0};
  Range region_z{-1.0, 1.0};
  std::uint64_t seed = 0;
  DetectionNoise noise;
  /// Distance of each camera from the rig origin along its optical axis.
  double ring_radius = 0.0;
  double focal = 1266.0;
  int image_width = 1600;
  int image_height = 900;
};

struct SceneObject {
  int class_id = 0;
  Box3D box;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// A 2D box in one camera; `object` indexes Scene::objects, -1 for false positives.
struct SceneDetection {
  Box2D box;
  int object = -1;

  friend bool operator==(const SceneDetection&, const SceneDetection&) = default;
};

struct Scene {
  std::vector<std::string> camera_ids;
  std::vector<CameraModel> cameras;
  std::vector<SceneObject> objects;
  /// gt_2d[c] lists the detections of camera c.
  std::vector<std::vector<SceneDetection>> gt_2d;
};

inline void validate(const SceneConfig& cfg, const SizeRangeTable& table) {
  if (cfg.n_cameras < 1) throw ConfigError("scene needs at least one camera");
  if (cfg.n_objects < 0) throw ConfigError("object count must be non-negative");
  for (const auto& [axis, r] : {std::pair{"x", cfg.region_x}, {"y", cfg.region_y}, {"z", cfg.region_z}}) {
    if (!(r.min <= r.max)) throw ConfigError(std::string("placement region ") + axis + " has min > max");
  }
  bool any_positive = cfg.class_weights.empty() && table.size() > 0;
  for (const auto& [id, w] : cfg.class_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("class weights must be non-negative");
    if (!table.contains(id)) throw UnknownClassError("id " + std::to_string(id));
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw ConfigError("at least one class weight must be positive");
  const DetectionNoise& n = cfg.noise;
  if (!(n.center_sigma >= 0.0) || !(n.size_sigma >= 0.0)) throw ConfigError("noise sigmas must be >= 0");
  for (double p : {n.drop_prob, n.false_positive_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise probabilities must lie in [0, 1]");
  }
  if (!(cfg.ring_radius >= 0.0)) throw ConfigError("ring radius must be >= 0");
  if (!(cfg.focal > 0.0) || cfg.image_width < 1 || cfg.image_height < 1) {
    throw ConfigError("camera focal length and image size must be positive");
  }
}

/// Camera i looks along azimuth 2 pi i / n, level with the ground, with its
/// principal point at the image center.
inline std::vector<CameraModel> surround_rig(const SceneConfig& cfg) {
  Mat3 k = Mat3::Identity();
  k(0, 0) = cfg.focal;
  k(1, 1) = cfg.focal;
  k(0, 2) = 0.5 * cfg.image_width;
  k(1, 2) = 0.5 * cfg.image_height;
  std::vector<CameraModel> rig;
  for (int i = 0; i < cfg.n_cameras; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / cfg.n_cameras;
    const Vec3 forward(std::cos(phi), std::sin(phi), 0.0);
    const Vec3 down(0.0, 0.0, -1.0);
    Mat3 r;
    r.col(0) = down.cross(forward);  // right
    r.col(1) = down;
    r.col(2) = forward;
    rig.emplace_back(k, r, cfg.ring_radius * forward, cfg.image_width, cfg.image_height);
  }
  return rig;
}

namespace detail {

inline int sample_class(Rng& rng, const SceneConfig& cfg, const SizeRangeTable& table) {
  std::vector<std::pair<int, double>> weights;
  if (cfg.class_weights.empty()) {
    for (const auto& [id, e] : table.entries()) weights.emplace_back(id, 1.0);
  } else {
    weights.assign(cfg.class_weights.begin(), cfg.class_weights.end());
  }
  double total = 0.0;
  for (const auto& [id, w] : weights) total += w;
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  int last_positive = weights.front().first;
  for (const auto& [id, w] : weights) {
    if (w <= 0.0) continue;
    acc += w;
    last_positive = id;
    if (u < acc) return id;
  }
  return last_positive;
}

// Draw order: w, h, l.
inline void sample_size(Rng& rng, const ClassSizeRange& r, Box3D& box) {
  box.w = rng.uniform(r.w.min, r.w.max);
  box.h = rng.uniform(r.h.min, r.h.max);
  box.l = rng.uniform(r.l.min, r.l.max);
}

inline std::optional<Box2D> visible_projection(const CameraModel& cam, const Box3D& box, int class_id,
                                               double score) {
  const auto rect = project_box3d(cam, box);
  if (!rect) return std::nullopt;
  const Box2D b = box_from_rect(*rect, class_id, score);
  if (!(b.cx >= 0.0 && b.cx < cam.image_width() && b.cy >= 0.0 && b.cy < cam.image_height())) {
    return std::nullopt;
  }
  if (!(b.w > 0.0 && b.h > 0.0)) return std::nullopt;
  return b;
}

}  // namespace detail

/// Deterministic for a fixed config and table. Per object the draws are
/// class, w, h, l, yaw, x, y, z in that order. An object appears in a
/// camera's gt_2d when all of its corners are in front of that camera and
/// the center of its projected rectangle lies inside the image.
inline Scene generate_scene(const SceneConfig& cfg, const SizeRangeTable& table) {
  validate(cfg, table);
  Scene scene;
  scene.cameras = surround_rig(cfg);
  for (int i = 0; i < cfg.n_cameras; ++i) scene.camera_ids.push_back("CAM_" + std::to_string(i));

  Rng rng(cfg.seed);
  for (int k = 0; k < cfg.n_objects; ++k) {
    SceneObject obj;
    obj.class_id = detail::sample_class(rng, cfg, table);
    detail::sample_size(rng, table.at(obj.class_id), obj.box);
    obj.box.yaw = normalize_yaw(rng.uniform(0.0, kTwoPi));
    obj.box.x = rng.uniform(cfg.region_x.min, cfg.region_x.max);
    obj.box.y = rng.uniform(cfg.region_y.min, cfg.region_y.max);
    obj.box.z = rng.uniform(cfg.region_z.min, cfg.region_z.max);
    scene.objects.push_back(obj);
  }

  scene.gt_2d.resize(scene.cameras.size());
  for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
      const SceneObject& obj = scene.objects[k];
      if (auto b = detail::visible_projection(scene.cameras[c], obj.box, obj.class_id, 1.0)) {
        scene.gt_2d[c].push_back({*b, static_cast<int>(k)});
      }
    }
  }
  return scene;
}

/// Noisy copy of scene.gt_2d. For every ground-truth box, in camera then
/// list order: one uniform draw against drop_prob; if kept, four normal
/// draws (dx, dy, width factor, height factor) and one uniform draw against
/// false_positive_rate. A spawned false positive is a random object of a
/// sampled class placed at a random pixel and depth in [5, 60) m, emitted
/// when its projection is visible. False positives follow the kept boxes of
/// their camera.
inline std::vector<std::vector<SceneDetection>> perturb_detections(const Scene& scene, const SceneConfig& cfg,
                                                                   const SizeRangeTable& table,
                                                                   std::uint64_t seed) {
  validate(cfg, table);
  const DetectionNoise& n = cfg.noise;
  Rng rng(seed);
  std::vector<std::vector<SceneDetection>> out(scene.gt_2d.size());
  for (std::size_t c = 0; c < scene.gt_2d.size(); ++c) {
    const CameraModel& cam = scene.cameras[c];
    std::vector<SceneDetection> spawned;
    for (const SceneDetection& det : scene.gt_2d[c]) {
      if (rng.uniform01() < n.drop_prob) continue;
      SceneDetection d = det;
      d.box.cx += n.center_sigma * rng.normal();
      d.box.cy += n.center_sigma * rng.normal();
      d.box.w *= std::max(0.1, 1.0 + n.size_sigma * rng.normal());
      d.box.h *= std::max(0.1, 1.0 + n.size_sigma * rng.normal());
      out[c].push_back(d);

      if (rng.uniform01() < n.false_positive_rate) {
        Box3D fp;
        const int cls = detail::sample_class(rng, cfg, table);
        detail::sample_size(rng, table.at(cls), fp);
        fp.yaw = normalize_yaw(rng.uniform(0.0, kTwoPi));
        const double u = rng.uniform(0.0, cam.image_width());
        const double v = rng.uniform(0.0, cam.image_height());
        const double depth = rng.uniform(5.0, 60.0);
        const double score = rng.uniform01();
        const Vec3 p = cam.unproject(u, v, depth);
        fp.x = p.x();
        fp.y = p.y();
        fp.z = p.z();
        if (auto b = detail::visible_projection(cam, fp, cls, score)) spawned.push_back({*b, -1});
      }
    }
    out[c].insert(out[c].end(), spawned.begin(), spawned.end());
  }
  return out;
}

}  // namespace qaf2d
