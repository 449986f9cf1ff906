#pragma once

// Anchor coverage against ground truth: recall at 3D center-distance
// thresholds plus statistics of the nearest anchor per object.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "qaf2d/anchor_generator.hpp"
#include "qaf2d/scene_simulator.hpp"

namespace qaf2d {

/// A ground-truth object with the camera-frame depth of its center in the
/// camera that observed it (NaN when it was observed by none).
struct EvalTarget {
  int class_id = 0;
  Box3D box;
  double depth = std::numeric_limits<double>::quiet_NaN();
};

inline const std::vector<double>& default_recall_thresholds() {
  static const std::vector<double> t{0.5, 1.0, 2.0, 4.0};
  return t;
}

struct ClassRecall {
  std::size_t considered = 0;
  std::vector<std::size_t> covered;  ///< per threshold
  std::vector<double> recall;        ///< per threshold; 0 when nothing is considered
};

struct RecallReport {
  std::vector<double> thresholds;
  std::size_t total = 0;
  std::size_t considered = 0;
  std::vector<std::size_t> covered;
  std::vector<double> recall;
  std::map<int, ClassRecall> per_class;
  /// Over considered objects that have at least one anchor.
  std::size_t with_anchor = 0;
  std::optional<double> mean_best_distance;
  std::optional<double> median_best_distance;
  std::optional<double> mean_best_yaw_error;
};

/// Absolute yaw difference folded into [0, pi].
inline double yaw_error(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

/// An object is considered when its depth lies in depth_range; it is covered
/// at threshold t when some anchor center lies within t meters of its center.
/// The yaw error of an object is the smallest among its nearest anchors.
inline RecallReport anchor_recall(std::span<const Anchor3D> anchors, std::span<const EvalTarget> gts,
                                  std::span<const double> thresholds, Range depth_range) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw PreconditionError("recall thresholds must be positive");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw PreconditionError("recall thresholds must be strictly ascending");
    }
  }
  const std::size_t nt = thresholds.size();
  RecallReport rep;
  rep.thresholds.assign(thresholds.begin(), thresholds.end());
  rep.total = gts.size();
  rep.covered.assign(nt, 0);

  std::vector<double> best_distances;
  double yaw_sum = 0.0;
  for (const EvalTarget& g : gts) {
    if (std::isnan(g.depth) || !depth_range.contains(g.depth)) continue;
    ++rep.considered;
    ClassRecall& cls = rep.per_class[g.class_id];
    if (cls.covered.empty()) cls.covered.assign(nt, 0);
    ++cls.considered;
    if (anchors.empty()) continue;

    const Vec3 center = g.box.center();
    double best = std::numeric_limits<double>::infinity();
    double best_yaw = 0.0;
    for (const Anchor3D& a : anchors) {
      const double d = (a.box.center() - center).norm();
      const double e = yaw_error(a.box.yaw, g.box.yaw);
      if (d < best) {
        best = d;
        best_yaw = e;
      } else if (d == best) {
        best_yaw = std::min(best_yaw, e);
      }
    }
    best_distances.push_back(best);
    yaw_sum += best_yaw;
    for (std::size_t t = 0; t < nt; ++t) {
      if (best <= thresholds[t]) {
        ++rep.covered[t];
        ++cls.covered[t];
      }
    }
  }

  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / b; };
  for (std::size_t t = 0; t < nt; ++t) rep.recall.push_back(ratio(rep.covered[t], rep.considered));
  for (auto& [id, cls] : rep.per_class) {
    for (std::size_t t = 0; t < nt; ++t) cls.recall.push_back(ratio(cls.covered[t], cls.considered));
  }
  rep.with_anchor = best_distances.size();
  if (!best_distances.empty()) {
    double sum = 0.0;
    for (double d : best_distances) sum += d;
    rep.mean_best_distance = sum / best_distances.size();
    std::sort(best_distances.begin(), best_distances.end());
    const std::size_t m = best_distances.size();
    rep.median_best_distance =
        m % 2 == 1 ? best_distances[m / 2] : 0.5 * (best_distances[m / 2 - 1] + best_distances[m / 2]);
    rep.mean_best_yaw_error = yaw_sum / m;
  }
  return rep;
}

/// Evaluation targets for a scene. An object's depth is the smallest
/// camera-frame depth of its center among the cameras whose gt_2d lists it.
inline std::vector<EvalTarget> scene_targets(const Scene& scene) {
  std::vector<EvalTarget> out;
  out.reserve(scene.objects.size());
  for (const SceneObject& o : scene.objects) out.push_back({o.class_id, o.box});
  for (std::size_t c = 0; c < scene.gt_2d.size(); ++c) {
    for (const SceneDetection& d : scene.gt_2d[c]) {
      if (d.object < 0) continue;
      EvalTarget& t = out[static_cast<std::size_t>(d.object)];
      const double z = scene.cameras[c].to_camera(t.box.center()).z();
      if (std::isnan(t.depth) || z < t.depth) t.depth = z;
    }
  }
  return out;
}

struct SurvivalRate {
  std::uint64_t initial_count = 0;
  std::uint64_t surviving_count = 0;
  double rate = 0.0;
};

/// Fraction of the unfiltered candidate product that passes the IoU filter.
inline SurvivalRate survival_rate(const Box2D& b, const CameraModel& cam, const SizeRangeTable& table,
                                  const AnchorGenConfig& cfg, unsigned threads = 1) {
  SurvivalRate s;
  s.initial_count = candidate_grid(b, table, cfg).initial_count();
  s.surviving_count = count_anchors(b, cam, table, cfg, threads);
  s.rate = s.initial_count == 0 ? 0.0 : static_cast<double>(s.surviving_count) / s.initial_count;
  return s;
}

}  // namespace qaf2d
