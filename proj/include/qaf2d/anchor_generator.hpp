#pragma once

// Lifting a 2D detection into 3D query anchors.
//
// The candidate set for a box is the Cartesian product
//   lifted centers (2D center grid x depth grid) x class size grid x yaw grid
// and an anchor survives when its projected corner rectangle overlaps the
// source box with IoU strictly above the threshold.
//
// The product is far too large to enumerate for real configurations (a car
// box has tens of millions of candidates per 2D center), so each (center,
// depth) cell runs a branch-and-bound over the 3D size-index grid, one yaw at
// a time. With center and yaw fixed, a box with larger w, h and l contains a
// smaller one, so for a block of sizes the projected rectangles satisfy
//     P(smallest)  subset-of  P  subset-of  P(largest)
// and
//     IoU(P, B) <= area(P(largest) & B) / area(P(smallest) | B).
// A block is dropped once that bound cannot exceed the threshold. Leaves run
// the exact projection test, so the output equals the naive
// product-then-filter result.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "qaf2d/anchor_stats.hpp"
#include "qaf2d/errors.hpp"
#include "qaf2d/geometry.hpp"
#include "qaf2d/parallel.hpp"

namespace qaf2d {

/// Candidate-grid parameters. Defaults are the published nuScenes settings.
struct AnchorGenConfig {
  double step_x = 10.0;  ///< 2D center step along u, pixels
  double step_y = 10.0;  ///< 2D center step along v, pixels
  double depth_min = 3.0;
  double depth_max = 103.0;
  double depth_step = 1.5;
  double step_w = 0.05;
  double step_h = 0.05;
  double step_l = 0.05;
  int n_theta = 12;  ///< yaw grid has 2 * n_theta entries, spacing pi / n_theta
  double iou_threshold = 0.99;

  /// Throws ConfigError naming the offending field.
  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string(name) + " must be positive and finite");
      }
    };
    positive(step_x, "step_x");
    positive(step_y, "step_y");
    positive(depth_min, "depth_min");
    positive(depth_step, "depth_step");
    positive(step_w, "step_w");
    positive(step_h, "step_h");
    positive(step_l, "step_l");
    if (!(depth_min <= depth_max) || !std::isfinite(depth_max)) {
      throw ConfigError("depth_min must not exceed depth_max");
    }
    if (n_theta < 1) throw ConfigError("n_theta must be at least 1");
    // Thresholds at or above 1 are accepted and filter out everything.
    if (!(iou_threshold >= 0.0) || !std::isfinite(iou_threshold)) {
      throw ConfigError("iou_threshold must be non-negative and finite");
    }
  }

  friend bool operator==(const AnchorGenConfig&, const AnchorGenConfig&) = default;
};

/// Count of {lo + step * i : i >= 0, value <= hi}. The ratio is nudged up by
/// a relative 1e-9 so that endpoints such as 1.4 + 28 * 0.05 = 2.8 are not
/// lost to rounding.
inline std::size_t grid_count(double lo, double hi, double step) {
  if (hi < lo) return 0;
  const double ratio = (hi - lo) / step;
  return static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-9) + 1e-9)) + 1;
}

inline std::vector<double> arithmetic_grid(double lo, double hi, double step) {
  const std::size_t n = grid_count(lo, hi, step);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  return out;
}

/// Row-major 2D center grid inside a detection box.
struct CenterGrid {
  std::vector<double> xs;
  std::vector<double> ys;

  std::size_t size() const { return xs.size() * ys.size(); }
  /// idx = iy * |xs| + ix
  std::array<double, 2> at(std::size_t idx) const {
    return {xs[idx % xs.size()], ys[idx / xs.size()]};
  }
};

inline CenterGrid center_grid(const Box2D& b, const AnchorGenConfig& cfg) {
  const double x_lo = std::floor(b.cx - 0.5 * b.w);
  const double x_hi = std::floor(b.cx + 0.5 * b.w);
  const double y_lo = std::floor(b.cy - 0.5 * b.h);
  const double y_hi = std::floor(b.cy + 0.5 * b.h);
  return {arithmetic_grid(x_lo, x_hi, cfg.step_x), arithmetic_grid(y_lo, y_hi, cfg.step_y)};
}

/// Sampled projected centers, y outer and x inner.
inline std::vector<std::array<double, 2>> sample_centers(const Box2D& b, const AnchorGenConfig& cfg) {
  validate(b);
  const CenterGrid g = center_grid(b, cfg);
  std::vector<std::array<double, 2>> out;
  out.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back(g.at(i));
  return out;
}

inline std::vector<double> depth_candidates(const AnchorGenConfig& cfg) {
  cfg.validate();
  return arithmetic_grid(cfg.depth_min, cfg.depth_max, cfg.depth_step);
}

/// Per-axis size grids of one class. size_idx = (iw * |hs| + ih) * |ls| + il.
struct SizeGrid {
  std::vector<double> ws;
  std::vector<double> hs;
  std::vector<double> ls;

  std::size_t size() const { return ws.size() * hs.size() * ls.size(); }
  std::size_t index(std::size_t iw, std::size_t ih, std::size_t il) const {
    return (iw * hs.size() + ih) * ls.size() + il;
  }
  std::array<double, 3> at(std::size_t idx) const {
    const std::size_t il = idx % ls.size();
    const std::size_t ih = (idx / ls.size()) % hs.size();
    const std::size_t iw = idx / (ls.size() * hs.size());
    return {ws[iw], hs[ih], ls[il]};
  }
};

inline SizeGrid size_grid(int class_id, const SizeRangeTable& table, const AnchorGenConfig& cfg) {
  const ClassSizeRange& r = table.at(class_id);
  return {arithmetic_grid(r.w.min, r.w.max, cfg.step_w), arithmetic_grid(r.h.min, r.h.max, cfg.step_h),
          arithmetic_grid(r.l.min, r.l.max, cfg.step_l)};
}

/// (w, h, l) triples, w outer and l inner.
inline std::vector<std::array<double, 3>> size_candidates(int class_id, const SizeRangeTable& table,
                                                          const AnchorGenConfig& cfg) {
  cfg.validate();
  const SizeGrid g = size_grid(class_id, table, cfg);
  std::vector<std::array<double, 3>> out;
  out.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back(g.at(i));
  return out;
}

/// n * pi / n_theta for n = 0 .. 2 * n_theta - 1.
inline std::vector<double> yaw_candidates(const AnchorGenConfig& cfg) {
  if (cfg.n_theta < 1) throw ConfigError("n_theta must be at least 1");
  std::vector<double> out(2 * static_cast<std::size_t>(cfg.n_theta));
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = std::numbers::pi * static_cast<double>(n) / static_cast<double>(cfg.n_theta);
  }
  return out;
}

/// Unprojects every (center, depth) pair; centers outer, depths inner.
inline std::vector<Vec3> lift_centers(std::span<const std::array<double, 2>> centers,
                                      std::span<const double> depths, const CameraModel& cam) {
  std::vector<Vec3> out;
  out.reserve(centers.size() * depths.size());
  for (const auto& c : centers) {
    for (double d : depths) out.push_back(cam.unproject(c[0], c[1], d));
  }
  return out;
}

/// A surviving candidate plus the grid indices it was built from.
struct Anchor3D {
  Box3D box;
  int source_box_index = 0;
  int center_idx = 0;
  int depth_idx = 0;
  int size_idx = 0;
  int yaw_idx = 0;

  friend bool operator==(const Anchor3D&, const Anchor3D&) = default;
};

/// Decoder query form (x, y, z, w, l, h, sin yaw, cos yaw).
struct QueryAnchor {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 0.0;
  double l = 0.0;
  double h = 0.0;
  double sin_yaw = 0.0;
  double cos_yaw = 1.0;

  std::array<double, 8> values() const { return {x, y, z, w, l, h, sin_yaw, cos_yaw}; }

  friend bool operator==(const QueryAnchor&, const QueryAnchor&) = default;
};

inline QueryAnchor to_query(const Box3D& b) {
  return {b.x, b.y, b.z, b.w, b.l, b.h, std::sin(b.yaw), std::cos(b.yaw)};
}

inline std::vector<QueryAnchor> anchors_to_queries(std::span<const Anchor3D> anchors) {
  std::vector<QueryAnchor> out;
  out.reserve(anchors.size());
  for (const Anchor3D& a : anchors) out.push_back(to_query(a.box));
  return out;
}

/// All grids for one detection box.
struct CandidateGrid {
  CenterGrid centers;
  std::vector<double> depths;
  SizeGrid sizes;
  std::vector<double> yaws;

  std::size_t cell_count() const { return centers.size() * depths.size(); }
  /// Size of the unfiltered Cartesian product.
  std::uint64_t initial_count() const {
    return static_cast<std::uint64_t>(centers.size()) * depths.size() * sizes.size() * yaws.size();
  }
};

inline CandidateGrid candidate_grid(const Box2D& b, const SizeRangeTable& table,
                                    const AnchorGenConfig& cfg) {
  cfg.validate();
  validate(b);
  return {center_grid(b, cfg), arithmetic_grid(cfg.depth_min, cfg.depth_max, cfg.depth_step),
          size_grid(b.class_id, table, cfg), yaw_candidates(cfg)};
}

namespace detail {

// Slack absorbing rounding differences between rectangles that are nested in
// exact arithmetic.
inline double pad(double v) { return 1e-7 + 1e-9 * std::abs(v); }

/// Branch-and-bound over the size grid for one (center, depth) cell.
class CellSearch {
 public:
  CellSearch(const CameraModel& cam, const Vec3& center_world, const Rect2D& target, double threshold,
             const SizeGrid& sizes, std::span<const double> yaws)
      : cam_(cam),
        center_world_(center_world),
        target_(target),
        target_area_(target.area()),
        threshold_(threshold),
        sizes_(sizes),
        yaws_(yaws) {}

  /// Calls visit(size_idx, yaw_idx, box) for surviving candidates, yaw by
  /// yaw; stops early when visit returns false. Returns false iff stopped.
  template <class Visit>
  bool run(Visit&& visit) const {
    if (threshold_ >= 1.0) return true;
    const Node root{0, sizes_.ws.size() - 1, 0, sizes_.hs.size() - 1, 0, sizes_.ls.size() - 1};
    for (std::size_t y = 0; y < yaws_.size(); ++y) {
      if (!descend(root, y, visit)) return false;
    }
    return true;
  }

 private:
  struct Node {
    std::size_t w0, w1, h0, h1, l0, l1;  // inclusive index ranges
  };

  Box3D box(std::size_t iw, std::size_t ih, std::size_t il, std::size_t y) const {
    return {center_world_.x(), center_world_.y(), center_world_.z(),
            sizes_.ws[iw],     sizes_.hs[ih],     sizes_.ls[il],     yaws_[y]};
  }

  // At a fixed yaw, boxes sharing a center are nested by size, so the
  // smallest and largest box of a node bracket every projected rectangle:
  //   P_min <= P <= P_max  and  IoU(P, B) <= |P_max & B| / |P_min | B|.
  bool hopeless(const Node& n, std::size_t y) const {
    const auto inner = project_box3d(cam_, box(n.w0, n.h0, n.l0, y));
    // Every larger box contains the smallest one, so it inherits the corner
    // that sits at or behind the image plane.
    if (!inner) return true;
    Rect2D in = *inner;
    in.x_min += pad(in.x_min);
    in.y_min += pad(in.y_min);
    in.x_max -= pad(in.x_max);
    in.y_max -= pad(in.y_max);
    double union_lower = target_area_;
    if (in.x_min < in.x_max && in.y_min < in.y_max) {
      union_lower += in.area() - intersection_area(in, target_);
    }
    double overlap_upper = target_area_;
    if (const auto outer = project_box3d(cam_, box(n.w1, n.h1, n.l1, y))) {
      Rect2D out = *outer;
      out.x_min -= pad(out.x_min);
      out.y_min -= pad(out.y_min);
      out.x_max += pad(out.x_max);
      out.y_max += pad(out.y_max);
      overlap_upper = intersection_area(out, target_);
    }
    return overlap_upper <= threshold_ * union_lower;
  }

  template <class Visit>
  bool descend(const Node& n, std::size_t y, Visit& visit) const {
    const std::size_t nw = n.w1 - n.w0 + 1, nh = n.h1 - n.h0 + 1, nl = n.l1 - n.l0 + 1;
    if (nw == 1 && nh == 1 && nl == 1) {
      // Exact test, identical to the unpruned filter.
      const Box3D b = box(n.w0, n.h0, n.l0, y);
      const auto rect = project_box3d(cam_, b);
      if (!rect || !(iou(*rect, target_) > threshold_)) return true;
      return visit(static_cast<int>(sizes_.index(n.w0, n.h0, n.l0)), static_cast<int>(y), b);
    }
    if (hopeless(n, y)) return true;
    Node lo = n, hi = n;
    if (nw >= nh && nw >= nl) {
      lo.w1 = n.w0 + nw / 2 - 1;
      hi.w0 = lo.w1 + 1;
    } else if (nh >= nl) {
      lo.h1 = n.h0 + nh / 2 - 1;
      hi.h0 = lo.h1 + 1;
    } else {
      lo.l1 = n.l0 + nl / 2 - 1;
      hi.l0 = lo.l1 + 1;
    }
    return descend(lo, y, visit) && descend(hi, y, visit);
  }

  const CameraModel& cam_;
  Vec3 center_world_;
  Rect2D target_;
  double target_area_;
  double threshold_;
  const SizeGrid& sizes_;
  std::span<const double> yaws_;
};


inline bool anchor_order(const Anchor3D& a, const Anchor3D& b) {
  if (a.size_idx != b.size_idx) return a.size_idx < b.size_idx;
  return a.yaw_idx < b.yaw_idx;
}

}  // namespace detail

/// Surviving anchors for one detection, ordered by (center_idx, depth_idx,
/// size_idx, yaw_idx). source_box_index is left at 0. `threads` = 0 uses
/// every hardware thread; the output does not depend on it.
inline std::vector<Anchor3D> generate_anchors(const Box2D& b, const CameraModel& cam,
                                              const SizeRangeTable& table, const AnchorGenConfig& cfg,
                                              unsigned threads = 1) {
  const CandidateGrid grid = candidate_grid(b, table, cfg);
  const Rect2D target = b.rect();
  const std::size_t nd = grid.depths.size();
  std::vector<std::vector<Anchor3D>> cells(grid.cell_count());
  parallel_for(cells.size(), threads, [&](std::size_t cell) {
    const std::size_t ci = cell / nd, di = cell % nd;
    const auto c = grid.centers.at(ci);
    const Vec3 p = cam.unproject(c[0], c[1], grid.depths[di]);
    detail::CellSearch search(cam, p, target, cfg.iou_threshold, grid.sizes, grid.yaws);
    auto& out = cells[cell];
    search.run([&](int size_idx, int yaw_idx, const Box3D& box) {
      out.push_back({box, 0, static_cast<int>(ci), static_cast<int>(di), size_idx, yaw_idx});
      return true;
    });
    std::sort(out.begin(), out.end(), detail::anchor_order);
  });
  std::size_t total = 0;
  for (const auto& c : cells) total += c.size();
  std::vector<Anchor3D> result;
  result.reserve(total);
  for (auto& c : cells) result.insert(result.end(), c.begin(), c.end());
  return result;
}

/// Number of surviving anchors without materializing them.
inline std::uint64_t count_anchors(const Box2D& b, const CameraModel& cam, const SizeRangeTable& table,
                                   const AnchorGenConfig& cfg, unsigned threads = 1) {
  const CandidateGrid grid = candidate_grid(b, table, cfg);
  const Rect2D target = b.rect();
  const std::size_t nd = grid.depths.size();
  std::vector<std::uint64_t> counts(grid.cell_count(), 0);
  parallel_for(counts.size(), threads, [&](std::size_t cell) {
    const auto c = grid.centers.at(cell / nd);
    const Vec3 p = cam.unproject(c[0], c[1], grid.depths[cell % nd]);
    detail::CellSearch search(cam, p, target, cfg.iou_threshold, grid.sizes, grid.yaws);
    search.run([&](int, int, const Box3D&) {
      ++counts[cell];
      return true;
    });
  });
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

/// One lifted (center, depth) grid point that has at least one surviving
/// anchor; `example` is the first survivor found there.
struct OccupiedCell {
  int center_idx = 0;
  int depth_idx = 0;
  Anchor3D example;
};

/// Cells with at least one survivor, in (center_idx, depth_idx) order. Much
/// cheaper than generate_anchors when only anchor centers matter.
inline std::vector<OccupiedCell> occupied_cells(const Box2D& b, const CameraModel& cam,
                                                const SizeRangeTable& table, const AnchorGenConfig& cfg,
                                                unsigned threads = 1) {
  const CandidateGrid grid = candidate_grid(b, table, cfg);
  const Rect2D target = b.rect();
  const std::size_t nd = grid.depths.size();
  std::vector<std::optional<Anchor3D>> hits(grid.cell_count());
  parallel_for(hits.size(), threads, [&](std::size_t cell) {
    const std::size_t ci = cell / nd, di = cell % nd;
    const auto c = grid.centers.at(ci);
    const Vec3 p = cam.unproject(c[0], c[1], grid.depths[di]);
    detail::CellSearch search(cam, p, target, cfg.iou_threshold, grid.sizes, grid.yaws);
    search.run([&](int size_idx, int yaw_idx, const Box3D& box) {
      hits[cell] = Anchor3D{box, 0, static_cast<int>(ci), static_cast<int>(di), size_idx, yaw_idx};
      return false;
    });
  });
  std::vector<OccupiedCell> out;
  for (std::size_t cell = 0; cell < hits.size(); ++cell) {
    if (hits[cell]) out.push_back({hits[cell]->center_idx, hits[cell]->depth_idx, *hits[cell]});
  }
  return out;
}

/// Runs generate_anchors for every detection of a frame and concatenates the
/// results, tagging each anchor with its detection's index. cameras[i] is the
/// camera that observed boxes[i].
inline std::vector<Anchor3D> generate_for_frame(std::span<const Box2D> boxes,
                                                std::span<const CameraModel> cameras,
                                                const SizeRangeTable& table, const AnchorGenConfig& cfg,
                                                unsigned threads = 1) {
  if (boxes.size() != cameras.size()) {
    throw PreconditionError("generate_for_frame: " + std::to_string(boxes.size()) + " boxes but " +
                            std::to_string(cameras.size()) + " cameras");
  }
  cfg.validate();
  std::vector<Anchor3D> out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    auto part = generate_anchors(boxes[i], cameras[i], table, cfg, threads);
    for (Anchor3D& a : part) a.source_box_index = static_cast<int>(i);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace qaf2d
