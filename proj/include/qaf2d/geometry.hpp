#pragma once

// Camera and box geometry shared by every other module.
//
// Conventions:
//  * World frame is right-handed with +z pointing up (against gravity).
//  * Camera frame is x right, y down, z forward (optical axis).
//  * CameraModel::rotation maps camera-frame vectors into the world frame and
//    CameraModel::translation is the camera origin expressed in the world.
//  * Box yaw rotates about world +z; yaw = 0 points the box length along +x.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "qaf2d/errors.hpp"

namespace qaf2d {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Corners closer to the image plane than this (meters, camera frame) make
/// a projected 3D box invalid.
inline constexpr double kDepthEpsilon = 1e-3;

/// Wraps an angle into [0, 2*pi).
inline double normalize_yaw(double yaw) {
  double r = std::fmod(yaw, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a value just below zero can round up to exactly 2*pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Pinhole camera with a rigid camera-to-world transform.
class CameraModel {
 public:
  CameraModel() = default;

  /// Throws PreconditionError when the intrinsics are not upper-triangular
  /// with positive diagonal and K(2,2) = 1, when the rotation is not
  /// orthonormal, or when the image size is not positive.
  CameraModel(const Mat3& intrinsics, const Mat3& rotation, const Vec3& translation,
              int image_width, int image_height)
      : intrinsics_(intrinsics),
        rotation_(rotation),
        translation_(translation),
        width_(image_width),
        height_(image_height) {
    const Mat3& k = intrinsics_;
    if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 || !(k(0, 0) > 0.0) ||
        !(k(1, 1) > 0.0) || k(2, 2) != 1.0) {
      throw PreconditionError(
          "camera intrinsics must be upper-triangular with positive focal lengths and K[2][2] = 1");
    }
    const Mat3 gram = rotation_.transpose() * rotation_;
    if (!gram.allFinite() || ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() >= 1e-9)) {
      throw PreconditionError("camera rotation is not orthonormal");
    }
    if (!translation_.allFinite()) throw PreconditionError("camera translation is not finite");
    if (width_ <= 0 || height_ <= 0) throw PreconditionError("camera image size must be positive");
    intrinsics_inv_ = intrinsics_.inverse();
    world_to_camera_ = rotation_.transpose();
  }

  const Mat3& intrinsics() const { return intrinsics_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }

  /// World point in the camera frame.
  Vec3 to_camera(const Vec3& world) const { return world_to_camera_ * (world - translation_); }

  /// Pixel of a camera-frame point. Depth is the z coordinate and may be
  /// non-positive for points behind the camera.
  Projection project_camera_point(const Vec3& cam) const {
    const Vec3 q = intrinsics_ * cam;
    return {q.x() / q.z(), q.y() / q.z(), cam.z()};
  }

  Projection project(const Vec3& world) const { return project_camera_point(to_camera(world)); }

  /// Lifts pixel (u, v) at depth d along the optical axis to the world frame.
  Vec3 unproject(double u, double v, double depth) const {
    if (!(depth > 0.0)) throw PreconditionError("unproject requires positive depth");
    const Vec3 ray = intrinsics_inv_ * Vec3(u * depth, v * depth, depth);
    return rotation_ * ray + translation_;
  }

 private:
  Mat3 intrinsics_ = Mat3::Identity();
  Mat3 intrinsics_inv_ = Mat3::Identity();
  Mat3 rotation_ = Mat3::Identity();
  Mat3 world_to_camera_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
  int width_ = 1;
  int height_ = 1;
};

/// Corner-format axis-aligned rectangle in pixels.
struct Rect2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  friend bool operator==(const Rect2D&, const Rect2D&) = default;
};

/// Center-format 2D detection with its class label.
struct Box2D {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  int class_id = 0;
  double score = 1.0;

  Rect2D rect() const { return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h}; }

  friend bool operator==(const Box2D&, const Box2D&) = default;
};

inline void validate(const Box2D& b) {
  if (!(b.w > 0.0) || !(b.h > 0.0)) throw PreconditionError("2D box must have positive size");
  if (!(b.score >= 0.0 && b.score <= 1.0)) throw PreconditionError("2D box score must lie in [0, 1]");
}

inline Box2D box_from_rect(const Rect2D& r, int class_id, double score = 1.0) {
  return {0.5 * (r.x_min + r.x_max), 0.5 * (r.y_min + r.y_max), r.width(), r.height(), class_id,
          score};
}

/// Oriented 3D box: world-frame center, width/height/length in meters and
/// yaw about the vertical axis in [0, 2*pi).
struct Box3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;
  double h = 1.0;
  double l = 1.0;
  double yaw = 0.0;

  Vec3 center() const { return {x, y, z}; }

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

inline void validate(const Box3D& b) {
  if (!(b.w > 0.0 && b.h > 0.0 && b.l > 0.0)) {
    throw PreconditionError("3D box dimensions must be positive");
  }
  if (!(b.yaw >= 0.0 && b.yaw < kTwoPi)) throw PreconditionError("3D box yaw must lie in [0, 2*pi)");
}

/// The 8 corners. Index bit 2 selects the length sign, bit 1 the width sign
/// and bit 0 the height sign (set = positive half).
inline std::array<Vec3, 8> box3d_corners(const Box3D& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const Vec3 heading(c, s, 0.0);
  const Vec3 lateral(-s, c, 0.0);
  const Vec3 up(0.0, 0.0, 1.0);
  const Vec3 center = b.center();
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const double sl = (i & 4) ? 0.5 : -0.5;
    const double sw = (i & 2) ? 0.5 : -0.5;
    const double sh = (i & 1) ? 0.5 : -0.5;
    out[i] = center + (sl * b.l) * heading + (sw * b.w) * lateral + (sh * b.h) * up;
  }
  return out;
}

/// Axis-aligned image rectangle of the projected corners, or nullopt when any
/// corner lies within kDepthEpsilon of the image plane or behind it.
inline std::optional<Rect2D> project_box3d(const CameraModel& cam, const Box3D& b) {
  const auto corners = box3d_corners(b);
  Rect2D r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec3& corner : corners) {
    const Projection p = cam.project(corner);
    if (!(p.depth > kDepthEpsilon)) return std::nullopt;
    r.x_min = std::min(r.x_min, p.u);
    r.y_min = std::min(r.y_min, p.v);
    r.x_max = std::max(r.x_max, p.u);
    r.y_max = std::max(r.y_max, p.v);
  }
  return r;
}

inline double intersection_area(const Rect2D& a, const Rect2D& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

/// Intersection over union; 0 when the union is empty.
inline double iou(const Rect2D& a, const Rect2D& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace qaf2d
