#pragma once

#include <string>

#include "qaf2d/qaf2d.hpp"

namespace qaf2d::test {

/// Identity extrinsics, focal length f, principal point (cx, cy).
inline CameraModel pinhole(double f = 1000.0, double cx = 0.0, double cy = 0.0, Mat3 r = Mat3::Identity(),
                           Vec3 t = Vec3::Zero()) {
  Mat3 k = Mat3::Identity();
  k(0, 0) = f;
  k(1, 1) = f;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return CameraModel(k, r, t, 1600, 900);
}

/// Level camera at the origin looking along world +x, principal point at
/// the image center.
inline CameraModel forward_camera(double f = 1266.0) {
  Mat3 r;
  r.col(0) = Vec3(0, -1, 0);
  r.col(1) = Vec3(0, 0, -1);
  r.col(2) = Vec3(1, 0, 0);
  return pinhole(f, 800.0, 450.0, r);
}

inline std::string data_path(const std::string& name) { return std::string(QAF2D_TEST_DATA) + "/" + name; }

}  // namespace qaf2d::test
