#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "qaf2d/io.hpp"
#include "qaf2d/qaf2d.hpp"

namespace qaf2d {
namespace {

SceneConfig cars(int n, std::uint64_t seed = 1) {
  SceneConfig cfg;
  cfg.n_objects = n;
  cfg.seed = seed;
  cfg.class_weights = {{kCar, 1.0}};
  return cfg;
}

TEST(GenerateScene, SeedDeterminesBytes) {
  const auto table = default_table();
  const auto reg = ClassRegistry::nuscenes();
  SceneConfig cfg;
  cfg.seed = 99;
  const Scene a = generate_scene(cfg, table);
  const Scene b = generate_scene(cfg, table);
  EXPECT_EQ(io::scene_to_json(a, reg).dump(), io::scene_to_json(b, reg).dump());
  cfg.seed = 100;
  EXPECT_NE(io::scene_to_json(generate_scene(cfg, table), reg).dump(), io::scene_to_json(a, reg).dump());
}

TEST(GenerateScene, NoObjects) {
  const Scene s = generate_scene(cars(0), default_table());
  EXPECT_TRUE(s.objects.empty());
  ASSERT_EQ(s.gt_2d.size(), 6u);
  for (const auto& per_cam : s.gt_2d) EXPECT_TRUE(per_cam.empty());
  EXPECT_EQ(s.camera_ids.front(), "CAM_0");
}

TEST(GenerateScene, BoxesReprojectExactly) {
  const auto table = default_table();
  const Scene s = generate_scene(cars(20, 5), table);
  std::size_t emitted = 0;
  for (std::size_t c = 0; c < s.gt_2d.size(); ++c) {
    for (const SceneDetection& d : s.gt_2d[c]) {
      ++emitted;
      const Box3D& box = s.objects[static_cast<std::size_t>(d.object)].box;
      const auto r = project_box3d(s.cameras[c], box);
      ASSERT_TRUE(r);
      EXPECT_EQ(box_from_rect(*r, kCar), d.box);
      EXPECT_NEAR(iou(*r, d.box.rect()), 1.0, 1e-12);
    }
  }
  EXPECT_GT(emitted, 0u);
}

TEST(GenerateScene, SizesWithinClassRanges) {
  const auto table = default_table();
  SceneConfig cfg;
  cfg.n_objects = 300;
  const Scene s = generate_scene(cfg, table);
  std::set<int> seen;
  for (const auto& o : s.objects) {
    const auto& r = table.at(o.class_id);
    EXPECT_TRUE(r.w.contains(o.box.w) && r.h.contains(o.box.h) && r.l.contains(o.box.l));
    EXPECT_NO_THROW(validate(o.box));
    seen.insert(o.class_id);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(GenerateScene, ZeroWeightClassNeverSampled) {
  SceneConfig cfg;
  cfg.n_objects = 100;
  cfg.class_weights = {{kCar, 0.0}, {kBus, 1.0}};
  for (const auto& o : generate_scene(cfg, default_table()).objects) EXPECT_EQ(o.class_id, kBus);
}

TEST(GenerateScene, ConfigErrors) {
  const auto table = default_table();
  SceneConfig cfg;
  cfg.region_x = {5, -5};
  EXPECT_THROW(generate_scene(cfg, table), ConfigError);
  cfg = {};
  cfg.class_weights = {{kCar, 0.0}};
  EXPECT_THROW(generate_scene(cfg, table), ConfigError);
  cfg = {};
  cfg.class_weights = {{77, 1.0}};
  EXPECT_THROW(generate_scene(cfg, table), UnknownClassError);
  cfg = {};
  cfg.noise.drop_prob = 1.5;
  EXPECT_THROW(generate_scene(cfg, table), ConfigError);
  cfg = {};
  cfg.n_cameras = 0;
  EXPECT_THROW(generate_scene(cfg, table), ConfigError);
}

TEST(SurroundRig, CamerasAreValidAndSpread) {
  SceneConfig cfg;
  cfg.ring_radius = 0.5;
  const auto rig = surround_rig(cfg);
  ASSERT_EQ(rig.size(), 6u);
  for (std::size_t i = 0; i < rig.size(); ++i) {
    const double phi = 2 * std::numbers::pi * static_cast<double>(i) / 6;
    const Vec3 ahead(10 * std::cos(phi), 10 * std::sin(phi), 0);
    const Projection p = rig[i].project(ahead);
    EXPECT_NEAR(p.u, 800, 1e-9);
    EXPECT_NEAR(p.v, 450, 1e-9);
    EXPECT_NEAR(p.depth, 9.5, 1e-12);
    // World up maps to image up (smaller v).
    EXPECT_LT(rig[i].project(ahead + Vec3(0, 0, 1)).v, 450);
  }
}

TEST(PerturbDetections, ZeroNoiseIsIdentity) {
  const auto table = default_table();
  const SceneConfig cfg = cars(20, 3);
  const Scene s = generate_scene(cfg, table);
  EXPECT_EQ(perturb_detections(s, cfg, table, 11), s.gt_2d);
}

TEST(PerturbDetections, DropEverything) {
  const auto table = default_table();
  SceneConfig cfg = cars(20, 3);
  cfg.noise.drop_prob = 1.0;
  const Scene s = generate_scene(cfg, table);
  for (const auto& per_cam : perturb_detections(s, cfg, table, 11)) EXPECT_TRUE(per_cam.empty());
}

TEST(PerturbDetections, FalsePositivesAreFlagged) {
  const auto table = default_table();
  SceneConfig cfg = cars(30, 3);
  cfg.noise.false_positive_rate = 1.0;
  const Scene s = generate_scene(cfg, table);
  const auto out = perturb_detections(s, cfg, table, 11);
  std::size_t fps = 0;
  for (std::size_t c = 0; c < out.size(); ++c) {
    const std::size_t kept = s.gt_2d[c].size();
    for (std::size_t k = 0; k < out[c].size(); ++k) {
      if (k < kept) {
        EXPECT_EQ(out[c][k], s.gt_2d[c][k]);
      } else {
        EXPECT_EQ(out[c][k].object, -1);
        ++fps;
      }
    }
  }
  EXPECT_GT(fps, 0u);
}

TEST(PerturbDetections, CenterNoiseMatchesRayleighMean) {
  // Per-axis sigma gives a 2D offset whose magnitude has mean sigma*sqrt(pi/2).
  const auto table = default_table();
  SceneConfig cfg = cars(2500, 12);
  cfg.noise.center_sigma = 2.0;
  const Scene s = generate_scene(cfg, table);
  const auto out = perturb_detections(s, cfg, table, 13);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < out.size(); ++c) {
    for (std::size_t k = 0; k < out[c].size(); ++k) {
      sum += std::hypot(out[c][k].box.cx - s.gt_2d[c][k].box.cx, out[c][k].box.cy - s.gt_2d[c][k].box.cy);
      ++n;
    }
  }
  ASSERT_GE(n, 1000u);
  const double expect = 2.0 * std::sqrt(std::numbers::pi / 2);
  EXPECT_NEAR(sum / n, expect, 0.2 * expect);
  EXPECT_NEAR(sum / n, expect, 0.05 * expect);
}

TEST(Rng, FixedStreamAndRanges) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform01();
    EXPECT_EQ(u, b.uniform01());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  // mt19937_64 seeded with 42: the first output is fixed by the standard.
  std::mt19937_64 ref(42);
  Rng c(42);
  EXPECT_EQ(c.uniform01(), static_cast<double>(ref() >> 11) * 0x1.0p-53);
  double s = 0, s2 = 0;
  Rng d(7);
  for (int i = 0; i < 20000; ++i) {
    const double z = d.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / 20000, 0.0, 0.03);
  EXPECT_NEAR(s2 / 20000, 1.0, 0.04);
}

}  // namespace
}  // namespace qaf2d
