#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "qaf2d/io.hpp"
#include "qaf2d/qaf2d.hpp"

namespace qaf2d {
namespace {

AnnotationRecord rec(int cls, double w, double h, double l) { return {cls, {0, 0, 0, w, h, l, 0}}; }

TEST(ComputeSizeRanges, MinMaxPerAxis) {
  const auto reg = ClassRegistry::nuscenes();
  const std::vector<AnnotationRecord> rs{rec(kCar, 1.8, 1.5, 4.2), rec(kCar, 2.0, 1.6, 4.5)};
  const SizeRangeTable t = compute_size_ranges(rs, reg);
  ASSERT_EQ(t.size(), 1u);
  const ClassSizeRange& car = t.at(kCar);
  EXPECT_EQ(car.name, "car");
  EXPECT_EQ(car.w, (Range{1.8, 2.0}));
  EXPECT_EQ(car.h, (Range{1.5, 1.6}));
  EXPECT_EQ(car.l, (Range{4.2, 4.5}));
}

TEST(ComputeSizeRanges, SingleRecordCollapses) {
  const auto reg = ClassRegistry::nuscenes();
  const std::vector<AnnotationRecord> rs{rec(kBus, 3, 4, 11)};
  const auto t = compute_size_ranges(rs, reg);
  EXPECT_EQ(t.at(kBus).w, (Range{3, 3}));
  EXPECT_EQ(t.at(kBus).l, (Range{11, 11}));
}

TEST(ComputeSizeRanges, TwoClassesTwoPointRanges) {
  const auto reg = ClassRegistry::nuscenes();
  const std::vector<AnnotationRecord> rs{rec(kCar, 1.8, 1.5, 4.2), rec(kPedestrian, 0.6, 1.7, 0.7)};
  const auto t = compute_size_ranges(rs, reg);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.at(kPedestrian).h, (Range{1.7, 1.7}));
  EXPECT_EQ(t.at(kCar).w, (Range{1.8, 1.8}));
}

TEST(ComputeSizeRanges, EmptyInputThrows) {
  try {
    compute_size_ranges({}, ClassRegistry::nuscenes());
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_STREQ(e.what(), "no annotations");
  }
}

TEST(ComputeSizeRanges, OrderInvariantAndContainsEveryRecord) {
  const auto reg = ClassRegistry::nuscenes();
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> dim(0.1, 15);
  std::uniform_int_distribution<int> cls(0, 9);
  std::vector<AnnotationRecord> rs;
  for (int i = 0; i < 300; ++i) rs.push_back(rec(cls(gen), dim(gen), dim(gen), dim(gen)));
  const auto base = compute_size_ranges(rs, reg);
  for (const auto& r : rs) {
    const auto& e = base.at(r.class_id);
    EXPECT_TRUE(e.w.contains(r.box.w) && e.h.contains(r.box.h) && e.l.contains(r.box.l));
  }
  for (int k = 0; k < 10; ++k) {
    std::shuffle(rs.begin(), rs.end(), gen);
    EXPECT_EQ(compute_size_ranges(rs, reg), base);
  }
}

TEST(DefaultTable, PublishedValues) {
  const SizeRangeTable t = default_table();
  EXPECT_EQ(t.size(), 10u);
  EXPECT_EQ(t.at(kCar).w, (Range{1.4, 2.8}));
  EXPECT_EQ(t.at(kBus).l, (Range{6.9, 13.8}));
  EXPECT_EQ(t.at(kTrafficCone).h, (Range{0.5, 1.4}));
  EXPECT_EQ(t.at(kTrafficCone).l, (Range{1.3, 2.0}));
  EXPECT_EQ(t.at(kPedestrian).h, (Range{1.0, 2.2}));
  EXPECT_EQ(t.at(kTrailer).w, (Range{2.2, 2.3}));
  EXPECT_EQ(t.at(kBarrier).l, (Range{0.3, 0.8}));
  const auto reg = ClassRegistry::nuscenes();
  for (const auto& [id, e] : t.entries()) EXPECT_EQ(reg.name(id), e.name);
}

TEST(SizeRangeTable, RejectsInvertedOrNonPositive) {
  SizeRangeTable t;
  EXPECT_THROW(t.set(0, {"x", {2, 1}, {1, 1}, {1, 1}}), PreconditionError);
  EXPECT_THROW(t.set(0, {"x", {0, 1}, {1, 1}, {1, 1}}), PreconditionError);
  EXPECT_THROW(t.at(3), UnknownClassError);
}

TEST(ClassRegistry, InternAndLookup) {
  auto reg = ClassRegistry::nuscenes();
  EXPECT_EQ(reg.id("car"), kCar);
  EXPECT_EQ(reg.id("traffic_cone"), kTrafficCone);
  EXPECT_THROW(reg.id("tram"), UnknownClassError);
  EXPECT_EQ(reg.intern("tram"), 10);
  EXPECT_EQ(reg.intern("tram"), 10);
  EXPECT_EQ(reg.name(10), "tram");
}

TEST(TableFile, RoundTripsBitIdentically) {
  ClassRegistry reg = ClassRegistry::nuscenes();
  SizeRangeTable t = default_table();
  t.set(reg.intern("odd"), {"odd", {0.1 + 0.2, 1.0 / 3.0}, {1e-7, 1e7}, {2.0 / 3.0, 2.0 / 3.0}});
  const std::string first = io::table_to_json(t).dump(2);
  ClassRegistry reg2 = ClassRegistry::nuscenes();
  const SizeRangeTable back = io::table_from_json(io::parse_document(first, "t.json"), reg2, "t.json");
  EXPECT_EQ(back, t);
  EXPECT_EQ(io::table_to_json(back).dump(2), first);
}

}  // namespace
}  // namespace qaf2d
