#pragma once

// Per-class 3D size ranges: the class-name registry, min/max statistics over
// annotation records, and the published nuScenes defaults.

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qaf2d/errors.hpp"
#include "qaf2d/geometry.hpp"

namespace qaf2d {

/// Ids of the ten nuScenes detection classes in the default registry.
enum NuScenesClass : int {
  kCar = 0,
  kTruck,
  kConstructionVehicle,
  kBus,
  kTrailer,
  kBarrier,
  kMotorcycle,
  kBicycle,
  kPedestrian,
  kTrafficCone,
};

/// Bidirectional class name <-> integer id mapping. Unknown names receive
/// fresh ids on intern().
class ClassRegistry {
 public:
  ClassRegistry() = default;

  static ClassRegistry nuscenes() {
    ClassRegistry r;
    for (const char* name : {"car", "truck", "construction_vehicle", "bus", "trailer", "barrier",
                             "motorcycle", "bicycle", "pedestrian", "traffic_cone"}) {
      r.intern(name);
    }
    return r;
  }

  int intern(const std::string& name) {
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    const int id = static_cast<int>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
  }

  /// Throws UnknownClassError when the name was never interned.
  int id(const std::string& name) const {
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    throw UnknownClassError(name);
  }

  bool contains(const std::string& name) const { return ids_.count(name) != 0; }

  const std::string& name(int id) const {
    if (id < 0 || id >= static_cast<int>(names_.size())) {
      throw UnknownClassError("id " + std::to_string(id));
    }
    return names_[static_cast<std::size_t>(id)];
  }

  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

struct Range {
  double min = 0.0;
  double max = 0.0;

  bool contains(double v) const { return v >= min && v <= max; }
  void expand(double v) {
    min = std::min(min, v);
    max = std::max(max, v);
  }

  friend bool operator==(const Range&, const Range&) = default;
};

struct ClassSizeRange {
  std::string name;
  Range w;
  Range h;
  Range l;

  friend bool operator==(const ClassSizeRange&, const ClassSizeRange&) = default;
};

/// Per-class (min, max) width, height and length in meters.
class SizeRangeTable {
 public:
  SizeRangeTable() = default;

  /// Throws PreconditionError if any range is non-positive or inverted.
  void set(int class_id, ClassSizeRange range) {
    for (const Range* r : {&range.w, &range.h, &range.l}) {
      if (!(r->min > 0.0) || !(r->min <= r->max)) {
        throw PreconditionError("size range for class '" + range.name +
                                "' must satisfy 0 < min <= max");
      }
    }
    entries_[class_id] = std::move(range);
  }

  bool contains(int class_id) const { return entries_.count(class_id) != 0; }

  const ClassSizeRange& at(int class_id) const {
    if (auto it = entries_.find(class_id); it != entries_.end()) return it->second;
    throw UnknownClassError("id " + std::to_string(class_id));
  }

  const std::map<int, ClassSizeRange>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  friend bool operator==(const SizeRangeTable&, const SizeRangeTable&) = default;

 private:
  std::map<int, ClassSizeRange> entries_;
};

/// One labelled object from an annotation corpus.
struct AnnotationRecord {
  int class_id = 0;
  Box3D box;
};

/// Exact per-class min/max over the records. Classes without records are
/// absent from the result; names come from the registry.
inline SizeRangeTable compute_size_ranges(std::span<const AnnotationRecord> records,
                                          const ClassRegistry& registry) {
  if (records.empty()) throw PreconditionError("no annotations");
  std::map<int, ClassSizeRange> acc;
  for (const AnnotationRecord& r : records) {
    if (!(r.box.w > 0.0 && r.box.h > 0.0 && r.box.l > 0.0)) {
      throw PreconditionError("annotation sizes must be positive");
    }
    auto [it, fresh] = acc.try_emplace(r.class_id);
    ClassSizeRange& e = it->second;
    if (fresh) {
      e.name = registry.name(r.class_id);
      e.w = {r.box.w, r.box.w};
      e.h = {r.box.h, r.box.h};
      e.l = {r.box.l, r.box.l};
    } else {
      e.w.expand(r.box.w);
      e.h.expand(r.box.h);
      e.l.expand(r.box.l);
    }
  }
  SizeRangeTable table;
  for (auto& [id, e] : acc) table.set(id, std::move(e));
  return table;
}

/// Published nuScenes ranges keyed by the ids of ClassRegistry::nuscenes().
/// Traffic cone length (1.3, 2.0) is kept as published.
inline SizeRangeTable default_table() {
  SizeRangeTable t;
  t.set(kCar, {"car", {1.4, 2.8}, {1.2, 3.1}, {3.4, 6.6}});
  t.set(kPedestrian, {"pedestrian", {0.3, 1.0}, {1.0, 2.2}, {0.3, 1.3}});
  t.set(kBus, {"bus", {2.6, 3.5}, {2.8, 4.6}, {6.9, 13.8}});
  t.set(kTruck, {"truck", {1.7, 3.5}, {1.7, 4.5}, {4.5, 14.0}});
  t.set(kTrailer, {"trailer", {2.2, 2.3}, {3.3, 3.9}, {1.7, 14.0}});
  t.set(kConstructionVehicle, {"construction_vehicle", {2.1, 3.4}, {2.0, 3.0}, {3.7, 7.6}});
  t.set(kMotorcycle, {"motorcycle", {0.4, 1.5}, {1.1, 2.0}, {1.2, 2.8}});
  t.set(kBicycle, {"bicycle", {0.4, 0.9}, {0.9, 2.0}, {1.3, 2.0}});
  t.set(kTrafficCone, {"traffic_cone", {0.2, 1.2}, {0.5, 1.4}, {1.3, 2.0}});
  t.set(kBarrier, {"barrier", {1.7, 3.6}, {0.8, 1.4}, {0.3, 0.8}});
  return t;
}

}  // namespace qaf2d
