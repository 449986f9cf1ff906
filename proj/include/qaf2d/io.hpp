#pragma once

// JSON and JSON Lines encodings of every file the tools read or write.
//
//   camera       {"id"?, "intrinsics": [[3x3]], "rotation": [[3x3]],
//                 "translation": [x,y,z], "width": int, "height": int}
//   cameras      {"cameras": [camera...]} (a scene file also qualifies)
//   table        {"classes": {name: {"w": [min,max], "h": [..], "l": [..]}}}
//   annotation   {"class": str, "size": [w,h,l], "center": [x,y,z], "yaw": f}
//   detection    {"camera": id, "box": [cx,cy,w,h], "class": str, "score": f}
//   anchor       {"source": int, "box3d": [x,y,z,w,h,l,yaw],
//                 "query": [x,y,z,w,l,h,sin,cos], "indices": [ci,di,si,yi]}
//   prediction   {"class": str, "box": [8 values], "prob": f}
//   ground truth {"class": str, "box": [8 values]}
//   assignment   {"pairs": [[pi,gi]...], "total_cost": f}
//   scene        {"cameras": [...], "objects": [{"class": str, "box3d": [...]}],
//                 "gt2d": {camera id: [{"box": [cx,cy,w,h], "object": int}]}}

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qaf2d/anchor_generator.hpp"
#include "qaf2d/anchor_stats.hpp"
#include "qaf2d/errors.hpp"
#include "qaf2d/evaluator.hpp"
#include "qaf2d/geometry.hpp"
#include "qaf2d/scene_simulator.hpp"
#include "qaf2d/set_matcher.hpp"

namespace qaf2d::io {

using Json = nlohmann::ordered_json;

/// Raised for unreadable or unwritable files.
class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing " + path);
}

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline std::string where(const std::string& source, std::size_t line, std::size_t col) {
  std::string s = source + ":" + std::to_string(line);
  if (col > 0) s += ":" + std::to_string(col);
  return s;
}

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs a decoder, translating JSON type, lookup and shape errors into ParseError.
template <class Fn>
auto decode(const std::string& source, std::size_t line, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where(source, line, 0) + ": " + e.what(), line, 0);
  } catch (const SchemaError& e) {
    throw ParseError(where(source, line, 0) + ": " + e.what(), line, 0);
  }
}

inline void expect(bool ok, const char* what) {
  if (!ok) throw SchemaError(what);
}

template <std::size_t N>
std::array<double, N> fixed_array(const Json& j, const char* what) {
  expect(j.is_array() && j.size() == N, what);
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = j.at(i).get<double>();
  return out;
}

}  // namespace detail

/// Parses a whole JSON document; errors carry line and column.
inline Json parse_document(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    throw ParseError(detail::where(source, line, col) + ": " + e.what(), line, col);
  }
}

/// Calls fn(json, line_number) for every non-blank line.
template <class Fn>
void for_each_line(std::string_view text, const std::string& source, Fn&& fn) {
  std::size_t line = 0, pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view row = text.substr(pos, end - pos);
    ++line;
    pos = end + 1;
    if (row.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    Json j;
    try {
      j = Json::parse(row);
    } catch (const nlohmann::json::parse_error& e) {
      const std::size_t col = e.byte == 0 ? 1 : e.byte;
      throw ParseError(detail::where(source, line, col) + ": " + e.what(), line, col);
    }
    detail::decode(source, line, [&] {
      fn(j, line);
      return 0;
    });
    if (end == text.size()) break;
  }
}

inline std::string dump_lines(const std::vector<Json>& rows) {
  std::string out;
  for (const Json& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

// ---- cameras ---------------------------------------------------------------

inline Json mat_to_json(const Mat3& m) {
  Json j = Json::array();
  for (int r = 0; r < 3; ++r) j.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return j;
}

inline Mat3 mat_from_json(const Json& j) {
  detail::expect(j.is_array() && j.size() == 3, "expected a 3x3 matrix");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const auto row = detail::fixed_array<3>(j.at(r), "expected a 3x3 matrix");
    for (int c = 0; c < 3; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

inline Json camera_to_json(const CameraModel& cam, const std::string& id = {}) {
  Json j;
  if (!id.empty()) j["id"] = id;
  j["intrinsics"] = mat_to_json(cam.intrinsics());
  j["rotation"] = mat_to_json(cam.rotation());
  const Vec3& t = cam.translation();
  j["translation"] = {t.x(), t.y(), t.z()};
  j["width"] = cam.image_width();
  j["height"] = cam.image_height();
  return j;
}

inline CameraModel camera_from_json(const Json& j) {
  const auto t = detail::fixed_array<3>(j.at("translation"), "translation must have 3 entries");
  return CameraModel(mat_from_json(j.at("intrinsics")), mat_from_json(j.at("rotation")), Vec3(t[0], t[1], t[2]),
                     j.at("width").get<int>(), j.at("height").get<int>());
}

struct NamedCameras {
  std::vector<std::string> ids;
  std::vector<CameraModel> cameras;

  /// Throws PreconditionError for an unknown id.
  const CameraModel& at(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return cameras[i];
    }
    throw PreconditionError("unknown camera id: " + id);
  }
};

inline NamedCameras cameras_from_json(const Json& doc, const std::string& source) {
  return detail::decode(source, 0, [&] {
    NamedCameras out;
    const Json& arr = doc.at("cameras");
    detail::expect(arr.is_array(), "cameras must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Json& c = arr.at(i);
      out.ids.push_back(c.contains("id") ? c.at("id").get<std::string>() : std::to_string(i));
      out.cameras.push_back(camera_from_json(c));
    }
    return out;
  });
}

// ---- size tables and annotations ---------------------------------------------

inline Json table_to_json(const SizeRangeTable& table) {
  Json classes = Json::object();
  for (const auto& [id, e] : table.entries()) {
    classes[e.name] = {{"w", {e.w.min, e.w.max}}, {"h", {e.h.min, e.h.max}}, {"l", {e.l.min, e.l.max}}};
  }
  return Json{{"classes", classes}};
}

/// Class names are interned into the registry.
inline SizeRangeTable table_from_json(const Json& doc, ClassRegistry& registry, const std::string& source) {
  return detail::decode(source, 0, [&] {
    SizeRangeTable t;
    const Json& classes = doc.at("classes");
    detail::expect(classes.is_object(), "classes must be an object");
    for (const auto& [name, v] : classes.items()) {
      auto range = [&](const char* key) {
        const auto r = detail::fixed_array<2>(v.at(key), "ranges must be [min, max]");
        return Range{r[0], r[1]};
      };
      t.set(registry.intern(name), {name, range("w"), range("h"), range("l")});
    }
    return t;
  });
}

inline std::vector<AnnotationRecord> annotations_from_jsonl(std::string_view text, ClassRegistry& registry,
                                                            const std::string& source) {
  std::vector<AnnotationRecord> out;
  for_each_line(text, source, [&](const Json& j, std::size_t) {
    const auto size = detail::fixed_array<3>(j.at("size"), "size must be [w, h, l]");
    const auto center = detail::fixed_array<3>(j.at("center"), "center must be [x, y, z]");
    AnnotationRecord r;
    r.class_id = registry.intern(j.at("class").get<std::string>());
    r.box = {center[0], center[1], center[2], size[0], size[1], size[2], normalize_yaw(j.value("yaw", 0.0))};
    out.push_back(r);
  });
  return out;
}

// ---- detections and anchors ----------------------------------------------------

struct Detection {
  std::string camera;
  Box2D box;
};

inline Json detection_to_json(const std::string& camera, const Box2D& b, const ClassRegistry& registry) {
  return {{"camera", camera}, {"box", {b.cx, b.cy, b.w, b.h}}, {"class", registry.name(b.class_id)},
          {"score", b.score}};
}

/// Unknown class names are interned; the caller decides whether they are
/// usable.
inline std::vector<Detection> detections_from_jsonl(std::string_view text, ClassRegistry& registry,
                                                    const std::string& source) {
  std::vector<Detection> out;
  for_each_line(text, source, [&](const Json& j, std::size_t line) {
    const auto box = detail::fixed_array<4>(j.at("box"), "box must be [cx, cy, w, h]");
    Detection d;
    d.camera = j.at("camera").is_string() ? j.at("camera").get<std::string>() : j.at("camera").dump();
    d.box = {box[0], box[1], box[2], box[3], registry.intern(j.at("class").get<std::string>()),
             j.value("score", 1.0)};
    try {
      validate(d.box);
    } catch (const PreconditionError& e) {
      throw ParseError(detail::where(source, line, 0) + ": " + e.what(), line, 0);
    }
    out.push_back(std::move(d));
  });
  return out;
}

inline Json anchor_to_json(const Anchor3D& a) {
  const Box3D& b = a.box;
  const QueryAnchor q = to_query(b);
  return {{"source", a.source_box_index},
          {"box3d", {b.x, b.y, b.z, b.w, b.h, b.l, b.yaw}},
          {"query", q.values()},
          {"indices", {a.center_idx, a.depth_idx, a.size_idx, a.yaw_idx}}};
}

inline std::string anchors_to_jsonl(std::span<const Anchor3D> anchors) {
  std::string out;
  for (const Anchor3D& a : anchors) {
    out += anchor_to_json(a).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<Anchor3D> anchors_from_jsonl(std::string_view text, const std::string& source) {
  std::vector<Anchor3D> out;
  for_each_line(text, source, [&](const Json& j, std::size_t) {
    const auto b = detail::fixed_array<7>(j.at("box3d"), "box3d must have 7 entries");
    const Json& idx = j.at("indices");
    detail::expect(idx.is_array() && idx.size() == 4, "indices must have 4 entries");
    Anchor3D a;
    a.box = {b[0], b[1], b[2], b[3], b[4], b[5], b[6]};
    a.source_box_index = j.at("source").get<int>();
    a.center_idx = idx.at(0).get<int>();
    a.depth_idx = idx.at(1).get<int>();
    a.size_idx = idx.at(2).get<int>();
    a.yaw_idx = idx.at(3).get<int>();
    out.push_back(a);
  });
  return out;
}

// ---- matching --------------------------------------------------------------------

inline std::vector<Prediction> predictions_from_jsonl(std::string_view text, ClassRegistry& registry,
                                                      const std::string& source) {
  std::vector<Prediction> out;
  for_each_line(text, source, [&](const Json& j, std::size_t) {
    Prediction p;
    p.box = detail::fixed_array<8>(j.at("box"), "box must have 8 entries");
    p.class_id = registry.intern(j.at("class").get<std::string>());
    p.class_prob = j.at("prob").get<double>();
    out.push_back(p);
  });
  return out;
}

inline std::vector<GroundTruth> ground_truths_from_jsonl(std::string_view text, ClassRegistry& registry,
                                                         const std::string& source) {
  std::vector<GroundTruth> out;
  for_each_line(text, source, [&](const Json& j, std::size_t) {
    GroundTruth g;
    g.box = detail::fixed_array<8>(j.at("box"), "box must have 8 entries");
    g.class_id = registry.intern(j.at("class").get<std::string>());
    out.push_back(g);
  });
  return out;
}

inline Json assignment_to_json(const Assignment& a) {
  Json pairs = Json::array();
  for (const auto& [p, g] : a.pairs) pairs.push_back({p, g});
  return {{"pairs", pairs}, {"total_cost", a.total_cost}};
}

// ---- scenes ------------------------------------------------------------------------

inline Json scene_to_json(const Scene& s, const ClassRegistry& registry) {
  Json cams = Json::array();
  for (std::size_t i = 0; i < s.cameras.size(); ++i) cams.push_back(camera_to_json(s.cameras[i], s.camera_ids[i]));
  Json objects = Json::array();
  for (const SceneObject& o : s.objects) {
    const Box3D& b = o.box;
    objects.push_back({{"class", registry.name(o.class_id)}, {"box3d", {b.x, b.y, b.z, b.w, b.h, b.l, b.yaw}}});
  }
  Json gt = Json::object();
  for (std::size_t c = 0; c < s.gt_2d.size(); ++c) {
    Json list = Json::array();
    for (const SceneDetection& d : s.gt_2d[c]) {
      list.push_back({{"box", {d.box.cx, d.box.cy, d.box.w, d.box.h}}, {"object", d.object}});
    }
    gt[s.camera_ids[c]] = list;
  }
  return {{"cameras", cams}, {"objects", objects}, {"gt2d", gt}};
}

inline Scene scene_from_json(const Json& doc, ClassRegistry& registry, const std::string& source) {
  const NamedCameras cams = cameras_from_json(doc, source);
  return detail::decode(source, 0, [&] {
    Scene s;
    s.camera_ids = cams.ids;
    s.cameras = cams.cameras;
    for (const Json& o : doc.at("objects")) {
      const auto b = detail::fixed_array<7>(o.at("box3d"), "box3d must have 7 entries");
      s.objects.push_back({registry.intern(o.at("class").get<std::string>()), {b[0], b[1], b[2], b[3], b[4], b[5], b[6]}});
    }
    s.gt_2d.resize(s.cameras.size());
    const Json& gt = doc.at("gt2d");
    for (std::size_t c = 0; c < s.camera_ids.size(); ++c) {
      if (!gt.contains(s.camera_ids[c])) continue;
      for (const Json& d : gt.at(s.camera_ids[c])) {
        const auto b = detail::fixed_array<4>(d.at("box"), "box must be [cx, cy, w, h]");
        const int obj = d.at("object").get<int>();
        const int cls = obj >= 0 && obj < static_cast<int>(s.objects.size())
                            ? s.objects[static_cast<std::size_t>(obj)].class_id
                            : -1;
        s.gt_2d[c].push_back({{b[0], b[1], b[2], b[3], cls, 1.0}, obj});
      }
    }
    return s;
  });
}

// ---- reports -----------------------------------------------------------------------

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json report_to_json(const RecallReport& r, const ClassRegistry& registry) {
  Json per_class = Json::object();
  for (const auto& [id, c] : r.per_class) {
    per_class[registry.name(id)] = {{"considered", c.considered}, {"covered", c.covered}, {"recall", c.recall}};
  }
  return {{"thresholds", r.thresholds},
          {"total", r.total},
          {"considered", r.considered},
          {"covered", r.covered},
          {"recall", r.recall},
          {"per_class", per_class},
          {"with_anchor", r.with_anchor},
          {"mean_best_distance", optional_number(r.mean_best_distance)},
          {"median_best_distance", optional_number(r.median_best_distance)},
          {"mean_best_yaw_error", optional_number(r.mean_best_yaw_error)}};
}

}  // namespace qaf2d::io
