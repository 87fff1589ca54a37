#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "oneshot/core/gist.hpp"
#include "oneshot/core/types.hpp"

namespace oneshot {

using nlohmann::json;

inline json point_to_json(Point3 p) { return json::array({p.x, p.y, p.z}); }

inline Point3 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

/// frames: [[t, [x,y,z], ...], ...]
inline json frames_to_json(const Trajectory& traj) {
  json frames = json::array();
  for (const Frame& f : traj.frames()) {
    json row = json::array({f.time});
    for (const Point3& p : f.points) row.push_back(point_to_json(p));
    frames.push_back(std::move(row));
  }
  return frames;
}

inline Trajectory trajectory_from_json(const json& frames, std::size_t effector_count) {
  std::vector<Frame> out;
  for (const json& row : frames) {
    if (!row.is_array() || row.size() != effector_count + 1) {
      throw std::invalid_argument("frame row must hold a timestamp and " +
                                  std::to_string(effector_count) + " points");
    }
    Frame f;
    f.time = row[0].get<double>();
    for (std::size_t e = 0; e < effector_count; ++e) f.points.push_back(point_from_json(row[e + 1]));
    out.push_back(std::move(f));
  }
  return Trajectory(effector_count, std::move(out));
}

inline json instance_to_json(const LabeledInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["label"] = inst.label.name;
  j["label_index"] = inst.label.index;
  j["effector_count"] = inst.trajectory.effector_count();
  j["frames"] = frames_to_json(inst.trajectory);
  return j;
}

inline LabeledInstance instance_from_json(const json& j) {
  LabeledInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.label.name = j.at("label").get<std::string>();
  inst.label.index = j.value("label_index", 0);
  inst.trajectory = trajectory_from_json(j.at("frames"), j.at("effector_count").get<std::size_t>());
  return inst;
}

inline json gist_to_json(const GestureGist& g) {
  json j;
  j["label"] = g.source_label.name;
  j["label_index"] = g.source_label.index;
  j["duration"] = g.duration;
  j["source_length"] = g.source_length;
  json effs = json::array();
  for (const auto& e : g.effectors) {
    json list = json::array();
    for (const Placeholder& p : e) {
      list.push_back({{"position", point_to_json(p.position)},
                      {"variance", json::array({p.variance[0], p.variance[1], p.variance[2]})},
                      {"time_fraction", p.time_fraction}});
    }
    effs.push_back(std::move(list));
  }
  j["effectors"] = std::move(effs);
  return j;
}

inline GestureGist gist_from_json(const json& j) {
  GestureGist g;
  g.source_label.name = j.at("label").get<std::string>();
  g.source_label.index = j.at("label_index").get<int>();
  g.duration = j.at("duration").get<double>();
  g.source_length = j.at("source_length").get<std::size_t>();
  for (const json& e : j.at("effectors")) {
    std::vector<Placeholder> list;
    for (const json& p : e) {
      Placeholder ph;
      ph.position = point_from_json(p.at("position"));
      const json& v = p.at("variance");
      ph.variance = {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
      ph.time_fraction = p.at("time_fraction").get<double>();
      list.push_back(ph);
    }
    g.effectors.push_back(std::move(list));
  }
  if (g.effectors.empty()) throw std::invalid_argument("gist has no effectors");
  return g;
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace oneshot
