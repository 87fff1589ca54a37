#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oneshot/classifiers/model.hpp"
#include "oneshot/core/gist.hpp"
#include "oneshot/core/msrc12.hpp"
#include "oneshot/enactment/enact.hpp"
#include "oneshot/experiment/bundled.hpp"
#include "oneshot/synthesis/synthesis.hpp"

namespace oneshot {

/// Failure classes of an experiment run; each maps to its own exit code.
enum class ErrorKind { Config, Data, Compute };

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitData = 4;
inline constexpr int kExitCompute = 5;

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Data: return kExitData;
    case ErrorKind::Compute: return kExitCompute;
  }
  return kExitInternal;
}

class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(ErrorKind kind, std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), kind_(kind), stage_(std::move(stage)) {}
  ErrorKind kind() const { return kind_; }
  const std::string& stage() const { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

inline ExperimentError config_error(const std::string& what) { return {ErrorKind::Config, "config", what}; }

struct Msrc12Recording {
  std::string skeleton;
  std::string tagstream;
};

struct DatasetConfig {
  std::string source = "bundled";    // bundled | msrc12
  std::vector<std::string> classes;  // empty: the full 8-class lexicon
  std::uint64_t bundled_seed = 1;
  BundledOptions bundled;
  std::vector<Msrc12Recording> recordings;
  double window_before = 1.0;
  double window_after = 1.0;
  double tag_time_scale = 1.0;
};

struct SeedSelection {
  std::string rule = "first";              // first | ids
  std::map<std::string, std::string> ids;  // label -> instance id
};

struct TestSetConfig {
  std::string source = "held_out";  // held_out | synthetic
  std::size_t per_class = 16;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  SeedSelection seed_selection;
  GistParams gist;
  SynthesisParams synthesis;  // rng_seed is derived per replicate
  std::vector<Variant> classifiers = all_variants();
  ClassifierConfig classifier;  // seed is derived per replicate
  bool enactment_enabled = true;
  EnactmentConfig enactment;  // seed is derived per replicate
  TestSetConfig test;
  std::string human_labels;
  std::string output_directory = "oneshot-out";
  bool write_intermediates = false;
  std::uint64_t seed = 0;
  std::size_t replicates = 20;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::filesystem::path base_directory;  // relative input paths resolve here
};

namespace detail {

using nlohmann::json;

inline json point_json(Point3 p) { return json::array({p.x, p.y, p.z}); }

inline Point3 point_of(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

/// Overlays `user` onto `base`. Keys missing from `base` are rejected;
/// scalars must keep their JSON type (integers may stand in for floats).
/// Arrays and the free-form `ids` map are replaced wholesale.
inline void merge_strict(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw config_error("'" + path + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw config_error("unknown key '" + key + "'");
    json& dst = base[it.key()];
    const json& src = it.value();
    if (dst.is_object() && key != "seed_selection.ids") {
      merge_strict(dst, src, key);
      continue;
    }
    const bool ok = (dst.is_number() && src.is_number()) || (dst.is_boolean() && src.is_boolean()) ||
                    (dst.is_string() && src.is_string()) || (dst.is_array() && src.is_array()) ||
                    (dst.is_object() && src.is_object());
    if (!ok) throw config_error("key '" + key + "' expects " + std::string(dst.type_name()));
    const bool non_negative_integer =
        src.is_number_unsigned() || (src.is_number_integer() && src.get<std::int64_t>() >= 0);
    if (dst.is_number_unsigned() && !non_negative_integer) {
      throw config_error("key '" + key + "' expects a non-negative integer");
    }
    dst = src;
  }
}

}  // namespace detail

/// Full configuration document with every field present.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using detail::json;
  const auto& b = c.dataset.bundled;
  json recordings = json::array();
  for (const auto& r : c.dataset.recordings) recordings.push_back({{"skeleton", r.skeleton}, {"tagstream", r.tagstream}});
  json classifiers = json::array();
  for (Variant v : c.classifiers) classifiers.push_back(to_string(v));
  const auto& cc = c.classifier;
  const auto& e = c.enactment;
  return {
      {"dataset",
       {{"source", c.dataset.source},
        {"classes", c.dataset.classes},
        {"bundled",
         {{"seed", c.dataset.bundled_seed},
          {"frame_rate", b.frame_rate},
          {"duration", b.duration},
          {"duration_jitter", b.duration_jitter},
          {"amplitude_jitter", b.amplitude_jitter},
          {"warp", b.warp},
          {"rotation_deg", b.rotation_deg},
          {"point_noise", b.point_noise}}},
        {"msrc12",
         {{"recordings", recordings},
          {"window_before", c.dataset.window_before},
          {"window_after", c.dataset.window_after},
          {"tag_time_scale", c.dataset.tag_time_scale}}}}},
      {"seed_selection", {{"rule", c.seed_selection.rule}, {"ids", c.seed_selection.ids}}},
      {"gist",
       {{"speed_prominence", c.gist.speed_prominence},
        {"curvature_prominence", c.gist.curvature_prominence},
        {"speed_floor", c.gist.speed_floor},
        {"angle_floor", c.gist.angle_floor},
        {"curvature_min_speed", c.gist.curvature_min_speed},
        {"min_separation", c.gist.min_separation},
        {"variance_window", c.gist.variance_window},
        {"variance_gain", c.gist.variance_gain}}},
      {"synthesis",
       {{"m_des", c.synthesis.m_des},
        {"spatial_noise_gain", c.synthesis.spatial_noise_gain},
        {"temporal_jitter", c.synthesis.temporal_jitter},
        {"length_jitter", c.synthesis.length_jitter},
        {"base_length", c.synthesis.base_length}}},
      {"classifiers",
       {{"selected", classifiers},
        {"features", {{"length", cc.features.length}, {"normalize", cc.features.normalize}}},
        {"hmm",
         {{"states", cc.hmm.states},
          {"codebook_size", cc.hmm.codebook_size},
          {"max_iterations", cc.hmm.baum_welch.max_iterations},
          {"tolerance", cc.hmm.baum_welch.tolerance},
          {"floor", cc.hmm.baum_welch.floor}}},
        {"svm", {{"c", cc.svm.c}, {"gamma", cc.svm.gamma}, {"tolerance", cc.svm.tolerance}}},
        {"crf",
         {{"codebook_size", cc.crf.codebook_size},
          {"padding", cc.crf.padding},
          {"l2", cc.crf.train.l2},
          {"max_iterations", cc.crf.train.max_iterations},
          {"gradient_tolerance", cc.crf.train.gradient_tolerance}}},
        {"dtw", {{"band", cc.dtw.band}, {"medoid_only", cc.dtw.medoid_only}}}}},
      {"enactment",
       {{"enabled", c.enactment_enabled},
        {"cutoff_hz", e.cutoff_hz},
        {"filter_rate_hz", e.filter_rate_hz},
        {"marker_radius_px", e.marker_radius_px},
        {"workspace",
         {{"min", detail::point_json(e.workspace.min)},
          {"max", detail::point_json(e.workspace.max)},
          {"velocity_limit", detail::point_json(e.workspace.velocity_limit)}}},
        {"camera",
         {{"width", e.camera.width},
          {"height", e.camera.height},
          {"focal", e.camera.focal},
          {"cx", e.camera.cx},
          {"cy", e.camera.cy},
          {"depth_noise", e.camera.depth_noise},
          {"frame_rate", e.camera.frame_rate}}},
        {"detection",
         {{"on_threshold", e.detection.on_threshold},
          {"off_threshold", e.detection.off_threshold},
          {"max_missing", e.detection.max_missing}}}}},
      {"test", {{"source", c.test.source}, {"per_class", c.test.per_class}}},
      {"human_labels", c.human_labels},
      {"output", {{"directory", c.output_directory}, {"intermediates", c.write_intermediates}}},
      {"seed", c.seed},
      {"replicates", c.replicates},
      {"threads", c.threads},
  };
}

inline void validate(const ExperimentConfig& c) {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw config_error(what);
  };
  check(c.dataset.source == "bundled" || c.dataset.source == "msrc12", "dataset.source must be bundled or msrc12");
  check(c.dataset.source != "msrc12" || !c.dataset.recordings.empty(), "dataset.msrc12.recordings is empty");
  check(c.seed_selection.rule == "first" || c.seed_selection.rule == "ids", "seed_selection.rule must be first or ids");
  check(c.test.source == "held_out" || c.test.source == "synthetic", "test.source must be held_out or synthetic");
  check(c.test.per_class >= 1, "test.per_class must be >= 1");
  check(!c.classifiers.empty(), "at least one classifier must be selected");
  check(c.replicates >= 1, "replicates must be >= 1");
  check(!c.output_directory.empty(), "output.directory is empty");
  for (std::size_t i = 0; i < c.classifiers.size(); ++i) {
    for (std::size_t j = i + 1; j < c.classifiers.size(); ++j) {
      check(c.classifiers[i] != c.classifiers[j], "classifier selected twice: " + to_string(c.classifiers[i]));
    }
  }
  try {
    c.synthesis.validate();
    c.enactment.workspace.validate();
    c.enactment.camera.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  check(c.enactment.cutoff_hz > 0.0 && c.enactment.filter_rate_hz > 0.0, "enactment rates must be positive");
  check(c.classifier.features.length != 1, "classifiers.features.length must be 0 or >= 2");
}

/// Reads a (possibly partial) configuration document over the defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& user) {
  using detail::json;
  json j = config_to_json(ExperimentConfig{});
  detail::merge_strict(j, user, "");
  ExperimentConfig c;
  try {
    const json& d = j["dataset"];
    c.dataset.source = d["source"];
    c.dataset.classes = d["classes"].get<std::vector<std::string>>();
    const json& b = d["bundled"];
    c.dataset.bundled_seed = b["seed"];
    c.dataset.bundled = {b["frame_rate"], b["duration"], b["duration_jitter"], b["amplitude_jitter"],
                         b["warp"],       b["rotation_deg"], b["point_noise"]};
    const json& m = d["msrc12"];
    for (const json& r : m["recordings"]) c.dataset.recordings.push_back({r.at("skeleton"), r.at("tagstream")});
    c.dataset.window_before = m["window_before"];
    c.dataset.window_after = m["window_after"];
    c.dataset.tag_time_scale = m["tag_time_scale"];

    c.seed_selection.rule = j["seed_selection"]["rule"];
    c.seed_selection.ids = j["seed_selection"]["ids"].get<std::map<std::string, std::string>>();

    const json& g = j["gist"];
    c.gist = {g["speed_prominence"], g["curvature_prominence"], g["speed_floor"],    g["angle_floor"],
              g["curvature_min_speed"], g["min_separation"],    g["variance_window"], g["variance_gain"]};

    const json& s = j["synthesis"];
    c.synthesis.m_des = s["m_des"];
    c.synthesis.spatial_noise_gain = s["spatial_noise_gain"];
    c.synthesis.temporal_jitter = s["temporal_jitter"];
    c.synthesis.length_jitter = s["length_jitter"];
    c.synthesis.base_length = s["base_length"];

    const json& k = j["classifiers"];
    c.classifiers.clear();
    for (const json& v : k["selected"]) c.classifiers.push_back(parse_variant(v.get<std::string>()));
    auto& cc = c.classifier;
    cc.features.length = k["features"]["length"];
    cc.features.normalize = k["features"]["normalize"];
    cc.hmm.states = k["hmm"]["states"];
    cc.hmm.codebook_size = k["hmm"]["codebook_size"];
    cc.hmm.baum_welch.max_iterations = k["hmm"]["max_iterations"];
    cc.hmm.baum_welch.tolerance = k["hmm"]["tolerance"];
    cc.hmm.baum_welch.floor = k["hmm"]["floor"];
    cc.svm.c = k["svm"]["c"];
    cc.svm.gamma = k["svm"]["gamma"];
    cc.svm.tolerance = k["svm"]["tolerance"];
    cc.crf.codebook_size = k["crf"]["codebook_size"];
    cc.crf.padding = k["crf"]["padding"];
    cc.crf.train.l2 = k["crf"]["l2"];
    cc.crf.train.max_iterations = k["crf"]["max_iterations"];
    cc.crf.train.gradient_tolerance = k["crf"]["gradient_tolerance"];
    cc.dtw.band = k["dtw"]["band"];
    cc.dtw.medoid_only = k["dtw"]["medoid_only"];

    const json& e = j["enactment"];
    c.enactment_enabled = e["enabled"];
    c.enactment.cutoff_hz = e["cutoff_hz"];
    c.enactment.filter_rate_hz = e["filter_rate_hz"];
    c.enactment.marker_radius_px = e["marker_radius_px"];
    c.enactment.workspace.min = detail::point_of(e["workspace"]["min"]);
    c.enactment.workspace.max = detail::point_of(e["workspace"]["max"]);
    c.enactment.workspace.velocity_limit = detail::point_of(e["workspace"]["velocity_limit"]);
    const json& cam = e["camera"];
    c.enactment.camera = {cam["width"], cam["height"],      cam["focal"],     cam["cx"],
                          cam["cy"],    cam["depth_noise"], cam["frame_rate"]};
    c.enactment.detection = {e["detection"]["on_threshold"], e["detection"]["off_threshold"],
                             e["detection"]["max_missing"]};

    c.test.source = j["test"]["source"];
    c.test.per_class = j["test"]["per_class"];
    c.human_labels = j["human_labels"];
    c.output_directory = j["output"]["directory"];
    c.write_intermediates = j["output"]["intermediates"];
    c.seed = j["seed"];
    c.replicates = j["replicates"];
    c.threads = j["threads"];
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::exception& ex) {
    throw config_error(ex.what());
  }
  validate(c);
  return c;
}

/// Applies "a.b.c=value" to a configuration document. The value is read as
/// JSON when it parses (numbers, booleans, arrays), else as a plain string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw config_error("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  nlohmann::json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) throw config_error("override '" + assignment + "' has an empty key");
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json doc = nlohmann::json::object();
  std::filesystem::path base;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path.string());
    doc = nlohmann::json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw config_error(path.string() + " is not valid JSON");
    base = path.parent_path();
  }
  for (const auto& o : overrides) apply_override(doc, o);
  ExperimentConfig c = config_from_json(doc);
  c.base_directory = base;
  return c;
}

/// The part of the configuration that determines results: output location
/// and thread count are excluded.
inline nlohmann::json result_config_json(const ExperimentConfig& c) {
  nlohmann::json j = config_to_json(c);
  j.erase("output");
  j.erase("threads");
  return j;
}

/// FNV-1a 64 over the canonical (sorted-key, compact) dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : result_config_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ReplicateSeeds {
  std::uint64_t synthesis = 0;
  std::uint64_t classifier = 0;
  std::uint64_t enactment = 0;
  std::uint64_t test = 0;
};

/// Replicate r (1-based) draws every stream from derive_key(seed, r, stage).
inline ReplicateSeeds replicate_seeds(std::uint64_t seed, std::size_t r) {
  return {derive_key({seed, r, 1}), derive_key({seed, r, 2}), derive_key({seed, r, 3}), derive_key({seed, r, 4})};
}

}  // namespace oneshot
