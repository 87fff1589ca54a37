#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "oneshot/core/json_io.hpp"
#include "oneshot/synthesis/io.hpp"

namespace oneshot {

// Document formats shared by the run pipeline and the staged subcommands.
// Each is a JSON object tagged with "format" and "version".

inline constexpr int kFileFormatVersion = 1;

namespace detail {

inline void check_format(const json& j, const std::string& format, const std::string& where) {
  if (!j.is_object() || j.value("format", std::string{}) != format) {
    throw std::runtime_error(where + ": not a " + format + " document");
  }
  if (j.value("version", 0) != kFileFormatVersion) {
    throw std::runtime_error(where + ": unsupported " + format + " version");
  }
}

}  // namespace detail

inline json instance_set_to_json(const std::vector<LabeledInstance>& set) {
  json items = json::array();
  for (const auto& inst : set) items.push_back(instance_to_json(inst));
  return {{"format", "oneshot-instances"}, {"version", kFileFormatVersion}, {"instances", items}};
}

inline std::vector<LabeledInstance> instance_set_from_json(const json& j, const std::string& where = "instances") {
  detail::check_format(j, "oneshot-instances", where);
  std::vector<LabeledInstance> out;
  for (const json& item : j.at("instances")) out.push_back(instance_from_json(item));
  return out;
}

inline std::vector<LabeledInstance> read_instance_set(const std::filesystem::path& path) {
  return instance_set_from_json(read_json(path), path.string());
}

inline json synthesis_params_json(const SynthesisParams& p) {
  return {{"m_des", p.m_des},
          {"spatial_noise_gain", p.spatial_noise_gain},
          {"temporal_jitter", p.temporal_jitter},
          {"length_jitter", p.length_jitter},
          {"base_length", p.base_length},
          {"rng_seed", p.rng_seed}};
}

inline json dataset_to_json(const std::vector<SyntheticSample>& samples, const SynthesisParams& p) {
  json items = json::array();
  for (const auto& s : samples) items.push_back(sample_to_json(s));
  return {{"format", "oneshot-dataset"},
          {"version", kFileFormatVersion},
          {"synthesis", synthesis_params_json(p)},
          {"samples", items}};
}

inline std::vector<SyntheticSample> dataset_from_json(const json& j, const std::string& where = "dataset") {
  detail::check_format(j, "oneshot-dataset", where);
  std::vector<SyntheticSample> out;
  for (const json& item : j.at("samples")) out.push_back(sample_from_json(item));
  return out;
}

inline std::vector<SyntheticSample> read_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json(path), path.string());
}

/// Gists live one per file, named after their label.
inline std::filesystem::path gist_path(const std::filesystem::path& dir, const std::string& label) {
  return dir / (label + ".json");
}

inline void write_gists(const std::filesystem::path& dir, const std::vector<GestureGist>& gists) {
  for (const auto& g : gists) write_json(gist_path(dir, g.source_label.name), gist_to_json(g));
}

/// Reads every *.json in `dir`, ordered by label index then name.
inline std::vector<GestureGist> read_gists(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::vector<GestureGist> out;
  for (const auto& f : files) out.push_back(gist_from_json(read_json(f)));
  std::sort(out.begin(), out.end(), [](const GestureGist& a, const GestureGist& b) {
    if (a.source_label.index != b.source_label.index) return a.source_label.index < b.source_label.index;
    return a.source_label.name < b.source_label.name;
  });
  if (out.empty()) throw std::runtime_error("no gist files in " + dir.string());
  return out;
}

}  // namespace oneshot
