#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oneshot/core/types.hpp"

namespace oneshot {

/// Error raised for malformed input text; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Column layout of a skeleton file row: a timestamp followed by
/// `joints` groups of `values_per_joint` numbers, x/y/z first.
struct ColumnLayout {
  std::size_t time_column = 0;
  std::size_t first_joint_column = 1;
  std::size_t joints = 20;
  std::size_t values_per_joint = 4;
  double time_scale = 1.0;  // multiplies skeleton timestamps to get seconds

  std::size_t columns() const { return first_joint_column + joints * values_per_joint; }
};

/// Kinect v1 skeleton indices of the two hands.
inline constexpr std::size_t kHandLeft = 7;
inline constexpr std::size_t kHandRight = 11;

/// The eight upper-limb classes retained from MSRC-12.
inline std::vector<std::string> msrc12_upper_limb_lexicon() {
  return {"Shoot", "Throw", "ChangeWeapon", "Goggles", "Start", "Next", "WindUp", "Tempo"};
}

struct Msrc12Options {
  ColumnLayout layout;
  std::vector<std::size_t> joints{kHandLeft, kHandRight};
  std::vector<GestureLabel> lexicon = make_labels(msrc12_upper_limb_lexicon());
  std::map<std::string, std::string> label_aliases;  // tag label -> lexicon name
  double tag_time_scale = 1.0;                       // multiplies tag timestamps to get seconds
  double window_before = 1.0;                        // seconds before the tag
  double window_after = 1.0;                         // seconds after the tag
  std::size_t min_frames = 4;
  std::string id_prefix = "msrc";
};

struct Msrc12Result {
  std::vector<LabeledInstance> instances;
  std::size_t skipped_unknown_label = 0;
  std::size_t skipped_empty_window = 0;
  std::size_t dropped_frames = 0;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

struct SkeletonRow {
  double time;
  std::vector<Point3> joints;  // the selected joints only
  bool finite;
};

inline std::vector<SkeletonRow> read_skeleton(const std::filesystem::path& path,
                                              const ColumnLayout& layout,
                                              const std::vector<std::size_t>& joints) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open skeleton file " + path.string());
  for (std::size_t j : joints) {
    if (j >= layout.joints) throw std::invalid_argument("joint index out of range: " + std::to_string(j));
  }
  std::vector<SkeletonRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != layout.columns()) {
      throw ParseError(path.string(), lineno,
                       "expected " + std::to_string(layout.columns()) + " columns, found " +
                           std::to_string(tokens.size()));
    }
    std::vector<double> values(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!detail::parse_double(tokens[i], values[i])) {
        throw ParseError(path.string(), lineno, "non-numeric value '" + tokens[i] + "'");
      }
    }
    SkeletonRow row;
    row.time = values[layout.time_column] * layout.time_scale;
    row.finite = std::isfinite(row.time);
    for (std::size_t j : joints) {
      const std::size_t base = layout.first_joint_column + j * layout.values_per_joint;
      Point3 p{values[base], values[base + 1], values[base + 2]};
      row.finite = row.finite && p.finite();
      row.joints.push_back(p);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

struct TagEvent {
  double time;
  std::string label;
};

/// Reads "timestamp;label" lines. A non-numeric first line is a header.
inline std::vector<TagEvent> read_tagstream(const std::filesystem::path& path, double time_scale) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tagstream file " + path.string());
  std::vector<TagEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto sep = line.find(';');
    if (sep == std::string::npos) {
      throw ParseError(path.string(), lineno, "expected 'timestamp;label'");
    }
    double t = 0.0;
    if (!detail::parse_double(detail::trim(line.substr(0, sep)), t)) {
      if (lineno == 1) continue;
      throw ParseError(path.string(), lineno, "non-numeric timestamp");
    }
    events.push_back({t * time_scale, detail::trim(line.substr(sep + 1))});
  }
  return events;
}

/// Segments a skeleton recording around its tag events. Each in-lexicon
/// event yields one instance holding the frames within
/// [tag - window_before, tag + window_after], restricted to the selected
/// joints. Rows with non-finite values are dropped.
inline Msrc12Result load_msrc12(const std::filesystem::path& skeleton_file,
                                const std::filesystem::path& tagstream_file,
                                const Msrc12Options& opts = {}) {
  if (opts.joints.empty() || opts.joints.size() > 2) {
    throw std::invalid_argument("load_msrc12: select 1 or 2 joints");
  }
  Msrc12Result result;
  auto rows = read_skeleton(skeleton_file, opts.layout, opts.joints);
  std::vector<SkeletonRow> clean;
  for (auto& r : rows) {
    if (!r.finite || (!clean.empty() && !(r.time > clean.back().time))) {
      ++result.dropped_frames;
      continue;
    }
    clean.push_back(std::move(r));
  }

  const auto events = read_tagstream(tagstream_file, opts.tag_time_scale);
  std::size_t event_no = 0;
  for (const TagEvent& ev : events) {
    ++event_no;
    std::string name = ev.label;
    if (auto it = opts.label_aliases.find(name); it != opts.label_aliases.end()) name = it->second;
    const GestureLabel* label = nullptr;
    for (const auto& l : opts.lexicon) {
      if (l.name == name) label = &l;
    }
    if (label == nullptr) {
      ++result.skipped_unknown_label;
      continue;
    }
    std::vector<Frame> frames;
    for (const auto& r : clean) {
      if (r.time >= ev.time - opts.window_before && r.time <= ev.time + opts.window_after) {
        frames.push_back({r.time, r.joints});
      }
    }
    if (frames.size() < std::max<std::size_t>(opts.min_frames, Trajectory::kMinFrames)) {
      ++result.skipped_empty_window;
      continue;
    }
    result.instances.push_back(
        {opts.id_prefix + "-" + std::to_string(event_no), Trajectory(opts.joints.size(), std::move(frames)),
         *label});
  }
  return result;
}

}  // namespace oneshot
