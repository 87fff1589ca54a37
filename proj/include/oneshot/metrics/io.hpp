#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oneshot/core/msrc12.hpp"
#include "oneshot/metrics/metrics.hpp"

namespace oneshot {

inline const char* const kRecordsHeader = "instance_id,true_label,predicted_label,recognizer_id";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') out.back() += '"', ++i;
      else if (c == '"') quoted = false;
      else out.back() += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

inline std::string format_number(double v, int digits = 6) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Label indices follow `lexicon` when given, else the order in which true
/// labels first appear.
inline std::vector<IdentificationRecord> read_records_csv(std::istream& in, const std::string& name = "<records>",
                                                          const std::vector<GestureLabel>& lexicon = {}) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(name, 1, "empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordsHeader) throw ParseError(name, 1, std::string("expected header '") + kRecordsHeader + "'");

  std::vector<IdentificationRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4) throw ParseError(name, line_no, "expected 4 fields, got " + std::to_string(f.size()));
    if (f[0].empty() || f[1].empty() || f[2].empty()) throw ParseError(name, line_no, "empty field");
    out.push_back({f[0], {f[1], 0}, {f[2], 0}, f[3]});
  }
  const auto labels = lexicon.empty() ? labels_of(out) : lexicon;
  auto index_of = [&](const std::string& n) {
    for (const auto& l : labels) {
      if (l.name == n) return l.index;
    }
    return 0;
  };
  for (auto& r : out) {
    r.true_label.index = index_of(r.true_label.name);
    r.predicted_label.index = index_of(r.predicted_label.name);
  }
  return out;
}

inline std::vector<IdentificationRecord> read_records_csv(const std::filesystem::path& path,
                                                          const std::vector<GestureLabel>& lexicon = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_records_csv(in, path.string(), lexicon);
}

inline void write_records_csv(std::ostream& out, const std::vector<IdentificationRecord>& records) {
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << detail::csv_field(r.instance_id) << ',' << detail::csv_field(r.true_label.name) << ','
        << detail::csv_field(r.predicted_label.name) << ',' << detail::csv_field(r.recognizer_id) << '\n';
  }
}

inline void write_records_csv(const std::filesystem::path& path, const std::vector<IdentificationRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_records_csv(out, records);
}

inline nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
  nlohmann::json j;
  std::vector<std::string> names;
  for (const auto& l : cm.labels()) names.push_back(l.name);
  j["labels"] = names;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    std::vector<std::size_t> row;
    for (std::size_t k = 0; k < cm.size(); ++k) row.push_back(cm.at(i, k));
    rows.push_back(row);
  }
  j["counts"] = rows;
  std::vector<std::size_t> rejected;
  for (std::size_t i = 0; i < cm.size(); ++i) rejected.push_back(cm.rejected(i));
  j["rejected"] = rejected;
  j["total"] = cm.total();
  j["trace"] = cm.trace();
  return j;
}

inline ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  const auto names = j.at("labels").get<std::vector<std::string>>();
  ConfusionMatrix cm(make_labels(names));
  const auto& rows = j.at("counts");
  const auto rejected = j.value("rejected", std::vector<std::size_t>(names.size(), 0));
  if (rows.size() != names.size() || rejected.size() != names.size()) {
    throw std::invalid_argument("confusion matrix: shape does not match labels");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto row = rows[i].get<std::vector<std::size_t>>();
    if (row.size() != names.size()) throw std::invalid_argument("confusion matrix: ragged row");
    for (std::size_t k = 0; k < row.size(); ++k) {
      for (std::size_t n = 0; n < row[k]; ++n) cm.add(i, k);
    }
    for (std::size_t n = 0; n < rejected[i]; ++n) cm.add(i, std::nullopt);
  }
  return cm;
}

inline nlohmann::json coherency_to_json(const CoherencyReport& r) {
  nlohmann::json per_gesture = nlohmann::json::object();
  for (std::size_t g = 0; g < r.gestures.size(); ++g) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t m = 0; m < r.machines.size(); ++m) row[r.machines[m]] = r.cells[g][m];
    row["gamma_all"] = r.gesture_mean[g];
    per_gesture[r.gestures[g]] = row;
  }
  nlohmann::json pooled = nlohmann::json::object(), class_mean = nlohmann::json::object();
  for (std::size_t m = 0; m < r.machines.size(); ++m) {
    pooled[r.machines[m]] = r.pooled[m];
    class_mean[r.machines[m]] = r.class_mean[m];
  }
  pooled["gamma_all"] = r.pooled_mean;
  class_mean["gamma_all"] = r.class_mean_mean;
  return {{"gestures", r.gestures},
          {"machines", r.machines},
          {"per_gesture", per_gesture},
          {"lexicon_pooled", pooled},
          {"lexicon_mean_of_gestures", class_mean}};
}

/// Table layout: one row per gesture plus the two lexicon aggregations;
/// one column per machine plus the cross-machine mean.
inline void write_coherency_csv(std::ostream& out, const CoherencyReport& r) {
  out << "gesture";
  for (const auto& m : r.machines) out << ',' << detail::csv_field(m);
  out << ",gamma_all\n";
  auto row = [&](const std::string& name, const std::vector<double>& v, double mean) {
    out << detail::csv_field(name);
    for (double x : v) out << ',' << detail::format_number(x);
    out << ',' << detail::format_number(mean) << '\n';
  };
  for (std::size_t g = 0; g < r.gestures.size(); ++g) row(r.gestures[g], r.cells[g], r.gesture_mean[g]);
  row("lexicon (pooled records)", r.pooled, r.pooled_mean);
  row("lexicon (mean of gestures)", r.class_mean, r.class_mean_mean);
}

inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "true\\predicted";
  for (const auto& l : cm.labels()) out << ',' << detail::csv_field(l.name);
  out << ',' << kRejectedLabel << '\n';
  for (std::size_t i = 0; i < cm.size(); ++i) {
    out << detail::csv_field(cm.labels()[i].name);
    for (std::size_t k = 0; k <= cm.size(); ++k) out << ',' << cm.at(i, k);
    out << '\n';
  }
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Heatmap with per-cell counts; color is the row-normalized rate. The
/// rejected column is drawn only when something was rejected.
inline std::string confusion_svg(const ConfusionMatrix& cm, const std::string& title) {
  const std::size_t n = cm.size();
  const std::size_t cols = cm.rejected_total() > 0 ? n + 1 : n;
  const int cell = 44, left = 120, top = 60;
  const int width = left + static_cast<int>(cols) * cell + 20;
  const int height = top + static_cast<int>(n) * cell + 110;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << detail::xml_escape(title) << " (accuracy "
    << detail::format_number(cm.total() ? accuracy(cm) : 0.0, 4) << ")</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double row = static_cast<double>(std::max<std::size_t>(1, cm.row_total(i)));
    const int y = top + static_cast<int>(i) * cell;
    s << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
      << detail::xml_escape(cm.labels()[i].name) << "</text>\n";
    for (std::size_t k = 0; k < cols; ++k) {
      const std::size_t count = cm.at(i, k);
      const double rate = static_cast<double>(count) / row;
      const int shade = static_cast<int>(255.0 - 200.0 * rate);
      const int x = left + static_cast<int>(k) * cell;
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
        << shade << ',' << shade << ",255)\" stroke=\"#999\"/>\n";
      s << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
        << (rate > 0.6 ? "white" : "black") << "\">" << count << "</text>\n";
    }
  }
  const int label_y = top + static_cast<int>(n) * cell + 10;
  for (std::size_t k = 0; k < cols; ++k) {
    const int x = left + static_cast<int>(k) * cell + cell / 2;
    const std::string name = k < n ? cm.labels()[k].name : kRejectedLabel;
    s << "<text transform=\"translate(" << x << ',' << label_y << ") rotate(60)\">" << detail::xml_escape(name)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace oneshot
