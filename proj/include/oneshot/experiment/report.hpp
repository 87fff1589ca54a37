#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oneshot/metrics/io.hpp"
#include "oneshot/metrics/metrics.hpp"

namespace oneshot {

inline CoherencyReport coherency_from_json(const nlohmann::json& j) {
  CoherencyReport r;
  r.gestures = j.at("gestures").get<std::vector<std::string>>();
  r.machines = j.at("machines").get<std::vector<std::string>>();
  for (const auto& g : r.gestures) {
    const auto& row = j.at("per_gesture").at(g);
    std::vector<double> cells;
    for (const auto& m : r.machines) cells.push_back(row.at(m).get<double>());
    r.cells.push_back(std::move(cells));
    r.gesture_mean.push_back(row.at("gamma_all").get<double>());
  }
  for (const auto& m : r.machines) {
    r.pooled.push_back(j.at("lexicon_pooled").at(m).get<double>());
    r.class_mean.push_back(j.at("lexicon_mean_of_gestures").at(m).get<double>());
  }
  r.pooled_mean = j.at("lexicon_pooled").at("gamma_all").get<double>();
  r.class_mean_mean = j.at("lexicon_mean_of_gestures").at("gamma_all").get<double>();
  return r;
}

/// Cell-wise mean of reports sharing gestures and machines.
inline CoherencyReport mean_report(const std::vector<CoherencyReport>& reps) {
  if (reps.empty()) throw std::invalid_argument("mean_report: nothing to average");
  CoherencyReport out = reps.front();
  const double n = static_cast<double>(reps.size());
  for (std::size_t i = 1; i < reps.size(); ++i) {
    const CoherencyReport& r = reps[i];
    for (std::size_t g = 0; g < out.cells.size(); ++g) {
      for (std::size_t m = 0; m < out.cells[g].size(); ++m) out.cells[g][m] += r.cells[g][m];
      out.gesture_mean[g] += r.gesture_mean[g];
    }
    for (std::size_t m = 0; m < out.pooled.size(); ++m) {
      out.pooled[m] += r.pooled[m];
      out.class_mean[m] += r.class_mean[m];
    }
    out.pooled_mean += r.pooled_mean;
    out.class_mean_mean += r.class_mean_mean;
  }
  for (auto& row : out.cells) {
    for (double& v : row) v /= n;
  }
  for (double& v : out.gesture_mean) v /= n;
  for (double& v : out.pooled) v /= n;
  for (double& v : out.class_mean) v /= n;
  out.pooled_mean /= n;
  out.class_mean_mean /= n;
  return out;
}

/// "r01", "r02", ... (two digits minimum).
inline std::string replicate_tag(std::size_t r) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "r%02zu", r);
  return buf;
}

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
  double min = 0.0;
  double max = 0.0;
};

inline Summary summarize(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("summarize: empty");
  Summary s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string replicate_table(const nlohmann::json& classifiers, const std::string& metric) {
  std::ostringstream s;
  std::size_t n = 0;
  for (const auto& [name, c] : classifiers.items()) n = std::max(n, c.at(metric).at("per_replicate").size());
  s << "classifier";
  for (std::size_t r = 1; r <= n; ++r) s << ',' << replicate_tag(r);
  s << ",mean,sd,min,max,pooled\n";
  for (const auto& [name, c] : classifiers.items()) {
    const auto& m = c.at(metric);
    s << csv_field(name);
    for (const auto& v : m.at("per_replicate")) s << ',' << format_number(v.get<double>());
    for (const char* k : {"mean", "sd", "min", "max", "pooled"}) s << ',' << format_number(m.at(k).get<double>());
    s << '\n';
  }
  return s.str();
}

}  // namespace detail

/// Writes tables/*.csv and matrices/*.svg derived from a report document.
/// Output depends on the document only, so re-rendering is idempotent.
inline void render_report(const nlohmann::json& report, const std::filesystem::path& dir) {
  const auto& classifiers = report.at("classifiers");
  detail::write_text(dir / "tables" / "accuracy.csv", detail::replicate_table(classifiers, "accuracy"));
  detail::write_text(dir / "tables" / "agreement_index.csv", detail::replicate_table(classifiers, "agreement_index"));
  for (const auto& [name, c] : classifiers.items()) {
    const ConfusionMatrix cm = confusion_from_json(c.at("confusion"));
    std::ostringstream csv;
    write_confusion_csv(csv, cm);
    detail::write_text(dir / "tables" / ("confusion_" + name + ".csv"), csv.str());
    detail::write_text(dir / "matrices" / ("confusion_" + name + ".svg"),
                       confusion_svg(cm, name + ", all replicates"));
  }
  if (report.contains("coherency") && !report["coherency"].is_null()) {
    const auto& coh = report["coherency"];
    std::ostringstream csv;
    write_coherency_csv(csv, coherency_from_json(coh.at("mean")));
    detail::write_text(dir / "tables" / "coherency.csv", csv.str());
    std::size_t r = 0;
    for (const auto& rep : coh.at("per_replicate")) {
      ++r;
      std::ostringstream one;
      write_coherency_csv(one, coherency_from_json(rep));
      detail::write_text(dir / "tables" / ("coherency_" + replicate_tag(r) + ".csv"), one.str());
    }
  }
  if (report.contains("machine_coherency") && !report["machine_coherency"].is_null()) {
    const auto& mc = report["machine_coherency"];
    const auto names = mc.at("machines").get<std::vector<std::string>>();
    std::ostringstream s;
    s << "machine\\reference";
    for (const auto& n : names) s << ',' << detail::csv_field(n);
    s << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
      s << detail::csv_field(names[i]);
      for (std::size_t j = 0; j < names.size(); ++j) s << ',' << detail::format_number(mc.at("matrix")[i][j].get<double>());
      s << '\n';
    }
    detail::write_text(dir / "tables" / "machine_coherency.csv", s.str());
  }
}

}  // namespace oneshot
