#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "oneshot/core/types.hpp"

namespace oneshot {

/// Predicted label used when a recognizer declines to answer.
inline const std::string kRejectedLabel = "REJECTED";

struct IdentificationRecord {
  std::string instance_id;
  GestureLabel true_label;
  GestureLabel predicted_label;
  std::string recognizer_id;

  bool rejected() const { return predicted_label.name == kRejectedLabel; }
  bool correct() const { return !rejected() && predicted_label.name == true_label.name; }

  friend bool operator==(const IdentificationRecord&, const IdentificationRecord&) = default;
};

/// Records of one recognizer. A reference recognizer (a human panel) may hold
/// several records per instance, one per rater; a machine holds one.
struct RecognizerResult {
  std::string recognizer_id;
  std::vector<IdentificationRecord> records;

  std::size_t correct_count() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.correct(); }));
  }
  std::size_t incorrect_count() const { return records.size() - correct_count(); }

  std::vector<const IdentificationRecord*> corr_id() const { return select(true); }
  std::vector<const IdentificationRecord*> incorr_id() const { return select(false); }

  std::set<std::string> instance_ids() const {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.instance_id);
    return ids;
  }

 private:
  std::vector<const IdentificationRecord*> select(bool correct) const {
    std::vector<const IdentificationRecord*> out;
    for (const auto& r : records) {
      if (r.correct() == correct) out.push_back(&r);
    }
    return out;
  }
};

/// Splits records into one result per recognizer group. The group of
/// "human:p03" is "human"; ids without ':' form their own group.
inline std::vector<RecognizerResult> group_by_recognizer(const std::vector<IdentificationRecord>& records) {
  std::vector<RecognizerResult> out;
  for (const auto& r : records) {
    const std::string group = r.recognizer_id.substr(0, r.recognizer_id.find(':'));
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.recognizer_id == group; });
    if (it == out.end()) {
      out.push_back({group, {}});
      it = out.end() - 1;
    }
    it->records.push_back(r);
  }
  return out;
}

/// Rows are true labels, columns predicted labels in lexicon order; the
/// extra last column counts rejections.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<GestureLabel> labels)
      : labels_(std::move(labels)), counts_(labels_.size() * (labels_.size() + 1), 0) {}

  const std::vector<GestureLabel>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * (size() + 1) + predicted); }
  std::size_t rejected(std::size_t truth) const { return at(truth, size()); }

  void add(std::size_t truth, std::optional<std::size_t> predicted) {
    const std::size_t col = predicted ? *predicted : size();
    if (truth >= size() || col > size()) throw std::out_of_range("confusion: label index out of range");
    ++counts_[truth * (size() + 1) + col];
  }

  std::size_t total() const {
    std::size_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += at(i, i);
    return s;
  }
  std::size_t row_total(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j <= size(); ++j) s += at(truth, j);
    return s;
  }
  std::size_t rejected_total() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += rejected(i);
    return s;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<GestureLabel> labels_;
  std::vector<std::size_t> counts_;
};

/// Labels in order of first appearance as a true label, indexed from 1.
inline std::vector<GestureLabel> labels_of(const std::vector<IdentificationRecord>& records) {
  std::vector<GestureLabel> out;
  for (const auto& r : records) {
    if (std::none_of(out.begin(), out.end(), [&](const auto& l) { return l.name == r.true_label.name; })) {
      out.push_back({r.true_label.name, static_cast<int>(out.size() + 1)});
    }
  }
  return out;
}

inline ConfusionMatrix confusion(const std::vector<IdentificationRecord>& records, std::vector<GestureLabel> labels) {
  if (records.empty()) throw std::invalid_argument("confusion: no records");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i].name] = i;
  ConfusionMatrix cm(std::move(labels));
  for (const auto& r : records) {
    const auto t = index.find(r.true_label.name);
    if (t == index.end()) throw std::invalid_argument("confusion: unknown true label '" + r.true_label.name + "'");
    if (r.rejected()) {
      cm.add(t->second, std::nullopt);
      continue;
    }
    const auto p = index.find(r.predicted_label.name);
    if (p == index.end()) {
      throw std::invalid_argument("confusion: unknown predicted label '" + r.predicted_label.name + "'");
    }
    cm.add(t->second, p->second);
  }
  return cm;
}

inline ConfusionMatrix confusion(const std::vector<IdentificationRecord>& records) {
  return confusion(records, labels_of(records));
}

/// trace / total; rejections count as errors.
inline double accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

inline double class_accuracy(const ConfusionMatrix& cm, std::size_t truth) {
  const std::size_t n = cm.row_total(truth);
  return n == 0 ? 0.0 : static_cast<double>(cm.at(truth, truth)) / static_cast<double>(n);
}

/// Fraction of unordered record pairs that fall in the same set, correct
/// or incorrect: [C(C-1) + I(I-1)] / [n(n-1)].
inline double agreement_index(const RecognizerResult& r) {
  const auto n = static_cast<double>(r.records.size());
  if (r.records.size() < 2) throw std::invalid_argument("agreement_index: needs at least 2 records");
  const auto c = static_cast<double>(r.correct_count());
  const auto i = n - c;
  return (c * (c - 1.0) + i * (i - 1.0)) / (n * (n - 1.0));
}

/// Restricts coherency to one true label; empty means the whole lexicon.
struct CoherencyScope {
  std::optional<std::string> label;

  static CoherencyScope all() { return {}; }
  static CoherencyScope of(std::string name) { return {std::move(name)}; }
  bool contains(const IdentificationRecord& r) const { return !label || r.true_label.name == *label; }
};

/// Counts of reference records whose correctness the machine shares.
struct CoherencyCounts {
  std::size_t both_correct = 0;
  std::size_t both_incorrect = 0;
  std::size_t reference_total = 0;

  double gamma() const {
    return static_cast<double>(both_correct + both_incorrect) / static_cast<double>(reference_total);
  }
};

/// gamma = (|C_m ∩ C_h| + |I_m ∩ I_h|) / (|C_h| + |I_h|). Membership is by
/// instance id; a wrong answer counts as agreement with any other wrong
/// answer. Each reference record (one rater, one instance) is one element,
/// so a rater panel is weighted per judgment.
inline CoherencyCounts coherency_counts(const RecognizerResult& machine, const RecognizerResult& reference,
                                        const CoherencyScope& scope = {}) {
  std::map<std::string, bool> machine_correct;
  for (const auto& r : machine.records) {
    if (!scope.contains(r)) continue;
    if (!machine_correct.emplace(r.instance_id, r.correct()).second) {
      throw std::invalid_argument("coherency: machine '" + machine.recognizer_id + "' has duplicate instance '" +
                                  r.instance_id + "'");
    }
  }
  CoherencyCounts c;
  std::set<std::string> reference_ids;
  for (const auto& r : reference.records) {
    if (!scope.contains(r)) continue;
    reference_ids.insert(r.instance_id);
    const auto it = machine_correct.find(r.instance_id);
    if (it == machine_correct.end()) {
      throw std::invalid_argument("coherency: instance '" + r.instance_id + "' missing from machine '" +
                                  machine.recognizer_id + "'");
    }
    ++c.reference_total;
    if (it->second && r.correct()) ++c.both_correct;
    if (!it->second && !r.correct()) ++c.both_incorrect;
  }
  if (reference_ids.size() != machine_correct.size()) {
    throw std::invalid_argument("coherency: machine '" + machine.recognizer_id +
                                "' covers instances the reference does not");
  }
  if (c.reference_total == 0) {
    throw std::invalid_argument("coherency: no reference records in scope" + (scope.label ? " '" + *scope.label + "'" : std::string{}));
  }
  return c;
}

inline double coherency(const RecognizerResult& machine, const RecognizerResult& reference,
                        const CoherencyScope& scope = {}) {
  return coherency_counts(machine, reference, scope).gamma();
}

/// Per-gesture coherency for several machines against one reference.
///
/// Two lexicon-level aggregations are kept apart: `pooled` is gamma over all
/// records of a machine, `class_mean` is the unweighted mean of its
/// per-gesture values. `gesture_mean` averages each row across machines.
struct CoherencyReport {
  std::vector<std::string> gestures;
  std::vector<std::string> machines;
  std::vector<std::vector<double>> cells;  // [gesture][machine]
  std::vector<double> gesture_mean;        // per gesture, mean over machines
  std::vector<double> pooled;              // per machine
  std::vector<double> class_mean;          // per machine
  double pooled_mean = 0.0;
  double class_mean_mean = 0.0;
};

inline CoherencyReport coherency_report(const std::vector<RecognizerResult>& machines,
                                        const RecognizerResult& reference,
                                        const std::vector<GestureLabel>& labels) {
  if (machines.empty()) throw std::invalid_argument("coherency_report: no machines");
  CoherencyReport rep;
  for (const auto& l : labels) rep.gestures.push_back(l.name);
  for (const auto& m : machines) rep.machines.push_back(m.recognizer_id);
  const double nm = static_cast<double>(machines.size());
  for (const auto& g : rep.gestures) {
    std::vector<double> row;
    double sum = 0.0;
    for (const auto& m : machines) {
      row.push_back(coherency(m, reference, CoherencyScope::of(g)));
      sum += row.back();
    }
    rep.cells.push_back(std::move(row));
    rep.gesture_mean.push_back(sum / nm);
  }
  for (std::size_t k = 0; k < machines.size(); ++k) {
    rep.pooled.push_back(coherency(machines[k], reference));
    double sum = 0.0;
    for (const auto& row : rep.cells) sum += row[k];
    rep.class_mean.push_back(sum / static_cast<double>(rep.cells.size()));
    rep.pooled_mean += rep.pooled.back() / nm;
    rep.class_mean_mean += rep.class_mean.back() / nm;
  }
  return rep;
}

}  // namespace oneshot
