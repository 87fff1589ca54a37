#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "oneshot/classifiers/crf.hpp"
#include "oneshot/classifiers/dtw.hpp"
#include "oneshot/classifiers/features.hpp"
#include "oneshot/classifiers/hmm.hpp"
#include "oneshot/classifiers/kmeans.hpp"
#include "oneshot/classifiers/svm.hpp"
#include "oneshot/core/types.hpp"
#include "oneshot/synthesis/rng.hpp"

namespace oneshot {

enum class Variant { Hmm, Svm, Crf, Dtw };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Hmm: return "HMM";
    case Variant::Svm: return "SVM";
    case Variant::Crf: return "CRF";
    case Variant::Dtw: return "DTW";
  }
  return "?";
}

inline Variant parse_variant(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (s == "HMM") return Variant::Hmm;
  if (s == "SVM") return Variant::Svm;
  if (s == "CRF") return Variant::Crf;
  if (s == "DTW") return Variant::Dtw;
  throw std::invalid_argument("unknown classifier '" + s + "'");
}

inline const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::Hmm, Variant::Svm, Variant::Crf, Variant::Dtw};
  return v;
}

struct HmmConfig {
  std::size_t states = 5;
  std::size_t codebook_size = 32;
  BaumWelchConfig baum_welch;
};

struct SvmConfig {
  double c = 10.0;
  double gamma = 0.0;  // <= 0 selects 1 / d
  double tolerance = 1e-3;
};

struct CrfConfig {
  std::size_t codebook_size = 32;
  std::size_t padding = 5;  // zero-motion O frames on each side
  CrfTrainConfig train;
};

struct DtwConfig {
  double band = 0.2;  // Sakoe-Chiba half-width as a fraction of length; 0 disables
  bool medoid_only = false;
};

struct ClassifierConfig {
  FeatureConfig features;
  HmmConfig hmm;
  SvmConfig svm;
  CrfConfig crf;
  DtwConfig dtw;
  std::uint64_t seed = 7;
};

struct HmmModel {
  Codebook codebook;
  std::vector<DiscreteHmm> models;     // one per class
  std::vector<BaumWelchTrace> traces;  // training diagnostics, not serialized
};

struct SvmModel {
  double gamma = 1.0;
  std::vector<std::vector<double>> support;  // retained training vectors
  std::vector<std::vector<double>> coef;     // [class][support] = alpha * y
  std::vector<double> rho;                   // per class
  std::vector<SmoResult> solver;             // training diagnostics, not serialized
};

struct CrfModel {
  Codebook codebook;
  std::size_t padding = 5;
  LinearChainCrf crf;
  CrfTrainTrace trace;  // not serialized
};

struct DtwModel {
  double band = 0.2;
  std::vector<FeatureSequence> templates;
  std::vector<std::size_t> template_labels;
};

struct Prediction {
  GestureLabel label;
  double score = 0.0;          // log-likelihood, margin, path score or negative distance
  std::vector<double> scores;  // per class, lexicon order
  bool rejected = false;       // CRF decoded an all-O path
};

struct TrainedModel {
  Variant variant = Variant::Dtw;
  std::vector<GestureLabel> labels;
  FeatureConfig features;
  std::uint64_t seed = 0;
  nlohmann::json hyperparameters;
  std::variant<HmmModel, SvmModel, CrfModel, DtwModel> params;
};

/// Index of the maximum; ties go to the lowest index.
inline std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

namespace detail {

inline void require_classes(const std::vector<LabeledSequence>& data, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (const auto& d : data) {
    if (d.label >= classes) throw std::invalid_argument("training label out of range");
    if (!d.sequence.finite()) throw std::invalid_argument("non-finite features in training data");
    if (d.sequence.length() == 0) throw std::invalid_argument("empty training sequence");
    ++counts[d.label];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) throw std::invalid_argument("class " + std::to_string(c + 1) + " has no training sequences");
  }
}

inline std::vector<FeatureSequence> sequences_of(const std::vector<LabeledSequence>& data) {
  std::vector<FeatureSequence> out;
  for (const auto& d : data) out.push_back(d.sequence);
  return out;
}

inline FeatureSequence pad_sequence(const FeatureSequence& s, std::size_t padding) {
  if (padding == 0) return s;
  const std::size_t half = s.dim / 2;  // positions first, velocities second
  std::vector<double> head(s[0].begin(), s[0].end());
  std::vector<double> tail(s[s.length() - 1].begin(), s[s.length() - 1].end());
  std::fill(head.begin() + static_cast<std::ptrdiff_t>(half), head.end(), 0.0);
  std::fill(tail.begin() + static_cast<std::ptrdiff_t>(half), tail.end(), 0.0);
  FeatureSequence out;
  out.dim = s.dim;
  for (std::size_t i = 0; i < padding; ++i) out.push_back(head);
  out.values.insert(out.values.end(), s.values.begin(), s.values.end());
  for (std::size_t i = 0; i < padding; ++i) out.push_back(tail);
  return out;
}

inline std::vector<double> flatten(const FeatureSequence& s) { return s.values; }

}  // namespace detail

// ---------------------------------------------------------------- HMM

inline HmmModel train_hmm(const std::vector<LabeledSequence>& data, std::size_t classes, const HmmConfig& cfg,
                          std::uint64_t seed) {
  detail::require_classes(data, classes);
  HmmModel m;
  m.codebook = fit_codebook(detail::sequences_of(data), cfg.codebook_size, derive_key({seed, 1}));
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::vector<int>> obs;
    for (const auto& d : data) {
      if (d.label == c) obs.push_back(m.codebook.quantize(d.sequence));
    }
    DiscreteHmm hmm = init_left_to_right(cfg.states, m.codebook.size(), obs, cfg.baum_welch.floor);
    m.traces.push_back(baum_welch(hmm, obs, HmmStructure::left_to_right(cfg.states), cfg.baum_welch));
    m.models.push_back(std::move(hmm));
  }
  return m;
}

inline std::vector<double> hmm_scores(const HmmModel& m, const FeatureSequence& s) {
  if (s.dim != m.codebook.dim) throw std::invalid_argument("hmm: feature dimension does not match codebook");
  const auto obs = m.codebook.quantize(s);
  std::vector<double> scores;
  for (const auto& hmm : m.models) scores.push_back(forward_log_likelihood(hmm, obs));
  return scores;
}

// ---------------------------------------------------------------- SVM

inline SvmModel train_svm(const std::vector<LabeledSequence>& data, std::size_t classes, const SvmConfig& cfg) {
  if (classes < 2) throw std::invalid_argument("svm: needs at least 2 classes");
  detail::require_classes(data, classes);
  std::vector<std::vector<double>> xs;
  for (const auto& d : data) {
    xs.push_back(detail::flatten(d.sequence));
    if (xs.back().size() != xs.front().size()) {
      throw std::invalid_argument("svm: inputs must have a fixed length (resample before training)");
    }
  }
  SvmModel m;
  const double d = static_cast<double>(xs.front().size());
  m.gamma = cfg.gamma > 0.0 ? cfg.gamma : 1.0 / d;
  const auto kernel = gram_matrix(xs, m.gamma);

  std::vector<std::vector<double>> coef_all;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> y(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) y[i] = data[i].label == c ? 1.0 : -1.0;
    SmoResult r = solve_smo(kernel, y, {cfg.c, cfg.tolerance});
    std::vector<double> coef(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) coef[i] = r.alpha[i] * y[i];
    coef_all.push_back(std::move(coef));
    m.rho.push_back(r.rho);
    m.solver.push_back(std::move(r));
  }
  m.coef.assign(classes, {});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    bool used = false;
    for (std::size_t c = 0; c < classes; ++c) used = used || coef_all[c][i] != 0.0;
    if (!used) continue;
    m.support.push_back(xs[i]);
    for (std::size_t c = 0; c < classes; ++c) m.coef[c].push_back(coef_all[c][i]);
  }
  return m;
}

inline std::vector<double> svm_scores(const SvmModel& m, const FeatureSequence& s) {
  const auto x = detail::flatten(s);
  if (!m.support.empty() && x.size() != m.support.front().size()) {
    throw std::invalid_argument("svm: input dimension does not match the model");
  }
  std::vector<double> k(m.support.size());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = rbf_kernel(x, m.support[i], m.gamma);
  std::vector<double> scores;
  for (std::size_t c = 0; c < m.coef.size(); ++c) {
    double f = -m.rho[c];
    for (std::size_t i = 0; i < k.size(); ++i) f += m.coef[c][i] * k[i];
    scores.push_back(f);
  }
  return scores;
}

// ---------------------------------------------------------------- CRF

/// BIO label ids: 0 is O, class c (0-based) has B = 1 + 2c and I = 2 + 2c.
inline int bio_begin(std::size_t c) { return static_cast<int>(1 + 2 * c); }
inline int bio_inside(std::size_t c) { return static_cast<int>(2 + 2 * c); }
inline std::size_t bio_class(int label) { return static_cast<std::size_t>(label - 1) / 2; }

/// Codeword identity and codeword bigram features (with a start marker).
inline CrfSequence crf_observations(const Codebook& cb, const FeatureSequence& s) {
  const auto words = cb.quantize(s);
  const int k = static_cast<int>(cb.size());
  CrfSequence out;
  for (std::size_t t = 0; t < words.size(); ++t) {
    const int bigram = t == 0 ? k + k * k + words[t] : k + words[t - 1] * k + words[t];
    out.features.push_back({words[t], bigram});
  }
  return out;
}

inline std::size_t crf_feature_count(std::size_t k) { return k + k * k + k; }

inline CrfModel train_crf(const std::vector<LabeledSequence>& data, std::size_t classes, const CrfConfig& cfg,
                          std::uint64_t seed) {
  detail::require_classes(data, classes);
  CrfModel m;
  m.padding = cfg.padding;
  std::vector<FeatureSequence> padded;
  for (const auto& d : data) padded.push_back(detail::pad_sequence(d.sequence, cfg.padding));
  m.codebook = fit_codebook(padded, cfg.codebook_size, derive_key({seed, 2}));
  m.crf = LinearChainCrf(1 + 2 * classes, crf_feature_count(m.codebook.size()));

  std::vector<CrfSequence> train;
  for (std::size_t i = 0; i < data.size(); ++i) {
    CrfSequence s = crf_observations(m.codebook, padded[i]);
    const std::size_t inner = data[i].sequence.length();
    s.labels.assign(s.features.size(), 0);
    for (std::size_t t = 0; t < inner; ++t) {
      s.labels[cfg.padding + t] = t == 0 ? bio_begin(data[i].label) : bio_inside(data[i].label);
    }
    train.push_back(std::move(s));
  }
  m.trace = train_crf_weights(m.crf, train, cfg.train);
  return m;
}

struct CrfDecision {
  std::vector<double> votes;  // frames decoded as B-c or I-c, per class
  double path_score = 0.0;
  bool rejected = false;
};

inline CrfDecision crf_decide(const CrfModel& m, const FeatureSequence& s, std::size_t classes) {
  if (s.dim != m.codebook.dim) throw std::invalid_argument("crf: feature dimension does not match codebook");
  const auto decoded = m.crf.viterbi(crf_observations(m.codebook, detail::pad_sequence(s, m.padding)));
  CrfDecision d;
  d.votes.assign(classes, 0.0);
  d.path_score = decoded.score;
  bool any = false;
  for (int y : decoded.labels) {
    if (y == 0) continue;
    d.votes[bio_class(y)] += 1.0;
    any = true;
  }
  d.rejected = !any;
  return d;
}

// ---------------------------------------------------------------- DTW

inline DtwModel train_dtw(const std::vector<LabeledSequence>& data, std::size_t classes, const DtwConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("dtw: empty template store");
  detail::require_classes(data, classes);
  DtwModel m;
  m.band = cfg.band;
  if (!cfg.medoid_only) {
    for (const auto& d : data) {
      m.templates.push_back(d.sequence);
      m.template_labels.push_back(d.label);
    }
    return m;
  }
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<const FeatureSequence*> members;
    for (const auto& d : data) {
      if (d.label == c) members.push_back(&d.sequence);
    }
    std::size_t best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < members.size(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < members.size(); ++j) {
        if (i != j) sum += dtw_distance(*members[i], *members[j], cfg.band);
      }
      if (sum < best_sum) best_sum = sum, best = i;
    }
    m.templates.push_back(*members[best]);
    m.template_labels.push_back(c);
  }
  return m;
}

inline std::vector<double> dtw_scores(const DtwModel& m, const FeatureSequence& s, std::size_t classes) {
  if (m.templates.empty()) throw std::invalid_argument("dtw: empty template store");
  if (s.dim != m.templates.front().dim) throw std::invalid_argument("dtw: feature dimension does not match templates");
  std::vector<double> scores(classes, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m.templates.size(); ++i) {
    const double d = dtw_distance(s, m.templates[i], m.band);
    auto& sc = scores[m.template_labels[i]];
    sc = std::max(sc, -d);
  }
  return scores;
}

// ---------------------------------------------------------------- common contract

inline std::vector<LabeledSequence> featurize_all(const std::vector<LabeledInstance>& data,
                                                  const std::vector<GestureLabel>& labels,
                                                  const FeatureConfig& features) {
  std::vector<LabeledSequence> out;
  for (const auto& inst : data) {
    auto it = std::find_if(labels.begin(), labels.end(),
                           [&](const GestureLabel& l) { return l.name == inst.label.name; });
    if (it == labels.end()) throw std::invalid_argument("training label '" + inst.label.name + "' not in lexicon");
    out.push_back({featurize(inst.trajectory, features), static_cast<std::size_t>(it - labels.begin())});
  }
  return out;
}

inline nlohmann::json hyperparameters_json(Variant v, const ClassifierConfig& cfg) {
  switch (v) {
    case Variant::Hmm:
      return {{"states", cfg.hmm.states},
              {"codebook_size", cfg.hmm.codebook_size},
              {"max_iterations", cfg.hmm.baum_welch.max_iterations},
              {"tolerance", cfg.hmm.baum_welch.tolerance},
              {"floor", cfg.hmm.baum_welch.floor}};
    case Variant::Svm:
      return {{"c", cfg.svm.c}, {"gamma", cfg.svm.gamma}, {"tolerance", cfg.svm.tolerance}};
    case Variant::Crf:
      return {{"codebook_size", cfg.crf.codebook_size},
              {"padding", cfg.crf.padding},
              {"l2", cfg.crf.train.l2},
              {"max_iterations", cfg.crf.train.max_iterations}};
    case Variant::Dtw:
      return {{"band", cfg.dtw.band}, {"medoid_only", cfg.dtw.medoid_only}};
  }
  return {};
}

/// Trains one classifier variant on labeled trajectories. Every trajectory
/// goes through the same featurization used later by `classify`.
inline TrainedModel train(Variant variant, const std::vector<LabeledInstance>& data,
                          const std::vector<GestureLabel>& labels, const ClassifierConfig& cfg) {
  TrainedModel m;
  m.variant = variant;
  m.labels = labels;
  m.features = cfg.features;
  m.seed = cfg.seed;
  m.hyperparameters = hyperparameters_json(variant, cfg);
  const auto seqs = featurize_all(data, labels, cfg.features);
  const std::size_t n = labels.size();
  switch (variant) {
    case Variant::Hmm: m.params = train_hmm(seqs, n, cfg.hmm, cfg.seed); break;
    case Variant::Svm: m.params = train_svm(seqs, n, cfg.svm); break;
    case Variant::Crf: m.params = train_crf(seqs, n, cfg.crf, cfg.seed); break;
    case Variant::Dtw: m.params = train_dtw(seqs, n, cfg.dtw); break;
  }
  return m;
}

inline Prediction classify(const TrainedModel& m, const Trajectory& traj) {
  const FeatureSequence s = featurize(traj, m.features);
  const std::size_t n = m.labels.size();
  Prediction p;
  switch (m.variant) {
    case Variant::Hmm: p.scores = hmm_scores(std::get<HmmModel>(m.params), s); break;
    case Variant::Svm: p.scores = svm_scores(std::get<SvmModel>(m.params), s); break;
    case Variant::Dtw: p.scores = dtw_scores(std::get<DtwModel>(m.params), s, n); break;
    case Variant::Crf: {
      auto d = crf_decide(std::get<CrfModel>(m.params), s, n);
      p.scores = std::move(d.votes);
      p.rejected = d.rejected;
      p.score = d.path_score;
      break;
    }
  }
  const std::size_t best = argmax(p.scores);
  p.label = m.labels[best];
  if (m.variant != Variant::Crf) p.score = p.scores[best];
  return p;
}

}  // namespace oneshot
