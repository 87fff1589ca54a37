#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "oneshot/classifiers/model.hpp"

namespace oneshot {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline json codebook_json(const Codebook& cb) { return {{"dim", cb.dim}, {"centroids", cb.centroids}}; }

inline Codebook codebook_from(const json& j) {
  Codebook cb;
  cb.dim = j.at("dim").get<std::size_t>();
  cb.centroids = j.at("centroids").get<std::vector<double>>();
  if (cb.dim == 0 || cb.centroids.size() % cb.dim != 0) throw std::invalid_argument("model: malformed codebook");
  return cb;
}

inline json sequence_json(const FeatureSequence& s) { return {{"dim", s.dim}, {"values", s.values}}; }

inline FeatureSequence sequence_from(const json& j) {
  FeatureSequence s;
  s.dim = j.at("dim").get<std::size_t>();
  s.values = j.at("values").get<std::vector<double>>();
  return s;
}

}  // namespace detail

/// Versioned model document; doubles are written with round-trip precision
/// so a reloaded model classifies bit-identically.
inline nlohmann::json model_to_json(const TrainedModel& m) {
  using detail::json;
  json j;
  j["format"] = "oneshot-model";
  j["version"] = kModelFormatVersion;
  j["variant"] = to_string(m.variant);
  json labels = json::array();
  for (const auto& l : m.labels) labels.push_back({{"name", l.name}, {"index", l.index}});
  j["labels"] = labels;
  j["features"] = {{"length", m.features.length}, {"normalize", m.features.normalize}};
  j["seed"] = m.seed;
  j["hyperparameters"] = m.hyperparameters;

  json p;
  switch (m.variant) {
    case Variant::Hmm: {
      const auto& h = std::get<HmmModel>(m.params);
      p["codebook"] = detail::codebook_json(h.codebook);
      json models = json::array();
      for (const auto& hmm : h.models) {
        models.push_back({{"states", hmm.states},
                          {"symbols", hmm.symbols},
                          {"initial", hmm.initial},
                          {"transition", hmm.transition},
                          {"emission", hmm.emission}});
      }
      p["models"] = models;
      break;
    }
    case Variant::Svm: {
      const auto& s = std::get<SvmModel>(m.params);
      p["gamma"] = s.gamma;
      p["support"] = s.support;
      p["coef"] = s.coef;
      p["rho"] = s.rho;
      break;
    }
    case Variant::Crf: {
      const auto& c = std::get<CrfModel>(m.params);
      p["codebook"] = detail::codebook_json(c.codebook);
      p["padding"] = c.padding;
      p["labels"] = c.crf.labels;
      p["features"] = c.crf.features;
      p["weights"] = c.crf.weights;
      break;
    }
    case Variant::Dtw: {
      const auto& d = std::get<DtwModel>(m.params);
      p["band"] = d.band;
      json templates = json::array();
      for (const auto& t : d.templates) templates.push_back(detail::sequence_json(t));
      p["templates"] = templates;
      p["template_labels"] = d.template_labels;
      break;
    }
  }
  j["parameters"] = p;
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "oneshot-model") throw std::invalid_argument("not a model document");
  if (j.at("version").get<int>() != kModelFormatVersion) {
    throw std::invalid_argument("unsupported model version " + j.at("version").dump());
  }
  TrainedModel m;
  m.variant = parse_variant(j.at("variant").get<std::string>());
  for (const auto& l : j.at("labels")) m.labels.push_back({l.at("name").get<std::string>(), l.at("index").get<int>()});
  m.features.length = j.at("features").at("length").get<std::size_t>();
  m.features.normalize = j.at("features").at("normalize").get<bool>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.hyperparameters = j.at("hyperparameters");
  const auto& p = j.at("parameters");
  switch (m.variant) {
    case Variant::Hmm: {
      HmmModel h;
      h.codebook = detail::codebook_from(p.at("codebook"));
      for (const auto& mj : p.at("models")) {
        DiscreteHmm hmm(mj.at("states").get<std::size_t>(), mj.at("symbols").get<std::size_t>());
        hmm.initial = mj.at("initial").get<std::vector<double>>();
        hmm.transition = mj.at("transition").get<std::vector<double>>();
        hmm.emission = mj.at("emission").get<std::vector<double>>();
        if (hmm.initial.size() != hmm.states || hmm.transition.size() != hmm.states * hmm.states ||
            hmm.emission.size() != hmm.states * hmm.symbols) {
          throw std::invalid_argument("model: malformed HMM matrices");
        }
        h.models.push_back(std::move(hmm));
      }
      m.params = std::move(h);
      break;
    }
    case Variant::Svm: {
      SvmModel s;
      s.gamma = p.at("gamma").get<double>();
      s.support = p.at("support").get<std::vector<std::vector<double>>>();
      s.coef = p.at("coef").get<std::vector<std::vector<double>>>();
      s.rho = p.at("rho").get<std::vector<double>>();
      if (!(s.gamma > 0.0)) throw std::invalid_argument("model: SVM kernel bandwidth must be positive");
      m.params = std::move(s);
      break;
    }
    case Variant::Crf: {
      CrfModel c;
      c.codebook = detail::codebook_from(p.at("codebook"));
      c.padding = p.at("padding").get<std::size_t>();
      c.crf.labels = p.at("labels").get<std::size_t>();
      c.crf.features = p.at("features").get<std::size_t>();
      c.crf.weights = p.at("weights").get<std::vector<double>>();
      if (c.crf.weights.size() != LinearChainCrf::parameter_count(c.crf.labels, c.crf.features)) {
        throw std::invalid_argument("model: CRF weight count mismatch");
      }
      m.params = std::move(c);
      break;
    }
    case Variant::Dtw: {
      DtwModel d;
      d.band = p.at("band").get<double>();
      for (const auto& t : p.at("templates")) d.templates.push_back(detail::sequence_from(t));
      d.template_labels = p.at("template_labels").get<std::vector<std::size_t>>();
      if (d.templates.empty()) throw std::invalid_argument("model: empty DTW template store");
      m.params = std::move(d);
      break;
    }
  }
  return m;
}

}  // namespace oneshot
