#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "oneshot/core/gist.hpp"
#include "oneshot/core/preprocess.hpp"
#include "oneshot/core/types.hpp"
#include "oneshot/synthesis/rng.hpp"

namespace oneshot {

struct SynthesisParams {
  std::size_t m_des = 20;
  double spatial_noise_gain = 1.0;
  double temporal_jitter = 0.1;  // in [0, 0.5)
  double length_jitter = 0.1;    // in [0, 0.5)
  std::size_t base_length = 40;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (m_des < 1) throw std::invalid_argument("synthesis: m_des must be >= 1");
    if (base_length < 4) throw std::invalid_argument("synthesis: base_length must be >= 4");
    if (!(spatial_noise_gain >= 0.0)) throw std::invalid_argument("synthesis: spatial_noise_gain must be >= 0");
    if (!(temporal_jitter >= 0.0 && temporal_jitter < 0.5)) {
      throw std::invalid_argument("synthesis: temporal_jitter must be in [0, 0.5)");
    }
    if (!(length_jitter >= 0.0 && length_jitter < 0.5)) {
      throw std::invalid_argument("synthesis: length_jitter must be in [0, 0.5)");
    }
  }
};

struct Provenance {
  std::string gist_id;
  std::size_t sample_index = 0;
  std::uint64_t rng_seed = 0;
  bool synthetic = true;  // false for the included seed observation

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct SyntheticSample {
  Trajectory trajectory;
  GestureLabel label;
  Provenance provenance;

  std::string id() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", provenance.sample_index);
    return label.name + "-" + buf;
  }
  LabeledInstance instance() const { return {id(), trajectory, label}; }
};

/// Quintic minimum-jerk blend s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5:
/// zero velocity and acceleration at both ends.
constexpr double minimum_jerk_profile(double tau) {
  return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
}

/// Piecewise minimum-jerk curve through `placeholders` evaluated at
/// normalized time `fraction`. Placeholders must have increasing times.
inline Point3 minimum_jerk(const std::vector<Placeholder>& placeholders, double fraction) {
  if (fraction <= placeholders.front().time_fraction) return placeholders.front().position;
  if (fraction >= placeholders.back().time_fraction) return placeholders.back().position;
  std::size_t q = 0;
  while (q + 2 < placeholders.size() && fraction >= placeholders[q + 1].time_fraction) ++q;
  const Placeholder& a = placeholders[q];
  const Placeholder& b = placeholders[q + 1];
  const double tau = (fraction - a.time_fraction) / (b.time_fraction - a.time_fraction);
  return a.position + (b.position - a.position) * minimum_jerk_profile(tau);
}

/// Number of frames for a sample given the length-jitter draw u in [-1, 1].
inline std::size_t jittered_length(const SynthesisParams& params, double u) {
  const double n = std::round(static_cast<double>(params.base_length) * (1.0 + u * params.length_jitter));
  return std::max<std::size_t>(4, static_cast<std::size_t>(n));
}

/// Placeholders after spatial and temporal perturbation.
///
/// Draw order per call: one length uniform (consumed by the caller), then for
/// each effector all 3 axis normals per placeholder, then one uniform per
/// interior placeholder for its time shift.
inline std::vector<std::vector<Placeholder>> perturb_gist(const GestureGist& gist,
                                                          const SynthesisParams& params, Rng& rng) {
  std::vector<std::vector<Placeholder>> out = gist.effectors;
  for (auto& list : out) {
    for (Placeholder& ph : list) {
      for (std::size_t a = 0; a < 3; ++a) {
        const double sd = std::sqrt(ph.variance[a] * params.spatial_noise_gain);
        const double draw = rng.normal();
        ph.position[a] += sd * draw;
      }
    }
    const auto original = list;
    for (std::size_t q = 1; q + 1 < list.size(); ++q) {
      const double u = rng.uniform(-1.0, 1.0);
      const double gap = u < 0.0 ? original[q].time_fraction - original[q - 1].time_fraction
                                 : original[q + 1].time_fraction - original[q].time_fraction;
      list[q].time_fraction = original[q].time_fraction + u * params.temporal_jitter * gap;
    }
  }
  return out;
}

/// One artificial instance of the gist's class. Randomness is keyed by
/// (rng_seed, label index, sample_index) only.
inline SyntheticSample synthesize_one(const GestureGist& gist, const SynthesisParams& params,
                                      std::size_t sample_index) {
  params.validate();
  if (sample_index < 1) throw std::invalid_argument("synthesize_one: sample_index must be >= 1");
  if (gist.effectors.empty()) throw std::invalid_argument("synthesize_one: empty gist");
  for (const auto& list : gist.effectors) {
    if (list.size() < 2) throw std::invalid_argument("synthesize_one: gist needs >= 2 placeholders");
  }

  Rng rng(derive_key({params.rng_seed, static_cast<std::uint64_t>(gist.source_label.index),
                      static_cast<std::uint64_t>(sample_index)}));
  const std::size_t n = jittered_length(params, rng.uniform(-1.0, 1.0));
  const auto placeholders = perturb_gist(gist, params, rng);

  const double duration = gist.duration > 0.0 ? gist.duration : 1.0;
  const auto times = uniform_times(0.0, duration, n);
  std::vector<Frame> frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double fraction = static_cast<double>(i) / static_cast<double>(n - 1);
    frames[i].time = times[i];
    for (const auto& list : placeholders) frames[i].points.push_back(minimum_jerk(list, fraction));
  }
  return {Trajectory(placeholders.size(), std::move(frames)), gist.source_label,
          {gist.source_label.name, sample_index, params.rng_seed, true}};
}

/// m_des samples per class: sample 1 is the resampled seed observation
/// itself, samples 2..m_des are synthetic.
inline std::vector<SyntheticSample> generate_dataset(const Lexicon& lex,
                                                     const std::vector<GestureGist>& gists,
                                                     const SynthesisParams& params) {
  params.validate();
  std::vector<SyntheticSample> out;
  out.reserve(lex.size() * params.m_des);
  for (std::size_t c = 0; c < lex.size(); ++c) {
    const GestureLabel& label = lex.labels[c];
    const GestureGist* gist = nullptr;
    for (const auto& g : gists) {
      if (g.source_label == label) gist = &g;
    }
    if (gist == nullptr) throw std::invalid_argument("generate_dataset: missing gist for '" + label.name + "'");

    out.push_back({rebase_time(resample(lex.seeds[c], params.base_length)), label,
                   {label.name, 1, params.rng_seed, false}});
    for (std::size_t k = 2; k <= params.m_des; ++k) out.push_back(synthesize_one(*gist, params, k));
  }
  return out;
}

}  // namespace oneshot
