#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oneshot/classifiers/dtw.hpp"
#include "oneshot/core/gist.hpp"
#include "oneshot/synthesis/io.hpp"
#include "oneshot/synthesis/synthesis.hpp"
#include "test_support.hpp"

namespace oneshot {
namespace {

using testing::random_walk;

GestureGist toy_gist(std::array<double, 3> variance = {0.01, 0.04, 0.0025}) {
  GestureGist g;
  g.source_label = {"wave", 3};
  g.duration = 2.0;
  g.source_length = 40;
  g.effectors = {{{{0, 0, 0}, variance, 0.0},
                  {{1, 0.5, 0}, variance, 0.3},
                  {{0.5, 1, 0.2}, variance, 0.7},
                  {{0, 0, 1}, variance, 1.0}}};
  return g;
}

SynthesisParams quiet() {
  SynthesisParams p;
  p.spatial_noise_gain = 0.0;
  p.temporal_jitter = 0.0;
  p.length_jitter = 0.0;
  return p;
}

TEST(MinimumJerk, ProfileBoundaryConditions) {
  EXPECT_EQ(minimum_jerk_profile(0.0), 0.0);
  EXPECT_EQ(minimum_jerk_profile(1.0), 1.0);
  EXPECT_DOUBLE_EQ(minimum_jerk_profile(0.5), 0.5);
  // Velocity and acceleration vanish at both ends (finite differences).
  const double h = 1e-4;
  EXPECT_NEAR((minimum_jerk_profile(h) - minimum_jerk_profile(0.0)) / h, 0.0, 1e-6);
  EXPECT_NEAR((minimum_jerk_profile(1.0) - minimum_jerk_profile(1.0 - h)) / h, 0.0, 1e-6);
}

TEST(Synthesize, ZeroNoisePassesThroughPlaceholders) {
  auto p = quiet();
  p.base_length = 101;  // fractions 0.3 and 0.7 land on frames 30 and 70
  const auto g = toy_gist();
  const auto s = synthesize_one(g, p, 2);
  ASSERT_EQ(s.trajectory.length(), 101u);
  for (const auto& ph : g.effectors[0]) {
    const auto i = static_cast<std::size_t>(std::lround(ph.time_fraction * 100.0));
    EXPECT_LT(distance(s.trajectory.point(i, 0), ph.position), 1e-9);
  }
  EXPECT_DOUBLE_EQ(s.trajectory.duration(), 2.0);
}

TEST(Synthesize, DeterministicPerSeedLabelIndex) {
  SynthesisParams p;
  const auto g = toy_gist();
  const auto a = synthesize_one(g, p, 5);
  const auto b = synthesize_one(g, p, 5);
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_EQ(a.provenance, b.provenance);
  EXPECT_FALSE(a.trajectory == synthesize_one(g, p, 6).trajectory);
  p.rng_seed = 2;
  EXPECT_FALSE(a.trajectory == synthesize_one(g, p, 5).trajectory);
}

TEST(Synthesize, PlaceholderNoiseMatchesGaussianParameterization) {
  auto p = quiet();
  p.spatial_noise_gain = 1.0;
  const auto g = toy_gist();
  const std::size_t n = 10000;
  std::array<double, 3> sum{}, sq{};
  for (std::size_t k = 1; k <= n; ++k) {
    // The first frame sits exactly on the first (perturbed) placeholder.
    const Point3 d = synthesize_one(g, p, k).trajectory.point(0, 0) - g.effectors[0][0].position;
    for (std::size_t a = 0; a < 3; ++a) sum[a] += d[a], sq[a] += d[a] * d[a];
  }
  for (std::size_t a = 0; a < 3; ++a) {
    const double mean = sum[a] / n;
    const double sd = std::sqrt(sq[a] / n - mean * mean);
    const double expected = std::sqrt(g.effectors[0][0].variance[a]);
    EXPECT_NEAR(sd / expected, 1.0, 0.05) << "axis " << a;
    EXPECT_LT(std::abs(mean), 3.0 * expected / std::sqrt(double(n))) << "axis " << a;
  }
}

TEST(Synthesize, NoiseScalesWithGain) {
  auto p = quiet();
  p.spatial_noise_gain = 4.0;
  const auto g = toy_gist();
  double sq = 0.0;
  const std::size_t n = 4000;
  for (std::size_t k = 1; k <= n; ++k) {
    const double d = synthesize_one(g, p, k).trajectory.point(0, 0).y;
    sq += d * d;
  }
  EXPECT_NEAR(std::sqrt(sq / n), std::sqrt(0.04 * 4.0), 0.02);
}

TEST(Synthesize, PerturbedTimesStayOrderedProperty) {
  SynthesisParams p;
  p.temporal_jitter = 0.49;
  const auto g = toy_gist();
  for (std::uint64_t k = 0; k < 2000; ++k) {
    Rng rng(derive_key({99, k}));
    const auto out = perturb_gist(g, p, rng);
    const auto& list = out[0];
    EXPECT_EQ(list.front().time_fraction, 0.0);
    EXPECT_EQ(list.back().time_fraction, 1.0);
    for (std::size_t q = 1; q < list.size(); ++q) EXPECT_LT(list[q - 1].time_fraction, list[q].time_fraction);
    for (std::size_t q = 1; q + 1 < list.size(); ++q) {
      const double lo = g.effectors[0][q - 1].time_fraction, hi = g.effectors[0][q + 1].time_fraction;
      const double orig = g.effectors[0][q].time_fraction;
      EXPECT_GE(list[q].time_fraction, orig - 0.49 * (orig - lo) - 1e-15);
      EXPECT_LE(list[q].time_fraction, orig + 0.49 * (hi - orig) + 1e-15);
    }
  }
}

TEST(Synthesize, LengthStaysWithinJitterBounds) {
  SynthesisParams p;
  p.length_jitter = 0.3;
  p.base_length = 40;
  const auto g = toy_gist();
  std::size_t lo = 1000, hi = 0;
  for (std::size_t k = 1; k <= 500; ++k) {
    const std::size_t len = synthesize_one(g, p, k).trajectory.length();
    lo = std::min(lo, len);
    hi = std::max(hi, len);
  }
  EXPECT_GE(lo, 28u);
  EXPECT_LE(hi, 52u);
  EXPECT_LT(lo, 32u);  // the range is actually explored
  EXPECT_GT(hi, 48u);
}

TEST(Synthesize, RejectsBadArguments) {
  SynthesisParams p;
  EXPECT_THROW(synthesize_one(toy_gist(), p, 0), std::invalid_argument);
  p.temporal_jitter = 0.5;
  EXPECT_THROW(synthesize_one(toy_gist(), p, 1), std::invalid_argument);
  p = {};
  p.base_length = 3;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.m_des = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

// Seed built as a minimum-jerk curve through three points, with the middle
// one at the exact center frame so gist extraction recovers it.
Trajectory minimum_jerk_seed(std::size_t frames) {
  const std::vector<Placeholder> via{{{0, 0, 0}, {}, 0.0}, {{1, 1, 0}, {}, 0.5}, {{2, 0, 0.5}, {}, 1.0}};
  std::vector<Point3> pts;
  for (std::size_t i = 0; i < frames; ++i) pts.push_back(minimum_jerk(via, double(i) / double(frames - 1)));
  return Trajectory::from_points(pts, 0.05);
}

TEST(Synthesize, ZeroNoiseReproducesMinimumJerkSeed) {
  const auto seed = minimum_jerk_seed(41);
  Lexicon lex(make_labels({"a", "b"}), {seed, seed});
  std::vector<GestureGist> gists;
  for (std::size_t c = 0; c < 2; ++c) gists.push_back(extract_gist(lex.seeds[c], {}, lex.labels[c]));
  ASSERT_EQ(gists[0].size(), 3u);

  auto p = quiet();
  p.base_length = 41;
  p.m_des = 5;
  const auto data = generate_dataset(lex, gists, p);
  const double diag = bounding_box(seed).diagonal();
  const auto reference = rebase_time(resample(seed, 41));
  for (const auto& s : data) EXPECT_LT(trajectory_dtw(s.trajectory, reference), 1e-6 * diag) << s.id();
}

Lexicon random_lexicon(std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> names;
  std::vector<Trajectory> seeds;
  for (std::size_t c = 0; c < classes; ++c) {
    names.push_back("g" + std::to_string(c));
    seeds.push_back(random_walk(rng, 60));
  }
  return Lexicon(make_labels(names), seeds);
}

std::vector<GestureGist> gists_of(const Lexicon& lex) {
  std::vector<GestureGist> out;
  for (std::size_t c = 0; c < lex.size(); ++c) out.push_back(extract_gist(lex.seeds[c], {}, lex.labels[c]));
  return out;
}

TEST(GenerateDataset, EightClassesTwentyEach) {
  const auto lex = random_lexicon(8, 4);
  const auto gists = gists_of(lex);
  SynthesisParams p;
  const auto data = generate_dataset(lex, gists, p);
  ASSERT_EQ(data.size(), 160u);
  for (std::size_t c = 0; c < 8; ++c) {
    std::size_t count = 0;
    for (const auto& s : data) count += s.label == lex.labels[c];
    EXPECT_EQ(count, 20u);
  }
  for (std::size_t c = 0; c < 8; ++c) {
    const auto& first = data[c * 20];
    EXPECT_FALSE(first.provenance.synthetic);
    EXPECT_EQ(first.provenance.sample_index, 1u);
    EXPECT_EQ(first.trajectory, rebase_time(resample(lex.seeds[c], p.base_length)));
    for (std::size_t k = 1; k < 20; ++k) EXPECT_TRUE(data[c * 20 + k].provenance.synthetic);
  }
}

TEST(GenerateDataset, SingleSampleIsJustTheSeeds) {
  const auto lex = random_lexicon(3, 8);
  SynthesisParams p;
  p.m_des = 1;
  const auto data = generate_dataset(lex, gists_of(lex), p);
  ASSERT_EQ(data.size(), 3u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(data[c].trajectory, rebase_time(resample(lex.seeds[c], 40)));
}

TEST(GenerateDataset, DeterministicAndOrderIndependent) {
  const auto lex = random_lexicon(4, 12);
  auto gists = gists_of(lex);
  SynthesisParams p;
  const auto a = generate_dataset(lex, gists, p);
  std::reverse(gists.begin(), gists.end());
  const auto b = generate_dataset(lex, gists, p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].trajectory, b[i].trajectory);
    EXPECT_EQ(a[i].id(), b[i].id());
  }
}

TEST(GenerateDataset, MissingGistIsRejected) {
  const auto lex = random_lexicon(3, 1);
  auto gists = gists_of(lex);
  gists.pop_back();
  EXPECT_THROW(generate_dataset(lex, gists, {}), std::invalid_argument);
}

TEST(SampleJson, RoundTripKeepsProvenance) {
  const auto s = synthesize_one(toy_gist(), {}, 7);
  const auto back = sample_from_json(sample_to_json(s));
  EXPECT_EQ(back.trajectory, s.trajectory);
  EXPECT_EQ(back.label, s.label);
  EXPECT_EQ(back.provenance, s.provenance);
  EXPECT_EQ(back.id(), "wave-007");
}

}  // namespace
}  // namespace oneshot
