#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "oneshot/classifiers/model.hpp"
#include "oneshot/classifiers/model_io.hpp"
#include "oneshot/core/gist.hpp"
#include "oneshot/synthesis/synthesis.hpp"
#include "test_support.hpp"

namespace oneshot {
namespace {

// ---------------------------------------------------------------- features

TEST(Encode, PositionsThenVelocities) {
  const auto t = Trajectory::from_points(std::vector<Point3>{{0, 0, 0}, {1, 0, 0}, {1, 2, 0}}, 0.1);
  const auto f = encode(t);
  ASSERT_EQ(f.length(), 3u);
  ASSERT_EQ(f.dim, 6u);
  const std::vector<double> expect{1, 2, 0, 0, 2, 0};
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(f[2][k], expect[k]);
  for (std::size_t k = 3; k < 6; ++k) EXPECT_EQ(f[0][k], 0.0);
}

TEST(Encode, StationaryHasZeroVelocity) {
  const auto f = encode(testing::line({1, 2, 3}, {1, 2, 3}, 5));
  for (std::size_t i = 0; i < f.length(); ++i) {
    for (std::size_t k = 3; k < 6; ++k) EXPECT_EQ(f[i][k], 0.0);
  }
}

// ---------------------------------------------------------------- HMM

DiscreteHmm random_hmm(std::mt19937_64& rng, std::size_t states, std::size_t symbols) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  DiscreteHmm m(states, symbols);
  auto fill = [&](std::vector<double>& v, std::size_t row) {
    for (std::size_t r = 0; r < v.size() / row; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < row; ++k) s += v[r * row + k] = u(rng);
      for (std::size_t k = 0; k < row; ++k) v[r * row + k] /= s;
    }
  };
  fill(m.initial, states);
  fill(m.transition, states);
  fill(m.emission, symbols);
  return m;
}

double brute_force_likelihood(const DiscreteHmm& m, const std::vector<int>& obs) {
  const std::size_t T = obs.size();
  std::vector<std::size_t> path(T, 0);
  double total = 0.0;
  while (true) {
    double p = m.initial[path[0]] * m.b(path[0], obs[0]);
    for (std::size_t t = 1; t < T; ++t) p *= m.a(path[t - 1], path[t]) * m.b(path[t], obs[t]);
    total += p;
    std::size_t t = 0;
    while (t < T && ++path[t] == m.states) path[t++] = 0;
    if (t == T) break;
  }
  return total;
}

TEST(Hmm, SingleStateFairCoin) {
  DiscreteHmm m(1, 2);
  m.initial = {1.0};
  m.transition = {1.0};
  m.emission = {0.5, 0.5};
  EXPECT_NEAR(std::exp(forward_log_likelihood(m, std::vector<int>{0, 1, 0})), 0.125, 1e-15);
}

TEST(Hmm, ForwardMatchesPathEnumeration) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> sym(0, 3);
  for (std::size_t states = 1; states <= 3; ++states) {
    for (std::size_t T = 1; T <= 6; ++T) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto m = random_hmm(rng, states, 4);
        std::vector<int> obs(T);
        for (int& o : obs) o = sym(rng);
        const double expected = brute_force_likelihood(m, obs);
        EXPECT_NEAR(std::exp(forward_log_likelihood(m, obs)) / expected, 1.0, 1e-12);
      }
    }
  }
}

void expect_stochastic(const DiscreteHmm& m, const HmmStructure& s, double floor) {
  auto check_row = [&](const double* p, const char* allowed, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      sum += p[k];
      if (allowed == nullptr || allowed[k]) EXPECT_GE(p[k], floor * (1 - 1e-12));
      else EXPECT_EQ(p[k], 0.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  };
  check_row(m.initial.data(), s.initial.data(), m.states);
  for (std::size_t i = 0; i < m.states; ++i) {
    check_row(m.transition.data() + i * m.states, s.transition.data() + i * m.states, m.states);
    check_row(m.emission.data() + i * m.symbols, nullptr, m.symbols);
  }
}

TEST(Hmm, BaumWelchIsMonotoneAndStaysStochastic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> sym(0, 7);
    std::uniform_int_distribution<std::size_t> len(8, 30);
    std::vector<std::vector<int>> seqs(6);
    for (auto& s : seqs) {
      s.resize(len(rng));
      for (std::size_t t = 0; t < s.size(); ++t) s[t] = (sym(rng) % 4) + (t * 4 >= s.size() * 2 ? 4 : 0);
    }
    BaumWelchConfig cfg;
    cfg.tolerance = -std::numeric_limits<double>::infinity();
    cfg.floor = 1e-3;  // large enough to bind
    const auto structure = seed % 2 ? HmmStructure::left_to_right(5) : HmmStructure::full(3);
    DiscreteHmm m = seed % 2 ? init_left_to_right(5, 8, seqs, cfg.floor) : random_hmm(rng, 3, 8);
    const auto trace = baum_welch(m, seqs, structure, cfg);
    ASSERT_EQ(trace.log_likelihood.size(), cfg.max_iterations);
    for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i) {
      EXPECT_GE(trace.log_likelihood[i], trace.log_likelihood[i - 1] - 1e-9) << "seed " << seed << " it " << i;
    }
    expect_stochastic(m, structure, cfg.floor);
  }
}

TEST(Hmm, FlooredNormalizeSolvesConstrainedProblem) {
  // counts (10, 0, 0), floor 0.1 → (0.8, 0.1, 0.1); disallowed entry stays zero.
  std::vector<double> p(4);
  const std::vector<double> counts{10, 0, 0, 5};
  const std::vector<char> allowed{1, 1, 1, 0};
  floored_normalize(p, counts, allowed, 0.1);
  EXPECT_NEAR(p[0], 0.8, 1e-12);
  EXPECT_NEAR(p[1], 0.1, 1e-12);
  EXPECT_NEAR(p[2], 0.1, 1e-12);
  EXPECT_EQ(p[3], 0.0);
  // Inactive floor: plain normalization.
  floored_normalize(p, std::vector<double>{1, 2, 1, 0}, allowed, 1e-8);
  EXPECT_NEAR(p[1], 0.5, 1e-12);
}

// ---------------------------------------------------------------- SVM

TEST(Svm, RbfSelfSimilarityIsOne) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 10);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(7);
    for (double& v : x) v = n(rng);
    EXPECT_EQ(rbf_kernel(x, x, 0.3), 1.0);
  }
}

struct Problem {
  std::vector<std::vector<double>> xs;
  std::vector<double> y;
};

Problem separable(std::uint64_t seed, std::size_t per_class) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 0.3);
  Problem p;
  for (std::size_t i = 0; i < per_class; ++i) {
    p.xs.push_back({-1 + n(rng), -1 + n(rng)});
    p.y.push_back(-1);
    p.xs.push_back({1 + n(rng), 1 + n(rng)});
    p.y.push_back(1);
  }
  return p;
}

double decision(const Problem& p, const SmoResult& r, const std::vector<double>& x, double gamma) {
  double f = -r.rho;
  for (std::size_t i = 0; i < p.xs.size(); ++i) f += r.alpha[i] * p.y[i] * rbf_kernel(x, p.xs[i], gamma);
  return f;
}

TEST(Svm, SeparableToyIsFit) {
  const auto p = separable(3, 20);
  const auto r = solve_smo(gram_matrix(p.xs, 0.5), p.y, {}, true);
  ASSERT_TRUE(r.converged);
  for (std::size_t i = 0; i < p.xs.size(); ++i) EXPECT_GT(p.y[i] * decision(p, r, p.xs[i], 0.5), 0.0);
}

TEST(Svm, KktAndMonotoneDual) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = separable(seed, 15);
    p.y[0] = -p.y[0];  // one mislabeled point forces bounded multipliers
    SmoConfig cfg;
    cfg.c = 2.0;
    const auto r = solve_smo(gram_matrix(p.xs, 1.0), p.y, cfg, true);
    ASSERT_TRUE(r.converged);
    for (std::size_t i = 1; i < r.dual_trace.size(); ++i) EXPECT_GE(r.dual_trace[i], r.dual_trace[i - 1] - 1e-12);
    EXPECT_NEAR(r.dual_trace.back(), r.dual_objective, 1e-9);
    double balance = 0.0;
    for (std::size_t i = 0; i < p.xs.size(); ++i) {
      balance += r.alpha[i] * p.y[i];
      const double margin = p.y[i] * decision(p, r, p.xs[i], 1.0);
      if (r.alpha[i] <= 0.0) EXPECT_GE(margin, 1.0 - 1e-3);
      else if (r.alpha[i] >= cfg.c) EXPECT_LE(margin, 1.0 + 1e-3);
      else EXPECT_NEAR(margin, 1.0, 1e-3);
    }
    EXPECT_NEAR(balance, 0.0, 1e-9);
  }
}

TEST(Svm, DualMatchesGridSearchOnFourPoints) {
  const Problem p{{{0, 0}, {1, 0.2}, {0.3, 1}, {1.2, 1.1}}, {1, 1, -1, -1}};
  const double gamma = 1.0, C = 1.0;
  const auto K = gram_matrix(p.xs, gamma);
  SmoConfig cfg;
  cfg.c = C;
  cfg.tolerance = 1e-8;
  const auto r = solve_smo(K, p.y, cfg);

  // Equality constraint a0 + a1 = a2 + a3 leaves three free coordinates.
  const int steps = 200;
  double best = -1e300;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      for (int k = 0; k <= steps; ++k) {
        const double a0 = C * i / steps, a1 = C * j / steps, a2 = C * k / steps;
        const double a3 = a0 + a1 - a2;
        if (a3 < 0 || a3 > C) continue;
        const std::vector<double> a{a0, a1, a2, a3};
        best = std::max(best, svm_dual_objective(a, p.y, K));
      }
    }
  }
  EXPECT_GE(r.dual_objective, best - 1e-9);
  EXPECT_NEAR(r.dual_objective, best, 1e-3);
}

// ---------------------------------------------------------------- CRF

CrfSequence toy_sequence() { return {{{0}, {1, 2}, {2}}, {0, 1, 1}}; }

TEST(Crf, ZeroWeightsGiveUniformLabelings) {
  LinearChainCrf crf(5, 3);
  CrfSequence s{{{0}, {1}, {2}, {0}}, {0, 4, 2, 1}};
  EXPECT_NEAR(crf.log_likelihood(s, crf.weights), -4.0 * std::log(5.0), 1e-12);
}

TEST(Crf, PartitionMatchesLabelingEnumeration) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  LinearChainCrf crf(2, 3);
  for (double& w : crf.weights) w = n(rng);
  const auto s = toy_sequence();
  std::vector<double> scores;
  for (int mask = 0; mask < 8; ++mask) {
    scores.push_back(crf.path_score(s, {mask & 1, (mask >> 1) & 1, (mask >> 2) & 1}, crf.weights));
  }
  double z = 0.0;
  for (double v : scores) z += std::exp(v);
  EXPECT_NEAR(crf.log_partition(s), std::log(z), 1e-12);
}

TEST(Crf, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 0.7);
  LinearChainCrf crf(2, 3);
  std::vector<double> w(crf.weights.size());
  for (double& v : w) v = n(rng);
  const std::vector<CrfSequence> data{toy_sequence(), {{{2}, {0, 1}, {1}, {0}}, {1, 1, 0, 0}}};
  std::vector<double> grad;
  crf.objective(data, w, 1.0, &grad);
  const double h = 1e-5;
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    const double numeric = (crf.objective(data, wp, 1.0, nullptr) - crf.objective(data, wm, 1.0, nullptr)) / (2 * h);
    EXPECT_LE(std::abs(numeric - grad[i]), 1e-4 * std::max(1.0, std::abs(numeric))) << "weight " << i;
  }
}

TEST(Crf, OverfitsSingleSequence) {
  LinearChainCrf crf(3, 4);
  const CrfSequence s{{{0}, {1}, {1}, {2}, {3}, {3}}, {0, 1, 2, 2, 0, 0}};
  CrfTrainConfig cfg;
  cfg.l2 = 0.01;
  const auto trace = train_crf_weights(crf, {s}, cfg);
  for (std::size_t i = 1; i < trace.objective.size(); ++i) EXPECT_GE(trace.objective[i], trace.objective[i - 1]);
  EXPECT_EQ(crf.viterbi(s).labels, s.labels);
}

TEST(Crf, ViterbiMatchesEnumeration) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  LinearChainCrf crf(3, 3);
  for (double& w : crf.weights) w = n(rng);
  const CrfSequence s{{{0}, {2}, {1}, {1}}, {}};
  double best = -1e300;
  for (int code = 0; code < 81; ++code) {
    const std::vector<int> y{code % 3, code / 3 % 3, code / 9 % 3, code / 27 % 3};
    best = std::max(best, crf.path_score(s, y, crf.weights));
  }
  const auto d = crf.viterbi(s);
  EXPECT_NEAR(d.score, best, 1e-12);
  EXPECT_NEAR(crf.path_score(s, d.labels, crf.weights), best, 1e-12);
}

// ---------------------------------------------------------------- DTW

FeatureSequence seq1d(const std::vector<double>& v) {
  FeatureSequence s;
  for (double x : v) s.push_back(std::vector<double>{x});
  return s;
}

// Minimum over every monotone path from (0,0) to (n-1,m-1) using unit steps
// right, down or diagonal; cost is the sum over visited cells.
double dtw_enumerate(const FeatureSequence& a, const FeatureSequence& b) {
  std::function<double(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) {
    const double here = std::sqrt(squared_distance(a[i], b[j]));
    if (i + 1 == a.length() && j + 1 == b.length()) return here;
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < a.length()) best = std::min(best, go(i + 1, j));
    if (j + 1 < b.length()) best = std::min(best, go(i, j + 1));
    if (i + 1 < a.length() && j + 1 < b.length()) best = std::min(best, go(i + 1, j + 1));
    return here + best;
  };
  return go(0, 0);
}

TEST(Dtw, ShortSequencesMatchPathEnumeration) {
  EXPECT_NEAR(dtw_distance(seq1d({0, 1, 2}), seq1d({0, 2})), dtw_enumerate(seq1d({0, 1, 2}), seq1d({0, 2})), 1e-12);
  EXPECT_DOUBLE_EQ(dtw_distance(seq1d({0, 1, 2}), seq1d({0, 2})), 1.0);
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    FeatureSequence a, b;
    a.dim = b.dim = 2;
    for (std::size_t i = len(rng); i > 0; --i) a.push_back(std::vector<double>{n(rng), n(rng)});
    for (std::size_t i = len(rng); i > 0; --i) b.push_back(std::vector<double>{n(rng), n(rng)});
    EXPECT_NEAR(dtw_distance(a, b), dtw_enumerate(a, b), 1e-12);
    EXPECT_NEAR(dtw_distance(a, b), dtw_distance(b, a), 1e-12);
    EXPECT_GE(dtw_distance(a, b), 0.0);
    EXPECT_EQ(dtw_distance(a, a), 0.0);
  }
}

TEST(Dtw, AlignmentAgreesWithDistanceAndCountsPath) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    FeatureSequence a, b;
    a.dim = b.dim = 1;
    for (int i = 0; i < 7; ++i) a.push_back(std::vector<double>{n(rng)});
    for (int i = 0; i < 5; ++i) b.push_back(std::vector<double>{n(rng)});
    const auto al = dtw_align(a, b);
    EXPECT_EQ(al.cost, dtw_distance(a, b));
    EXPECT_GE(al.path_length, 7u);
    EXPECT_LE(al.path_length, 11u);
  }
  const auto same = dtw_align(seq1d({0, 1, 2, 3}), seq1d({0, 1, 2, 3}));
  EXPECT_EQ(same.path_length, 4u);
  EXPECT_EQ(same.mean_cost(), 0.0);
  EXPECT_DOUBLE_EQ(dtw_align(seq1d({0, 0}), seq1d({1, 1})).mean_cost(), 1.0);
}

TEST(Dtw, SinglePointsGiveEuclideanDistance) {
  EXPECT_DOUBLE_EQ(dtw_distance(std::vector<Point3>{{0, 0, 0}}, std::vector<Point3>{{3, 4, 0}}), 5.0);
}

TEST(Dtw, PositiveWhenAnElementIsUnmatched) {
  EXPECT_GT(dtw_distance(seq1d({0, 1, 2}), seq1d({0, 1, 2, 3})), 0.0);
  EXPECT_GT(dtw_distance(seq1d({0, 1, 2}), seq1d({0, 1.5, 2})), 0.0);
}

TEST(Dtw, BandIsNeverNarrowerThanLengthGap) {
  EXPECT_EQ(dtw_band_width(10, 4, 0.2), 6u);
  EXPECT_EQ(dtw_band_width(10, 10, 0.2), 2u);
  EXPECT_EQ(dtw_band_width(10, 10, 0.0), 10u);
  const auto a = seq1d({0, 0, 0, 0, 0, 0, 0, 0, 0, 5});
  const auto b = seq1d({5, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_TRUE(std::isfinite(dtw_distance(a, seq1d({1, 2}), 0.1)));
  EXPECT_GE(dtw_distance(a, b, 0.1), dtw_distance(a, b));
}

// ---------------------------------------------------------------- common contract

struct Dataset {
  std::vector<GestureLabel> labels;
  std::vector<LabeledInstance> train;
  std::vector<Trajectory> seeds;
};

Trajectory shape(std::size_t c, std::size_t n) {
  std::vector<Frame> frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = double(i) / double(n - 1);
    const double a = 2.0 * std::numbers::pi * s;
    Point3 left, right;
    switch (c) {
      case 0: left = {s, 0, 0}, right = {-s, 0, 0}; break;
      case 1: left = {std::cos(a), std::sin(a), 0}, right = {0, 0, s}; break;
      case 2: left = {0, s * s, 0}, right = {0, -std::sin(a), 0}; break;
      default: left = {std::sin(a), 0, std::cos(a)}, right = {s, s, s}; break;
    }
    frames[i] = {0.05 * double(i), {left, right}};
  }
  return Trajectory(2, std::move(frames));
}

const Dataset& toy_dataset() {
  static const Dataset d = [] {
    Dataset d;
    d.labels = make_labels({"push", "circle", "lift", "swing"});
    for (std::size_t c = 0; c < 4; ++c) d.seeds.push_back(shape(c, 50));
    Lexicon lex(d.labels, d.seeds);
    std::vector<GestureGist> gists;
    for (std::size_t c = 0; c < 4; ++c) gists.push_back(extract_gist(lex.seeds[c], {}, lex.labels[c]));
    SynthesisParams p;
    p.m_des = 8;
    p.spatial_noise_gain = 0.0;
    p.temporal_jitter = 0.0;
    p.length_jitter = 0.0;
    for (const auto& s : generate_dataset(lex, gists, p)) d.train.push_back(s.instance());
    return d;
  }();
  return d;
}

ClassifierConfig small_config() {
  ClassifierConfig cfg;
  cfg.hmm.codebook_size = 16;
  cfg.crf.codebook_size = 16;
  cfg.crf.train.max_iterations = 150;
  return cfg;
}

class EveryVariant : public ::testing::TestWithParam<Variant> {};

TEST_P(EveryVariant, ClassifiesSeedsOfZeroNoiseSet) {
  const auto& d = toy_dataset();
  const auto m = train(GetParam(), d.train, d.labels, small_config());
  for (std::size_t c = 0; c < d.seeds.size(); ++c) {
    const auto p = classify(m, d.seeds[c]);
    EXPECT_EQ(p.scores.size(), d.labels.size());
    EXPECT_FALSE(p.rejected);
    EXPECT_EQ(p.label, d.labels[c]) << to_string(GetParam());
    EXPECT_EQ(p.label, d.labels[argmax(p.scores)]);
  }
}

TEST_P(EveryVariant, SerializationRoundTripIsBitIdentical) {
  const auto& d = toy_dataset();
  const auto m = train(GetParam(), d.train, d.labels, small_config());
  const auto text = model_to_json(m).dump();
  const auto back = model_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(model_to_json(back).dump(), text);
  for (const auto& inst : d.train) {
    const auto a = classify(m, inst.trajectory);
    const auto b = classify(back, inst.trajectory);
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(a.score, b.score);
  }
}

TEST_P(EveryVariant, TrainingIsDeterministic) {
  const auto& d = toy_dataset();
  EXPECT_EQ(model_to_json(train(GetParam(), d.train, d.labels, small_config())).dump(),
            model_to_json(train(GetParam(), d.train, d.labels, small_config())).dump());
}

INSTANTIATE_TEST_SUITE_P(Classifiers, EveryVariant, ::testing::ValuesIn(all_variants()),
                         [](const auto& info) { return to_string(info.param); });

TEST(Classify, DtwFindsItsOwnTrainingSample) {
  const auto& d = toy_dataset();
  const auto m = train(Variant::Dtw, d.train, d.labels, small_config());
  for (const auto& inst : d.train) {
    const auto p = classify(m, inst.trajectory);
    EXPECT_EQ(p.label, inst.label);
    EXPECT_EQ(p.score, 0.0);
  }
}

TEST(Classify, ArgmaxBreaksTiesLow) {
  EXPECT_EQ(argmax({1, 3, 3, 2}), 1u);
  EXPECT_EQ(argmax({0, 0}), 0u);
}

TEST(Classify, RejectsMismatchedInputs) {
  const auto& d = toy_dataset();
  const auto m = train(Variant::Hmm, d.train, d.labels, small_config());
  EXPECT_THROW(classify(m, testing::line({0, 0, 0}, {1, 1, 1}, 10)), std::invalid_argument);
  auto missing = d.train;
  missing.erase(std::remove_if(missing.begin(), missing.end(),
                               [&](const LabeledInstance& i) { return i.label == d.labels[2]; }),
                missing.end());
  for (Variant v : all_variants()) EXPECT_THROW(train(v, missing, d.labels, small_config()), std::invalid_argument);
}

TEST(ModelJson, RejectsWrongFormatOrVersion) {
  const auto& d = toy_dataset();
  auto j = model_to_json(train(Variant::Dtw, d.train, d.labels, small_config()));
  auto bad = j;
  bad["version"] = 99;
  EXPECT_THROW(model_from_json(bad), std::invalid_argument);
  bad = j;
  bad["format"] = "other";
  EXPECT_THROW(model_from_json(bad), std::invalid_argument);
}

}  // namespace
}  // namespace oneshot
