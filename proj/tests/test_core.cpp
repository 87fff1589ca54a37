#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "oneshot/core/gist.hpp"
#include "oneshot/core/json_io.hpp"
#include "oneshot/core/msrc12.hpp"
#include "oneshot/core/preprocess.hpp"
#include "test_support.hpp"

namespace oneshot {
namespace {

using testing::line;
using testing::random_walk;

TEST(Trajectory, RejectsBrokenInvariants) {
  EXPECT_THROW(Trajectory(1, {{0.0, {Point3{}}}}), std::invalid_argument);
  EXPECT_THROW(Trajectory(1, {{0.0, {Point3{}}}, {0.0, {Point3{}}}}), std::invalid_argument);
  EXPECT_THROW(Trajectory(2, {{0.0, {Point3{}}}, {1.0, {Point3{}}}}), std::invalid_argument);
  EXPECT_THROW(Trajectory(1, {{0.0, {Point3{}}}, {1.0, {Point3{NAN, 0, 0}}}}), std::invalid_argument);
  EXPECT_THROW(Trajectory(3, {}), std::invalid_argument);
}

TEST(Lexicon, RequiresOneSeedPerUniqueLabel) {
  auto t = line({0, 0, 0}, {1, 0, 0}, 5);
  EXPECT_THROW(Lexicon(make_labels({"a"}), {t}), std::invalid_argument);
  EXPECT_THROW(Lexicon(make_labels({"a", "b"}), {t}), std::invalid_argument);
  EXPECT_THROW(Lexicon(make_labels({"a", "a"}), {t, t}), std::invalid_argument);
  EXPECT_NO_THROW(Lexicon(make_labels({"a", "b"}), {t, t}));
}

TEST(Resample, LineToFivePointsStaysCollinear) {
  const auto t = line({0, 0, 0}, {9, 0, 0}, 10);
  const auto r = resample(t, 5);
  ASSERT_EQ(r.length(), 5u);
  EXPECT_EQ(r.point(0, 0), t.point(0, 0));
  EXPECT_EQ(r.point(4, 0), t.point(9, 0));
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(r.point(i, 0).x, 9.0 * static_cast<double>(i) / 4.0, 1e-12);
    EXPECT_EQ(r.point(i, 0).y, 0.0);
    EXPECT_EQ(r.point(i, 0).z, 0.0);
  }
}

TEST(Resample, IdentityOnUniformSampling) {
  std::mt19937_64 rng(3);
  const auto t = random_walk(rng, 25);
  const auto r = resample(t, 25);
  for (std::size_t i = 0; i < 25; ++i) {
    EXPECT_NEAR(r.frame(i).time, t.frame(i).time, 1e-12);
    for (std::size_t e = 0; e < 2; ++e) EXPECT_LT(distance(r.point(i, e), t.point(i, e)), 1e-9);
  }
}

TEST(Resample, SineArcTracksClosedForm) {
  // Oracle: the analytic curve (s, sin s, 0) evaluated at the resampled times.
  std::vector<Point3> pts;
  const std::size_t n = 100;
  const double ds = std::numbers::pi / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = ds * static_cast<double>(i);
    pts.push_back({s, std::sin(s), 0.0});
  }
  const auto t = Trajectory::from_points(pts, ds);
  const auto r = resample(t, 37);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.length(); ++i) {
    const double s = r.frame(i).time;
    worst = std::max(worst, distance(r.point(i, 0), {s, std::sin(s), 0.0}));
  }
  EXPECT_LT(worst, ds);
}

TEST(Resample, RejectsTooFewSamples) {
  EXPECT_THROW(resample(line({0, 0, 0}, {1, 1, 1}, 4), 1), std::invalid_argument);
}

TEST(Resample, EndpointsExactAndIdempotentProperty) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(4, 60);
  for (int trial = 0; trial < 50; ++trial) {
    // Non-uniform time stamps.
    auto base = random_walk(rng, len(rng));
    std::vector<Frame> frames = base.frames();
    double t = 0.0;
    std::uniform_real_distribution<double> dt(0.01, 0.2);
    for (auto& f : frames) f.time = (t += dt(rng));
    const Trajectory traj(2, frames);
    const std::size_t n = len(rng);
    const auto once = resample(traj, n);
    const auto twice = resample(once, n);
    for (std::size_t e = 0; e < 2; ++e) {
      EXPECT_LT(distance(once.point(0, e), traj.point(0, e)), 1e-12);
      EXPECT_LT(distance(once.point(n - 1, e), traj.point(traj.length() - 1, e)), 1e-12);
      for (std::size_t i = 0; i < n; ++i) EXPECT_LT(distance(once.point(i, e), twice.point(i, e)), 1e-9);
    }
  }
}

TEST(Normalize, UnitDiagonalNeedsOnlyShift) {
  const double a = 1.0 / std::sqrt(3.0);
  const auto t = line({2, 2, 2}, {2 + a, 2 + a, 2 + a}, 7);
  const auto n = normalize(t);
  EXPECT_NEAR(n.transform.scale, 1.0, 1e-12);
  EXPECT_FALSE(n.transform.degenerate);
  EXPECT_NEAR(n.transform.offset.x, 2 + a / 2, 1e-12);
  EXPECT_NEAR(bounding_box(n.trajectory).diagonal(), 1.0, 1e-12);
}

TEST(Normalize, StationaryInputIsFlaggedNotDivided) {
  const auto t = line({1, 2, 3}, {1, 2, 3}, 6);
  const auto n = normalize(t);
  EXPECT_TRUE(n.transform.degenerate);
  EXPECT_EQ(n.transform.scale, 1.0);
  for (const auto& f : n.trajectory.frames()) EXPECT_EQ(f.points[0], (Point3{0, 0, 0}));
}

TEST(Normalize, InverseRoundTripProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = random_walk(rng, 30);
    const auto n = normalize(t);
    const auto back = invert(n.transform, n.trajectory);
    for (std::size_t i = 0; i < t.length(); ++i) {
      for (std::size_t e = 0; e < 2; ++e) EXPECT_LT(distance(back.point(i, e), t.point(i, e)), 1e-9);
    }
  }
}

TEST(Gist, ConstantVelocityLineHasOnlyEndpoints) {
  const auto t = resample(normalize(line({0, 0, 0}, {1, 2, 3}, 50)).trajectory, 40);
  const auto g = extract_gist(t, {});
  ASSERT_EQ(g.effectors.size(), 1u);
  EXPECT_EQ(g.size(), 2u);
}

// Independent scan of the sampled polyline: interior vertex with the largest
// turning angle (atan2 form) and the interior sample with the smallest
// central-difference speed.
std::pair<std::size_t, std::size_t> scan_extrema(const std::vector<Point3>& p) {
  std::size_t max_turn = 1, min_speed = 1;
  double best_turn = -1.0, best_speed = 1e300;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const Point3 u = p[i] - p[i - 1];
    const Point3 v = p[i + 1] - p[i];
    const Point3 cross{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
    const double turn = std::atan2(norm(cross), dot(u, v));
    if (turn > best_turn) best_turn = turn, max_turn = i;
    const double speed = norm(p[i + 1] - p[i - 1]);
    if (speed < best_speed) best_speed = speed, min_speed = i;
  }
  return {max_turn, min_speed};
}

TEST(Gist, VShapeFindsApex) {
  std::vector<Point3> pts;
  const std::size_t half = 15;
  for (std::size_t i = 0; i <= half; ++i) pts.push_back(lerp({0, 0, 0}, {1, 1, 0}, double(i) / half));
  for (std::size_t i = 1; i <= half; ++i) pts.push_back(lerp({1, 1, 0}, {2, 0, 0}, double(i) / half));
  const auto t = Trajectory::from_points(pts, 0.05);

  const auto [turn_idx, speed_idx] = scan_extrema(pts);
  ASSERT_EQ(turn_idx, half);
  ASSERT_EQ(speed_idx, half);

  const auto g = extract_gist(t, {});
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g.effectors[0][1].position, pts[turn_idx]);
  EXPECT_EQ(g.effectors[0][1].position, (Point3{1, 1, 0}));
  EXPECT_DOUBLE_EQ(g.effectors[0][1].time_fraction, 0.5);
}

TEST(Gist, RejectsShortTrajectories) {
  EXPECT_THROW(extract_gist(line({0, 0, 0}, {1, 0, 0}, 3), {}), std::invalid_argument);
}

TEST(Gist, StationaryTrajectoryGivesEndpoints) {
  const auto g = extract_gist(line({1, 1, 1}, {1, 1, 1}, 20), {});
  EXPECT_EQ(g.size(), 2u);
}

TEST(Gist, InvariantsHoldOnRandomInputs) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> len(4, 80);
  GistParams loose;
  loose.min_separation = 0.0;
  loose.speed_prominence = 0.0;
  loose.curvature_prominence = 0.0;
  loose.speed_floor = 0.0;
  loose.angle_floor = 0.0;
  loose.curvature_min_speed = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_walk(rng, len(rng));
    for (const GistParams& params : {GistParams{}, loose}) {
      const auto g = extract_gist(t, params);
      EXPECT_EQ(g, extract_gist(t, params));
      for (std::size_t e = 0; e < t.effector_count(); ++e) {
        const auto& list = g.effectors[e];
        ASSERT_GE(list.size(), 2u);
        EXPECT_LT(list.size(), t.length());
        EXPECT_EQ(list.front().position, t.point(0, e));
        EXPECT_EQ(list.back().position, t.point(t.length() - 1, e));
        EXPECT_EQ(list.front().time_fraction, 0.0);
        EXPECT_EQ(list.back().time_fraction, 1.0);
        for (std::size_t q = 1; q < list.size(); ++q) EXPECT_GT(list[q].time_fraction, list[q - 1].time_fraction);
        for (const auto& ph : list) {
          for (double v : ph.variance) EXPECT_GE(v, 0.0);
        }
      }
    }
  }
}

TEST(Gist, VarianceScalesWithGain) {
  std::mt19937_64 rng(2);
  const auto t = random_walk(rng, 40);
  GistParams doubled;
  doubled.variance_gain = 2.0;
  const auto a = extract_gist(t, {});
  const auto b = extract_gist(t, doubled);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t q = 0; q < a.effectors[0].size(); ++q) {
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_DOUBLE_EQ(b.effectors[0][q].variance[k], 2.0 * a.effectors[0][q].variance[k]);
    }
  }
}

TEST(Gist, JsonRoundTrip) {
  std::mt19937_64 rng(8);
  const auto g = extract_gist(random_walk(rng, 50), {}, {"Wave", 3});
  EXPECT_EQ(gist_from_json(json::parse(gist_to_json(g).dump())), g);
}

TEST(InstanceJson, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  const LabeledInstance inst{"x-1", random_walk(rng, 33), {"Start", 5}};
  const auto back = instance_from_json(json::parse(instance_to_json(inst).dump()));
  EXPECT_EQ(back.id, inst.id);
  EXPECT_EQ(back.label, inst.label);
  EXPECT_EQ(back.trajectory, inst.trajectory);
}

// ---------------------------------------------------------------- MSRC-12

struct Msrc12Fixture : ::testing::Test {
  std::filesystem::path dir = testing::temp_dir("msrc12");

  // 81 columns: timestamp + 20 joints x (x, y, z, w).
  void write_skeleton(const std::string& name, std::size_t frames, double dt, bool inject_nan = false) {
    std::ofstream out(dir / name);
    for (std::size_t i = 0; i < frames; ++i) {
      out << dt * static_cast<double>(i);
      for (std::size_t j = 0; j < 20; ++j) {
        const double v = (inject_nan && i == 3 && j == kHandRight) ? NAN : 0.01 * static_cast<double>(i + j);
        out << ' ' << v << ' ' << -v << ' ' << 2.0 + v << ' ' << 1;
      }
      out << '\n';
    }
  }
  void write_tags(const std::string& name, const std::string& body) { std::ofstream(dir / name) << body; }
};

TEST_F(Msrc12Fixture, OneTaggedSegmentGivesOneInstance) {
  write_skeleton("a.txt", 100, 0.1);
  write_tags("a.tag", "XQPCTick;Tag\n5.0;Shoot\n");
  Msrc12Options opts;
  opts.window_before = 2.95;
  opts.window_after = 3.05;
  const auto r = load_msrc12(dir / "a.txt", dir / "a.tag", opts);
  ASSERT_EQ(r.instances.size(), 1u);
  const auto& inst = r.instances[0];
  EXPECT_EQ(inst.trajectory.length(), 60u);
  EXPECT_EQ(inst.trajectory.effector_count(), 2u);
  EXPECT_EQ(inst.label.name, "Shoot");
  // Frame 21 (t = 2.1) holds joint values 0.01 * (21 + j).
  EXPECT_NEAR(inst.trajectory.point(0, 0).x, 0.01 * (21 + kHandLeft), 1e-12);
  EXPECT_NEAR(inst.trajectory.point(0, 1).z, 2.0 + 0.01 * (21 + kHandRight), 1e-12);
}

TEST_F(Msrc12Fixture, ExcludedClassesAreAbsent) {
  write_skeleton("b.txt", 200, 0.1);
  write_tags("b.tag", "3.0;Shoot\n7.0;Kick\n11.0;Bow\n15.0;Tempo\n");
  const auto r = load_msrc12(dir / "b.txt", dir / "b.tag");
  ASSERT_EQ(r.instances.size(), 2u);
  EXPECT_EQ(r.instances[0].label.name, "Shoot");
  EXPECT_EQ(r.instances[1].label.name, "Tempo");
  EXPECT_EQ(r.skipped_unknown_label, 2u);
  for (const auto& inst : r.instances) {
    EXPECT_NE(inst.label.name, "Kick");
    EXPECT_NE(inst.label.name, "Bow");
  }
}

TEST_F(Msrc12Fixture, ShortLineIsAParseErrorNamingTheLine) {
  write_skeleton("c.txt", 5, 0.1);
  {
    std::ofstream out(dir / "c.txt", std::ios::app);
    out << "1.0 2.0 3.0\n";
  }
  write_tags("c.tag", "0.2;Shoot\n");
  try {
    load_msrc12(dir / "c.txt", dir / "c.tag");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
    EXPECT_NE(std::string(e.what()).find(":6:"), std::string::npos);
  }
}

TEST_F(Msrc12Fixture, NonFiniteFramesDroppedAndCountsAddUp) {
  write_skeleton("d.txt", 100, 0.1, true);
  // Events at 0.3 s (in window), 50 s (outside the recording), one alias.
  write_tags("d.tag", "0.5;Shoot\n50.0;Throw\n4.0;beat_both\n6.0;Duck\n");
  Msrc12Options opts;
  opts.label_aliases["beat_both"] = "Tempo";
  const auto r = load_msrc12(dir / "d.txt", dir / "d.tag", opts);
  EXPECT_EQ(r.dropped_frames, 1u);
  EXPECT_EQ(r.skipped_unknown_label, 1u);
  EXPECT_EQ(r.skipped_empty_window, 1u);
  // in-lexicon events (3) minus skipped windows (1)
  EXPECT_EQ(r.instances.size(), 3u - 1u);
  for (const auto& inst : r.instances) {
    for (const auto& f : inst.trajectory.frames()) EXPECT_NE(f.time, 0.3);
  }
}

TEST_F(Msrc12Fixture, BundledFixtureLoads) {
  const std::filesystem::path fx = ONESHOT_FIXTURE_DIR;
  const auto r = load_msrc12(fx / "msrc12_sample.txt", fx / "msrc12_sample.tagstream");
  EXPECT_EQ(r.instances.size(), 8u);
  EXPECT_EQ(r.skipped_unknown_label, 1u);
  for (const auto& inst : r.instances) EXPECT_EQ(inst.trajectory.effector_count(), 2u);
}

}  // namespace
}  // namespace oneshot
