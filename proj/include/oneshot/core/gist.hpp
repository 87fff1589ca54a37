#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "oneshot/core/types.hpp"

namespace oneshot {

/// Saliency criterion for gist extraction. Fractions are relative to the
/// signal range (prominences) or the trajectory duration (times).
struct GistParams {
  double speed_prominence = 0.2;      // speed minima: fraction of speed range
  double curvature_prominence = 0.2;  // turning-angle maxima: fraction of angle range
  double speed_floor = 0.01;          // minimum speed-dip prominence, fraction of peak speed
  double angle_floor = 0.02;          // minimum turning-angle prominence, radians
  double curvature_min_speed = 0.1;   // turning angles ignored below this fraction of peak speed
  double min_separation = 0.1;        // fraction of duration
  double variance_window = 0.05;      // half-width, fraction of duration
  double variance_gain = 1.0;
};

struct Placeholder {
  Point3 position;
  std::array<double, 3> variance{};  // axis-aligned, m^2
  double time_fraction = 0.0;        // in [0, 1]

  friend bool operator==(const Placeholder&, const Placeholder&) = default;
};

/// Salient placeholders of a single observation, one ordered list per effector.
struct GestureGist {
  GestureLabel source_label;
  double duration = 1.0;         // seconds spanned by the source observation
  std::size_t source_length = 0;  // h of the source trajectory
  std::vector<std::vector<Placeholder>> effectors;

  std::size_t effector_count() const { return effectors.size(); }

  /// Placeholder count l (the largest per-effector count).
  std::size_t size() const {
    std::size_t l = 0;
    for (const auto& e : effectors) l = std::max(l, e.size());
    return l;
  }

  friend bool operator==(const GestureGist&, const GestureGist&) = default;
};

namespace detail {

/// Interior local maxima with topographic prominence (plateaus collapse to
/// their midpoint). Returns (index, prominence) pairs in index order.
inline std::vector<std::pair<std::size_t, double>> find_peaks(const std::vector<double>& x) {
  std::vector<std::pair<std::size_t, double>> peaks;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i] > x[i - 1]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        const std::size_t peak = (i + ahead - 1) / 2;
        double left_min = x[peak];
        for (std::size_t j = peak; j-- > 0;) {
          if (x[j] > x[peak]) break;
          left_min = std::min(left_min, x[j]);
        }
        double right_min = x[peak];
        for (std::size_t j = peak + 1; j < n; ++j) {
          if (x[j] > x[peak]) break;
          right_min = std::min(right_min, x[j]);
        }
        peaks.emplace_back(peak, x[peak] - std::max(left_min, right_min));
        i = ahead;
        continue;
      }
      i = ahead;
      continue;
    }
    ++i;
  }
  return peaks;
}

inline std::vector<double> speeds(const std::vector<Point3>& p, const std::vector<double>& t) {
  const std::size_t n = p.size();
  std::vector<double> v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    v[i] = distance(p[b], p[a]) / (t[b] - t[a]);
  }
  return v;
}

/// Turning angle between incoming and outgoing segments, 0 where either is degenerate.
inline std::vector<double> turning_angles(const std::vector<Point3>& p, double eps) {
  const std::size_t n = p.size();
  std::vector<double> a(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Point3 in = p[i] - p[i - 1];
    const Point3 out = p[i + 1] - p[i];
    const double ln = norm(in);
    const double lo = norm(out);
    if (ln <= eps || lo <= eps) continue;
    const double c = std::clamp(dot(in, out) / (ln * lo), -1.0, 1.0);
    a[i] = std::acos(c);
  }
  return a;
}

inline std::array<double, 3> window_variance(const std::vector<Point3>& p,
                                             const std::vector<double>& frac, std::size_t center,
                                             double half_width) {
  Point3 mean;
  std::size_t count = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (std::abs(frac[j] - frac[center]) <= half_width) {
      mean = mean + p[j];
      ++count;
    }
  }
  mean = mean * (1.0 / static_cast<double>(count));
  std::array<double, 3> var{};
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (std::abs(frac[j] - frac[center]) <= half_width) {
      const Point3 d = p[j] - mean;
      for (std::size_t a = 0; a < 3; ++a) var[a] += d[a] * d[a];
    }
  }
  for (double& v : var) v /= static_cast<double>(count);
  return var;
}

struct Candidate {
  std::size_t index;
  double saliency;
};

inline std::vector<std::size_t> salient_indices(const std::vector<Point3>& p,
                                                const std::vector<double>& t,
                                                const std::vector<double>& frac,
                                                const GistParams& params, double eps) {
  const std::size_t h = p.size();
  std::vector<Candidate> candidates;

  const auto v = speeds(p, t);
  const auto [vmin_it, vmax_it] = std::minmax_element(v.begin(), v.end());
  const double vmax = *vmax_it;
  const double vrange = vmax - *vmin_it;
  if (vmax > 0.0) {
    const double threshold =
        std::max(params.speed_prominence * vrange, params.speed_floor * vmax);
    std::vector<double> neg(v.size());
    std::transform(v.begin(), v.end(), neg.begin(), [](double s) { return -s; });
    for (auto [i, prom] : find_peaks(neg)) {
      if (prom >= threshold && prom > 0.0) candidates.push_back({i, prom / vrange});
    }

    auto angle = turning_angles(p, eps);
    for (std::size_t i = 0; i < h; ++i) {
      if (v[i] < params.curvature_min_speed * vmax) angle[i] = 0.0;
    }
    const auto [amin_it, amax_it] = std::minmax_element(angle.begin(), angle.end());
    const double arange = *amax_it - *amin_it;
    const double athreshold = std::max(params.curvature_prominence * arange, params.angle_floor);
    for (auto [i, prom] : find_peaks(angle)) {
      if (prom >= athreshold && arange > 0.0) candidates.push_back({i, prom / arange});
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.saliency != b.saliency) return a.saliency > b.saliency;
    return a.index < b.index;
  });

  // Greedy merge: most salient first, rejecting anything within the
  // separation of an accepted point (endpoints included).
  std::vector<std::size_t> accepted{0, h - 1};
  const std::size_t max_interior = h >= 3 ? h - 3 : 0;  // keeps l <= h - 1
  std::size_t interior = 0;
  for (const Candidate& c : candidates) {
    if (interior >= max_interior) break;
    const bool clear = std::all_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
      return std::abs(frac[a] - frac[c.index]) >= params.min_separation && a != c.index;
    });
    if (clear) {
      accepted.push_back(c.index);
      ++interior;
    }
  }
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

}  // namespace detail

/// Extracts the gist: per effector, the endpoints plus interior speed minima
/// and turning-angle maxima that clear the prominence thresholds, merged
/// by minimum time separation. Each placeholder's variance is the spatial
/// spread of the trajectory in a window around it, times `variance_gain`.
inline GestureGist extract_gist(const Trajectory& traj, const GistParams& params,
                                const GestureLabel& label = {}) {
  const std::size_t h = traj.length();
  if (h < 4) throw std::invalid_argument("extract_gist: trajectory needs at least 4 frames");

  const auto t = traj.times();
  std::vector<double> frac(h);
  for (std::size_t i = 0; i < h; ++i) frac[i] = (t[i] - t.front()) / (t.back() - t.front());
  frac.front() = 0.0;
  frac.back() = 1.0;

  GestureGist gist;
  gist.source_label = label;
  gist.duration = traj.duration();
  gist.source_length = h;

  double extent = 0.0;
  for (std::size_t e = 0; e < traj.effector_count(); ++e) {
    const auto p = traj.stream(e);
    for (const Point3& q : p) extent = std::max(extent, norm(q - p.front()));
  }
  const double eps = 1e-12 * std::max(extent, 1e-300);

  for (std::size_t e = 0; e < traj.effector_count(); ++e) {
    const auto p = traj.stream(e);
    std::vector<Placeholder> placeholders;
    for (std::size_t i : detail::salient_indices(p, t, frac, params, eps)) {
      Placeholder ph;
      ph.position = p[i];
      ph.time_fraction = frac[i];
      ph.variance = detail::window_variance(p, frac, i, params.variance_window);
      for (double& v : ph.variance) v *= params.variance_gain;
      placeholders.push_back(ph);
    }
    gist.effectors.push_back(std::move(placeholders));
  }
  return gist;
}

}  // namespace oneshot
