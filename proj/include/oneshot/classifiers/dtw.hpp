#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <vector>

#include "oneshot/classifiers/features.hpp"

namespace oneshot {

/// Sakoe-Chiba half-width for sequences of lengths n and m. A fraction
/// outside (0, 1) disables the band. The width never drops below |n - m|
/// so that a path always exists.
inline std::size_t dtw_band_width(std::size_t n, std::size_t m, double band_fraction) {
  const std::size_t longest = std::max(n, m);
  if (!(band_fraction > 0.0 && band_fraction < 1.0)) return longest;
  const auto w = static_cast<std::size_t>(std::ceil(band_fraction * static_cast<double>(longest)));
  return std::max(w, n > m ? n - m : m - n);
}

/// DTW with Euclidean local cost and the symmetric match/insert/delete step
/// pattern: the cost of a path is the sum of local costs of every cell it
/// visits, from (0, 0) to (n-1, m-1). Cells with |i - j| > band are excluded.
inline double dtw_distance(const FeatureSequence& a, const FeatureSequence& b, double band_fraction = 0.0) {
  const std::size_t n = a.length();
  const std::size_t m = b.length();
  if (n == 0 || m == 0) throw std::invalid_argument("dtw: empty sequence");
  if (a.dim != b.dim) throw std::invalid_argument("dtw: dimension mismatch");
  const std::size_t band = dtw_band_width(n, m, band_fraction);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> prev(m, kInf), cur(m, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(cur.begin(), cur.end(), kInf);
    const std::size_t lo = i > band ? i - band : 0;
    const std::size_t hi = std::min(m - 1, i + band);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double cost = std::sqrt(squared_distance(a[i], b[j]));
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = best + cost;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

struct DtwAlignment {
  double cost = 0.0;           // sum of local costs along the optimal path
  std::size_t path_length = 0;  // cells visited by that path

  double mean_cost() const { return cost / static_cast<double>(path_length); }
};

/// Same recursion as dtw_distance, also tracking the length of the chosen
/// path (shortest among equal-cost predecessors).
inline DtwAlignment dtw_align(const FeatureSequence& a, const FeatureSequence& b, double band_fraction = 0.0) {
  const std::size_t n = a.length();
  const std::size_t m = b.length();
  if (n == 0 || m == 0) throw std::invalid_argument("dtw: empty sequence");
  if (a.dim != b.dim) throw std::invalid_argument("dtw: dimension mismatch");
  const std::size_t band = dtw_band_width(n, m, band_fraction);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  using Cell = std::pair<double, std::size_t>;
  std::vector<Cell> prev(m, {kInf, 0}), cur(m, {kInf, 0});
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(cur.begin(), cur.end(), Cell{kInf, 0});
    const std::size_t lo = i > band ? i - band : 0;
    const std::size_t hi = std::min(m - 1, i + band);
    for (std::size_t j = lo; j <= hi; ++j) {
      Cell best{0.0, 0};
      if (i > 0 || j > 0) {
        best = {kInf, 0};
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = {best.first + std::sqrt(squared_distance(a[i], b[j])), best.second + 1};
    }
    std::swap(prev, cur);
  }
  return {prev[m - 1].first, prev[m - 1].second};
}

/// Convenience overload on raw point streams (each point a 3-vector).
inline double dtw_distance(const std::vector<Point3>& a, const std::vector<Point3>& b, double band_fraction = 0.0) {
  FeatureSequence fa, fb;
  for (const Point3& p : a) fa.push_back(std::vector<double>{p.x, p.y, p.z});
  for (const Point3& p : b) fb.push_back(std::vector<double>{p.x, p.y, p.z});
  return dtw_distance(fa, fb, band_fraction);
}

namespace detail {

inline FeatureSequence positions(const Trajectory& t) {
  FeatureSequence f;
  for (const Frame& fr : t.frames()) {
    std::vector<double> row;
    for (const Point3& p : fr.points) row.insert(row.end(), {p.x, p.y, p.z});
    f.push_back(row);
  }
  return f;
}

}  // namespace detail

/// DTW over the concatenated effector positions of two trajectories.
inline double trajectory_dtw(const Trajectory& a, const Trajectory& b, double band_fraction = 0.0) {
  return dtw_distance(detail::positions(a), detail::positions(b), band_fraction);
}

/// Mean local cost along the optimal warping path between two trajectories;
/// unlike the raw sum it does not grow with the number of frames.
inline double trajectory_dtw_mean(const Trajectory& a, const Trajectory& b, double band_fraction = 0.0) {
  return dtw_align(detail::positions(a), detail::positions(b), band_fraction).mean_cost();
}

}  // namespace oneshot
