#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "oneshot/classifiers/features.hpp"
#include "oneshot/synthesis/rng.hpp"

namespace oneshot {

/// Vector-quantization codebook; codeword ids are 0..size()-1.
struct Codebook {
  std::size_t dim = 0;
  std::vector<double> centroids;  // row-major, size() x dim

  std::size_t size() const { return dim == 0 ? 0 : centroids.size() / dim; }
  std::span<const double> centroid(std::size_t k) const { return {centroids.data() + k * dim, dim}; }

  /// Nearest codeword; ties go to the lowest id.
  int quantize(std::span<const double> v) const {
    if (v.size() != dim) throw std::invalid_argument("codebook: dimension mismatch");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size(); ++k) {
      const double d = squared_distance(v, centroid(k));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    return best;
  }

  std::vector<int> quantize(const FeatureSequence& seq) const {
    std::vector<int> out(seq.length());
    for (std::size_t t = 0; t < seq.length(); ++t) out[t] = quantize(seq[t]);
    return out;
  }
};

/// Lloyd's k-means with k-means++ seeding. Empty clusters are re-seeded
/// from the point farthest from its current centroid.
inline Codebook fit_kmeans(const std::vector<std::span<const double>>& points, std::size_t k,
                           std::uint64_t seed, std::size_t max_iterations = 100) {
  if (points.empty()) throw std::invalid_argument("kmeans: no points");
  if (k == 0) throw std::invalid_argument("kmeans: k must be positive");
  const std::size_t dim = points.front().size();
  const std::size_t n = points.size();
  Rng rng(derive_key({seed, 0x6B6D65616E73ULL}));

  Codebook cb;
  cb.dim = dim;
  auto add = [&](std::span<const double> p) { cb.centroids.insert(cb.centroids.end(), p.begin(), p.end()); };
  add(points[rng.below(n)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (cb.size() < k) {
    const auto last = cb.centroid(cb.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], last));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        r -= d2[i];
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    add(points[pick]);
  }

  std::vector<int> assign(n, -1);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = cb.quantize(points[i]);
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assign[i]);
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t d = 0; d < dim; ++d) {
          cb.centroids[c * dim + d] = sums[c * dim + d] / static_cast<double>(counts[c]);
        }
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = squared_distance(points[i], cb.centroid(static_cast<std::size_t>(assign[i])));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      for (std::size_t d = 0; d < dim; ++d) cb.centroids[c * dim + d] = points[far][d];
      assign[far] = static_cast<int>(c);
    }
  }
  return cb;
}

inline Codebook fit_codebook(const std::vector<FeatureSequence>& seqs, std::size_t k, std::uint64_t seed) {
  std::vector<std::span<const double>> points;
  for (const auto& s : seqs) {
    for (std::size_t t = 0; t < s.length(); ++t) points.push_back(s[t]);
  }
  return fit_kmeans(points, k, seed);
}

}  // namespace oneshot
