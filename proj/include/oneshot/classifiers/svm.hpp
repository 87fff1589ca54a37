#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "oneshot/classifiers/features.hpp"

namespace oneshot {

/// k(x, y) = exp(-gamma * |x - y|^2)
inline double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  return std::exp(-gamma * squared_distance(x, y));
}

struct SmoConfig {
  double c = 10.0;
  double tolerance = 1e-3;  // maximal KKT violation at convergence
  std::size_t max_iterations = 1000000;
};

struct SmoResult {
  std::vector<double> alpha;
  double rho = 0.0;  // decision(x) = sum_i alpha_i y_i k(x_i, x) - rho
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> dual_trace;  // dual objective after each pair update
  double dual_objective = 0.0;
};

/// Dual objective sum(alpha) - 1/2 alpha' Q alpha with Q_ij = y_i y_j K_ij.
inline double svm_dual_objective(std::span<const double> alpha, std::span<const double> y,
                                 const std::vector<double>& kernel) {
  const std::size_t n = alpha.size();
  double lin = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += alpha[i];
    for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i * n + j];
  }
  return lin - 0.5 * quad;
}

/// Binary C-SVM dual solved by SMO with second-order working-set selection
/// (maximal violating pair, Fan, Chen & Lin 2005). `kernel` is the full n x n
/// Gram matrix, labels y are +1/-1.
inline SmoResult solve_smo(const std::vector<double>& kernel, std::span<const double> y, const SmoConfig& cfg,
                           bool record_trace = false) {
  const std::size_t n = y.size();
  if (kernel.size() != n * n) throw std::invalid_argument("smo: kernel size mismatch");
  constexpr double kTau = 1e-12;
  const double C = cfg.c;
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * kernel[i * n + j]; };

  SmoResult r;
  r.alpha.assign(n, 0.0);
  std::vector<double> G(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  double objective = 0.0;          // primal-form value 1/2 a'Qa - e'a

  for (r.iterations = 0; r.iterations < cfg.max_iterations; ++r.iterations) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (r.alpha[t] < C && -G[t] >= gmax) gmax = -G[t], i = t;
      } else {
        if (r.alpha[t] > 0 && G[t] >= gmax) gmax = G[t], i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t j = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (r.alpha[t] > 0) {
          const double diff = gmax + G[t];
          gmax2 = std::max(gmax2, G[t]);
          if (i < n && diff > 0) {
            double quad = kernel[i * n + i] + kernel[t * n + t] - 2.0 * y[i] * Q(i, t);
            if (quad <= 0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best) best = obj, j = t;
          }
        }
      } else {
        if (r.alpha[t] < C) {
          const double diff = gmax - G[t];
          gmax2 = std::max(gmax2, -G[t]);
          if (i < n && diff > 0) {
            double quad = kernel[i * n + i] + kernel[t * n + t] + 2.0 * y[i] * Q(i, t);
            if (quad <= 0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best) best = obj, j = t;
          }
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < cfg.tolerance) {
      r.converged = true;
      break;
    }

    const double old_i = r.alpha[i];
    const double old_j = r.alpha[j];
    double& ai = r.alpha[i];
    double& aj = r.alpha[j];
    if (y[i] != y[j]) {
      double quad = kernel[i * n + i] + kernel[j * n + j] + 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) aj = 0, ai = diff;
      } else {
        if (ai < 0) ai = 0, aj = -diff;
      }
      if (diff > 0) {
        if (ai > C) ai = C, aj = C - diff;
      } else {
        if (aj > C) aj = C, ai = C + diff;
      }
    } else {
      double quad = kernel[i * n + i] + kernel[j * n + j] - 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) ai = C, aj = sum - C;
      } else {
        if (aj < 0) aj = 0, ai = sum;
      }
      if (sum > C) {
        if (aj > C) aj = C, ai = sum - C;
      } else {
        if (ai < 0) ai = 0, aj = sum;
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    // Exact change of the quadratic objective for the two-coordinate step.
    objective += G[i] * di + G[j] * dj + 0.5 * (Q(i, i) * di * di + 2.0 * Q(i, j) * di * dj + Q(j, j) * dj * dj);
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    if (record_trace) r.dual_trace.push_back(-objective);
  }

  // rho from free multipliers, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (r.alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (r.alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  r.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  r.dual_objective = svm_dual_objective(r.alpha, y, kernel);
  return r;
}

inline std::vector<double> gram_matrix(const std::vector<std::vector<double>>& xs, double gamma) {
  const std::size_t n = xs.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      k[i * n + j] = k[j * n + i] = rbf_kernel(xs[i], xs[j], gamma);
    }
  }
  return k;
}

}  // namespace oneshot
