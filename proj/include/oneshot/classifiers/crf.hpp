#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oneshot {

/// One training/decoding sequence: active observation features per frame,
/// and (for training) the gold label per frame.
struct CrfSequence {
  std::vector<std::vector<int>> features;
  std::vector<int> labels;
};

/// First-order linear-chain CRF with indicator features:
/// state weights (observation feature x label), label transitions and
/// start-label weights. Parameter layout in `weights`:
/// [feature * labels + label] | [prev * labels + label] | [label].
struct LinearChainCrf {
  std::size_t labels = 0;
  std::size_t features = 0;
  std::vector<double> weights;

  LinearChainCrf() = default;
  LinearChainCrf(std::size_t n_labels, std::size_t n_features)
      : labels(n_labels), features(n_features), weights(parameter_count(n_labels, n_features), 0.0) {}

  static std::size_t parameter_count(std::size_t l, std::size_t f) { return f * l + l * l + l; }
  std::size_t state_index(int feature, int label) const {
    return static_cast<std::size_t>(feature) * labels + static_cast<std::size_t>(label);
  }
  std::size_t transition_index(int prev, int label) const {
    return features * labels + static_cast<std::size_t>(prev) * labels + static_cast<std::size_t>(label);
  }
  std::size_t start_index(int label) const {
    return features * labels + labels * labels + static_cast<std::size_t>(label);
  }

  /// Per-frame label scores (state features plus start weights at t = 0).
  std::vector<double> emissions(const CrfSequence& s, const std::vector<double>& w) const {
    const std::size_t T = s.features.size();
    std::vector<double> e(T * labels, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      for (int f : s.features[t]) {
        if (f < 0 || static_cast<std::size_t>(f) >= features) throw std::invalid_argument("crf: feature out of range");
        for (std::size_t y = 0; y < labels; ++y) e[t * labels + y] += w[state_index(f, static_cast<int>(y))];
      }
    }
    for (std::size_t y = 0; y < labels; ++y) e[y] += w[start_index(static_cast<int>(y))];
    return e;
  }

  /// Unnormalized score of a labeling.
  double path_score(const CrfSequence& s, const std::vector<int>& y, const std::vector<double>& w) const {
    const auto e = emissions(s, w);
    double score = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
      score += e[t * labels + static_cast<std::size_t>(y[t])];
      if (t > 0) score += w[transition_index(y[t - 1], y[t])];
    }
    return score;
  }

  double log_partition(const CrfSequence& s) const { return forward_backward(s, weights, nullptr); }

  /// log p(labels | features) under `w`.
  double log_likelihood(const CrfSequence& s, const std::vector<double>& w) const {
    return path_score(s, s.labels, w) - forward_backward(s, w, nullptr);
  }

  /// log Z; when `grad` is given, subtracts the model expectation of every
  /// feature from it. Runs the scaled forward-backward recursion in
  /// probability space: emissions and transitions are exponentiated once
  /// after subtracting their maxima, alphas are renormalized per frame and
  /// the log normalizers are accumulated into log Z.
  double forward_backward(const CrfSequence& s, const std::vector<double>& w, std::vector<double>* grad) const {
    const std::size_t T = s.features.size();
    const std::size_t L = labels;
    if (T == 0) return 0.0;
    const auto e = emissions(s, w);

    double t_max = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < L; ++p) {
      for (std::size_t y = 0; y < L; ++y) t_max = std::max(t_max, w[transition_index(static_cast<int>(p), static_cast<int>(y))]);
    }
    std::vector<double> A(L * L);
    for (std::size_t p = 0; p < L; ++p) {
      for (std::size_t y = 0; y < L; ++y) {
        A[p * L + y] = std::exp(w[transition_index(static_cast<int>(p), static_cast<int>(y))] - t_max);
      }
    }
    std::vector<double> E(T * L), scale(T);
    double log_z = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t y = 0; y < L; ++y) m = std::max(m, e[t * L + y]);
      for (std::size_t y = 0; y < L; ++y) E[t * L + y] = std::exp(e[t * L + y] - m);
      log_z += m + (t > 0 ? t_max : 0.0);
    }

    std::vector<double> alpha(T * L, 0.0), beta(T * L, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      double* a = &alpha[t * L];
      if (t == 0) {
        for (std::size_t y = 0; y < L; ++y) a[y] = E[y];
      } else {
        const double* prev = &alpha[(t - 1) * L];
        for (std::size_t p = 0; p < L; ++p) {
          if (prev[p] == 0.0) continue;
          for (std::size_t y = 0; y < L; ++y) a[y] += prev[p] * A[p * L + y];
        }
        for (std::size_t y = 0; y < L; ++y) a[y] *= E[t * L + y];
      }
      double c = 0.0;
      for (std::size_t y = 0; y < L; ++y) c += a[y];
      if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
      scale[t] = c;
      for (std::size_t y = 0; y < L; ++y) a[y] /= c;
      log_z += std::log(c);
    }
    if (grad == nullptr) return log_z;

    for (std::size_t y = 0; y < L; ++y) beta[(T - 1) * L + y] = 1.0;
    std::vector<double> tmp(L);
    for (std::size_t t = T - 1; t-- > 0;) {
      for (std::size_t n = 0; n < L; ++n) tmp[n] = E[(t + 1) * L + n] * beta[(t + 1) * L + n];
      for (std::size_t p = 0; p < L; ++p) {
        double sum = 0.0;
        for (std::size_t n = 0; n < L; ++n) sum += A[p * L + n] * tmp[n];
        beta[t * L + p] = sum / scale[t + 1];
      }
    }
    auto& g = *grad;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t y = 0; y < L; ++y) {
        const double marginal = alpha[t * L + y] * beta[t * L + y];
        for (int f : s.features[t]) g[state_index(f, static_cast<int>(y))] -= marginal;
        if (t == 0) g[start_index(static_cast<int>(y))] -= marginal;
      }
      if (t == 0) continue;
      for (std::size_t y = 0; y < L; ++y) tmp[y] = E[t * L + y] * beta[t * L + y] / scale[t];
      for (std::size_t p = 0; p < L; ++p) {
        const double ap = alpha[(t - 1) * L + p];
        if (ap == 0.0) continue;
        for (std::size_t y = 0; y < L; ++y) {
          g[transition_index(static_cast<int>(p), static_cast<int>(y))] -= ap * A[p * L + y] * tmp[y];
        }
      }
    }
    return log_z;
  }

  /// Regularized objective sum log p(y|x) - l2/2 |w|^2 and its gradient.
  double objective(const std::vector<CrfSequence>& data, const std::vector<double>& w, double l2,
                   std::vector<double>* grad) const {
    if (grad) grad->assign(w.size(), 0.0);
    double total = 0.0;
    for (const auto& s : data) {
      if (s.labels.size() != s.features.size()) throw std::invalid_argument("crf: labels/features length mismatch");
      total += path_score(s, s.labels, w) - forward_backward(s, w, grad);
      if (grad) {
        auto& g = *grad;
        for (std::size_t t = 0; t < s.labels.size(); ++t) {
          for (int f : s.features[t]) g[state_index(f, s.labels[t])] += 1.0;
          if (t == 0) g[start_index(s.labels[0])] += 1.0;
          else g[transition_index(s.labels[t - 1], s.labels[t])] += 1.0;
        }
      }
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sq += w[i] * w[i];
      if (grad) (*grad)[i] -= l2 * w[i];
    }
    return total - 0.5 * l2 * sq;
  }

  struct Decoded {
    std::vector<int> labels;
    double score = 0.0;
  };

  /// Highest-scoring labeling; ties resolve to the lowest label index.
  Decoded viterbi(const CrfSequence& s) const {
    const std::size_t T = s.features.size();
    const std::size_t L = labels;
    Decoded d;
    if (T == 0) return d;
    const auto e = emissions(s, weights);
    std::vector<double> delta(T * L);
    std::vector<int> back(T * L, 0);
    for (std::size_t y = 0; y < L; ++y) delta[y] = e[y];
    for (std::size_t t = 1; t < T; ++t) {
      for (std::size_t y = 0; y < L; ++y) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (std::size_t p = 0; p < L; ++p) {
          const double v = delta[(t - 1) * L + p] + weights[transition_index(static_cast<int>(p), static_cast<int>(y))];
          if (v > best) best = v, arg = static_cast<int>(p);
        }
        delta[t * L + y] = best + e[t * L + y];
        back[t * L + y] = arg;
      }
    }
    int last = 0;
    for (std::size_t y = 1; y < L; ++y) {
      if (delta[(T - 1) * L + y] > delta[(T - 1) * L + static_cast<std::size_t>(last)]) last = static_cast<int>(y);
    }
    d.score = delta[(T - 1) * L + static_cast<std::size_t>(last)];
    d.labels.assign(T, 0);
    d.labels[T - 1] = last;
    for (std::size_t t = T - 1; t > 0; --t) {
      d.labels[t - 1] = back[t * L + static_cast<std::size_t>(d.labels[t])];
    }
    return d;
  }
};

struct CrfTrainConfig {
  double l2 = 1.0;
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-5;
  double armijo = 1e-4;    // sufficient-increase constant
  double backtrack = 0.5;  // step shrink factor
};

struct CrfTrainTrace {
  std::vector<double> objective;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Gradient ascent with Armijo backtracking; each trial step starts from
/// the Barzilai-Borwein estimate of the previous iteration.
inline CrfTrainTrace train_crf_weights(LinearChainCrf& crf, const std::vector<CrfSequence>& data,
                                       const CrfTrainConfig& cfg) {
  CrfTrainTrace trace;
  std::vector<double> w = crf.weights;
  std::vector<double> g, g_new, w_new, w_prev, g_prev;
  double f = crf.objective(data, w, cfg.l2, &g);
  trace.objective.push_back(f);
  double step = 1.0;
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  {
    const double gn = std::sqrt(dot(g, g));
    if (gn > 0.0) step = 1.0 / gn;
  }

  for (trace.iterations = 0; trace.iterations < cfg.max_iterations; ++trace.iterations) {
    const double gg = dot(g, g);
    if (std::sqrt(gg) < cfg.gradient_tolerance * std::max(1.0, std::sqrt(dot(w, w)))) {
      trace.converged = true;
      break;
    }
    double f_new = f;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      w_new = w;
      for (std::size_t i = 0; i < w.size(); ++i) w_new[i] += step * g[i];
      f_new = crf.objective(data, w_new, cfg.l2, &g_new);
      if (f_new >= f + cfg.armijo * step * gg) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) {
      trace.converged = true;  // no ascent possible at machine precision
      break;
    }
    // Barzilai-Borwein step for the next iteration (ascent form).
    double sy = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double si = w_new[i] - w[i];
      const double yi = g[i] - g_new[i];
      sy += si * yi;
      ss += si * si;
    }
    w.swap(w_new);
    g.swap(g_new);
    const bool stalled = std::abs(f_new - f) <= 1e-12 * std::max(1.0, std::abs(f));
    f = f_new;
    trace.objective.push_back(f);
    step = sy > 0.0 ? ss / sy : step * 2.0;
    if (stalled) {
      trace.converged = true;
      ++trace.iterations;
      break;
    }
  }
  crf.weights = std::move(w);
  return trace;
}

}  // namespace oneshot
