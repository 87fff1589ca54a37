#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace oneshot {

/// Discrete-emission hidden Markov model. Row-major matrices:
/// transition is states x states, emission is states x symbols.
struct DiscreteHmm {
  std::size_t states = 0;
  std::size_t symbols = 0;
  std::vector<double> initial;
  std::vector<double> transition;
  std::vector<double> emission;

  DiscreteHmm() = default;
  DiscreteHmm(std::size_t n_states, std::size_t n_symbols)
      : states(n_states),
        symbols(n_symbols),
        initial(n_states, 0.0),
        transition(n_states * n_states, 0.0),
        emission(n_states * n_symbols, 0.0) {}

  double a(std::size_t i, std::size_t j) const { return transition[i * states + j]; }
  double b(std::size_t i, std::size_t k) const { return emission[i * symbols + k]; }

  friend bool operator==(const DiscreteHmm&, const DiscreteHmm&) = default;
};

/// Which parameters are free; structural zeros stay zero through training.
struct HmmStructure {
  std::vector<char> initial;
  std::vector<char> transition;

  static HmmStructure full(std::size_t states) {
    return {std::vector<char>(states, 1), std::vector<char>(states * states, 1)};
  }

  /// Starts in state 0; each state may stay or advance by one.
  static HmmStructure left_to_right(std::size_t states) {
    HmmStructure s{std::vector<char>(states, 0), std::vector<char>(states * states, 0)};
    s.initial[0] = 1;
    for (std::size_t i = 0; i < states; ++i) {
      s.transition[i * states + i] = 1;
      if (i + 1 < states) s.transition[i * states + i + 1] = 1;
    }
    return s;
  }
};

/// Maximizes sum_i counts_i * log p_i over the simplex restricted to the
/// allowed entries with p_i >= floor. Disallowed entries are set to zero.
inline void floored_normalize(std::span<double> p, std::span<const double> counts, std::span<const char> allowed,
                              double floor) {
  const std::size_t n = p.size();
  std::vector<char> pinned(n, 0);
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < n; ++i) free_count += allowed[i] ? 1 : 0;
  if (free_count == 0) throw std::invalid_argument("floored_normalize: no allowed entries");
  if (static_cast<double>(free_count) * floor >= 1.0) throw std::invalid_argument("floored_normalize: floor too large");

  while (true) {
    double pinned_mass = 0.0;
    double sum = 0.0;
    std::size_t unpinned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!allowed[i]) continue;
      if (pinned[i]) {
        pinned_mass += floor;
      } else {
        sum += std::max(counts[i], 0.0);
        ++unpinned;
      }
    }
    const double remaining = 1.0 - pinned_mass;
    bool repinned = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!allowed[i]) {
        p[i] = 0.0;
      } else if (pinned[i]) {
        p[i] = floor;
      } else {
        p[i] = sum > 0.0 ? remaining * std::max(counts[i], 0.0) / sum
                         : remaining / static_cast<double>(unpinned);
        if (p[i] < floor) {
          pinned[i] = 1;
          repinned = true;
        }
      }
    }
    if (!repinned) return;
  }
}

/// log P(obs | model) by the scaled forward recursion.
inline double forward_log_likelihood(const DiscreteHmm& m, std::span<const int> obs) {
  if (obs.empty()) return 0.0;
  std::vector<double> alpha(m.states), next(m.states);
  double log_l = 0.0;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    const auto o = static_cast<std::size_t>(obs[t]);
    if (o >= m.symbols) throw std::invalid_argument("hmm: symbol out of range");
    double norm_c = 0.0;
    for (std::size_t j = 0; j < m.states; ++j) {
      double s = 0.0;
      if (t == 0) {
        s = m.initial[j];
      } else {
        for (std::size_t i = 0; i < m.states; ++i) s += alpha[i] * m.a(i, j);
      }
      next[j] = s * m.b(j, o);
      norm_c += next[j];
    }
    if (!(norm_c > 0.0)) return -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m.states; ++j) alpha[j] = next[j] / norm_c;
    log_l += std::log(norm_c);
  }
  return log_l;
}

struct BaumWelchConfig {
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;  // stop when the log-likelihood gain falls below this
  double floor = 1e-8;
};

struct BaumWelchTrace {
  std::vector<double> log_likelihood;  // total log-likelihood at the start of each iteration
  bool converged = false;
};

namespace detail {

struct ExpectedCounts {
  std::vector<double> initial, transition, emission;
  double log_likelihood = 0.0;
};

inline ExpectedCounts e_step(const DiscreteHmm& m, const std::vector<std::vector<int>>& seqs) {
  const std::size_t n = m.states;
  ExpectedCounts c{std::vector<double>(n, 0.0), std::vector<double>(n * n, 0.0),
                   std::vector<double>(n * m.symbols, 0.0), 0.0};
  for (const auto& obs : seqs) {
    const std::size_t T = obs.size();
    if (T == 0) continue;
    std::vector<double> alpha(T * n), beta(T * n), scale(T);
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<std::size_t>(obs[t]);
      if (o >= m.symbols) throw std::invalid_argument("hmm: symbol out of range");
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        if (t == 0) {
          s = m.initial[j];
        } else {
          for (std::size_t i = 0; i < n; ++i) s += alpha[(t - 1) * n + i] * m.a(i, j);
        }
        alpha[t * n + j] = s * m.b(j, o);
        sum += alpha[t * n + j];
      }
      if (!(sum > 0.0)) throw std::runtime_error("hmm: sequence has zero probability");
      scale[t] = 1.0 / sum;
      for (std::size_t j = 0; j < n; ++j) alpha[t * n + j] *= scale[t];
      c.log_likelihood -= std::log(scale[t]);
    }
    for (std::size_t i = 0; i < n; ++i) beta[(T - 1) * n + i] = scale[T - 1];
    for (std::size_t t = T - 1; t-- > 0;) {
      const auto o = static_cast<std::size_t>(obs[t + 1]);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += m.a(i, j) * m.b(j, o) * beta[(t + 1) * n + j];
        beta[t * n + i] = s * scale[t];
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = static_cast<std::size_t>(obs[t]);
      for (std::size_t i = 0; i < n; ++i) {
        const double gamma = alpha[t * n + i] * beta[t * n + i] / scale[t];
        if (t == 0) c.initial[i] += gamma;
        c.emission[i * m.symbols + o] += gamma;
      }
      if (t + 1 < T) {
        const auto o1 = static_cast<std::size_t>(obs[t + 1]);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            c.transition[i * n + j] += alpha[t * n + i] * m.a(i, j) * m.b(j, o1) * beta[(t + 1) * n + j];
          }
        }
      }
    }
  }
  return c;
}

inline void m_step(DiscreteHmm& m, const ExpectedCounts& c, const HmmStructure& s, double floor) {
  const std::size_t n = m.states;
  floored_normalize(m.initial, c.initial, s.initial, floor);
  for (std::size_t i = 0; i < n; ++i) {
    floored_normalize(std::span(m.transition).subspan(i * n, n), std::span(c.transition).subspan(i * n, n),
                      std::span(s.transition).subspan(i * n, n), floor);
  }
  const std::vector<char> all(m.symbols, 1);
  for (std::size_t i = 0; i < n; ++i) {
    floored_normalize(std::span(m.emission).subspan(i * m.symbols, m.symbols),
                      std::span(c.emission).subspan(i * m.symbols, m.symbols), all, floor);
  }
}

}  // namespace detail

/// Baum-Welch re-estimation over several sequences. The M-step is the exact
/// maximizer under the probability floor, so the total log-likelihood is
/// non-decreasing from one iteration to the next.
inline BaumWelchTrace baum_welch(DiscreteHmm& m, const std::vector<std::vector<int>>& seqs,
                                 const HmmStructure& structure, const BaumWelchConfig& cfg = {}) {
  BaumWelchTrace trace;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const auto counts = detail::e_step(m, seqs);
    if (!trace.log_likelihood.empty() &&
        counts.log_likelihood - trace.log_likelihood.back() < cfg.tolerance) {
      trace.log_likelihood.push_back(counts.log_likelihood);
      trace.converged = true;
      break;
    }
    trace.log_likelihood.push_back(counts.log_likelihood);
    detail::m_step(m, counts, structure, cfg.floor);
  }
  return trace;
}

/// Left-to-right model initialized from a uniform segmentation of each
/// sequence into `states` equal parts.
inline DiscreteHmm init_left_to_right(std::size_t states, std::size_t symbols,
                                      const std::vector<std::vector<int>>& seqs, double floor) {
  DiscreteHmm m(states, symbols);
  const auto structure = HmmStructure::left_to_right(states);
  std::vector<double> init(states, 0.0), trans(states * states, 0.0), emit(states * symbols, 0.0);
  init[0] = 1.0;
  for (const auto& obs : seqs) {
    const std::size_t T = obs.size();
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t s = std::min(states - 1, t * states / T);
      emit[s * symbols + static_cast<std::size_t>(obs[t])] += 1.0;
      if (t + 1 < T) {
        const std::size_t s1 = std::min(states - 1, (t + 1) * states / T);
        trans[s * states + s1] += 1.0;
      }
    }
  }
  for (double& v : trans) v += 0.5;  // keep both allowed moves reachable
  detail::ExpectedCounts c{init, trans, emit, 0.0};
  detail::m_step(m, c, structure, floor);
  return m;
}

}  // namespace oneshot
