#pragma once

// Exact mean-field computations: population pushforward, flows, values,
// best responses, exploitability, and sampled kernel Lipschitz estimates.

#include <cmath>
#include <limits>
#include <utility>

#include "mfg/game.hpp"

namespace mfg {

// Policy-averaged kernel row P-bar(.|s, pi(s), mu).
inline std::vector<double> averaged_kernel_row(const ExprTable& t, int s,
                                               const std::vector<double>& action_probs,
                                               const std::vector<double>& mu) {
  std::vector<double> out(t.num_states, 0.0);
  for (int a = 0; a < t.num_actions; ++a) {
    double w = action_probs[a];
    if (w == 0.0) continue;
    std::vector<double> row = eval_kernel_row(t, s, a, mu);
    for (int s2 = 0; s2 < t.num_states; ++s2) out[s2] += w * row[s2];
  }
  return out;
}

inline double averaged_reward(const ExprTable& t, int s, const std::vector<double>& action_probs,
                              const std::vector<double>& mu) {
  double out = 0.0;
  for (int a = 0; a < t.num_actions; ++a) {
    double w = action_probs[a];
    if (w != 0.0) out += w * eval_reward(t, s, a, mu);
  }
  return out;
}

// One-step population pushforward Gamma_P(mu, pi).
inline Distribution gamma_p(const ExprTable& t, const Distribution& mu, const Policy& pi) {
  validate_policy(pi, t.num_states, t.num_actions);
  std::vector<double> next(t.num_states, 0.0);
  for (int s = 0; s < t.num_states; ++s) {
    double ms = mu.p[s];
    if (ms == 0.0) continue;
    std::vector<double> row = averaged_kernel_row(t, s, pi.rows[s], mu.p);
    for (int s2 = 0; s2 < t.num_states; ++s2) next[s2] += ms * row[s2];
  }
  return make_distribution(std::move(next));
}

// H-step flow mu_0, Gamma(mu_0, pi_0), ... of a finite-horizon game.
inline Flow lambda_flow(const FhMfg& g, const PolicySeq& pis) {
  if (static_cast<int>(pis.size()) != g.horizon)
    throw GameError("policy sequence length does not match the horizon");
  Flow flow;
  flow.reserve(g.horizon);
  flow.push_back(g.mu0);
  for (int h = 0; h + 1 < g.horizon; ++h)
    flow.push_back(gamma_p(g.table, flow.back(), pis[h]));
  return flow;
}

// Exact expected total reward of a representative agent playing `pis` while
// the population follows `flow`: the agent's state law is propagated as a
// finite chain, no sampling involved.
inline double value_fh(const FhMfg& g, const Flow& flow, const PolicySeq& pis) {
  if (static_cast<int>(flow.size()) != g.horizon || static_cast<int>(pis.size()) != g.horizon)
    throw GameError("flow/policy length does not match the horizon");
  std::vector<double> law = g.mu0.p;
  double value = 0.0;
  for (int h = 0; h < g.horizon; ++h) {
    const auto& mu = flow[h].p;
    const Policy& pi = pis[h];
    std::vector<double> next(law.size(), 0.0);
    for (int s = 0; s < g.num_states(); ++s) {
      double ls = law[s];
      if (ls == 0.0) continue;
      value += ls * averaged_reward(g.table, s, pi.rows[s], mu);
      if (h + 1 < g.horizon) {
        std::vector<double> row = averaged_kernel_row(g.table, s, pi.rows[s], mu);
        for (int s2 = 0; s2 < g.num_states(); ++s2) next[s2] += ls * row[s2];
      }
    }
    law = std::move(next);
  }
  return value;
}

// Exact backward induction against a frozen flow. Ties break toward the
// lowest action index so golden tests stay deterministic.
inline std::pair<PolicySeq, double> best_response_fh(const FhMfg& g, const Flow& flow) {
  if (static_cast<int>(flow.size()) != g.horizon)
    throw GameError("flow length does not match the horizon");
  const int S = g.num_states(), A = g.num_actions();
  std::vector<double> v_next(S, 0.0);
  PolicySeq br(g.horizon);
  for (int h = g.horizon - 1; h >= 0; --h) {
    const auto& mu = flow[h].p;
    std::vector<double> v(S, 0.0);
    std::vector<int> act(S, 0);
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double q = eval_reward(g.table, s, a, mu);
        if (h + 1 < g.horizon) {
          std::vector<double> row = eval_kernel_row(g.table, s, a, mu);
          for (int s2 = 0; s2 < S; ++s2) q += row[s2] * v_next[s2];
        }
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      v[s] = best;
      act[s] = best_a;
    }
    br[h] = deterministic_policy(act, A);
    v_next = std::move(v);
  }
  double value = 0.0;
  for (int s = 0; s < S; ++s) value += g.mu0.p[s] * v_next[s];
  return {std::move(br), value};
}

// Best-response value minus the policy's own value, both against the flow
// the policy induces. Nonnegative up to float error; zero exactly at a NE.
inline double exploitability_fh(const FhMfg& g, const PolicySeq& pis) {
  Flow flow = lambda_flow(g, pis);
  double br_value = best_response_fh(g, flow).second;
  return br_value - value_fh(g, flow, pis);
}

// ---- stationary (discounted) operations on the frozen-mu MDP ----

// Smallest T with gamma^T/(1-gamma) <= tol.
inline int truncation_horizon(double gamma, double tol) {
  if (!(tol > 0.0)) throw GameError("tolerance must be positive");
  int T = 1;
  double tail = gamma / (1.0 - gamma);
  while (tail > tol && T < 1000000) {
    tail *= gamma;
    ++T;
  }
  return T;
}

// V^gamma(mu, pi) of the frozen-mu MDP started from mu itself, truncated so
// the remainder is below tol.
inline double value_stat(const StatMfg& g, const Distribution& mu, const Policy& pi, double tol) {
  validate_policy(pi, g.num_states(), g.num_actions());
  const int S = g.num_states();
  const int T = truncation_horizon(g.gamma, tol);
  std::vector<std::vector<double>> rows(S);
  std::vector<double> r(S);
  for (int s = 0; s < S; ++s) {
    rows[s] = averaged_kernel_row(g.table, s, pi.rows[s], mu.p);
    r[s] = averaged_reward(g.table, s, pi.rows[s], mu.p);
  }
  std::vector<double> v(S, 0.0);
  for (int t = 0; t < T; ++t) {
    std::vector<double> next(S, 0.0);
    for (int s = 0; s < S; ++s) {
      double acc = r[s];
      const auto& row = rows[s];
      for (int s2 = 0; s2 < S; ++s2) acc += g.gamma * row[s2] * v[s2];
      next[s] = acc;
    }
    v = std::move(next);
  }
  double out = 0.0;
  for (int s = 0; s < S; ++s) out += mu.p[s] * v[s];
  return out;
}

// Exact policy evaluation via (I - gamma P) v = r; offered for small systems
// and used as an independent cross-check of the truncated route.
inline double value_stat_linsolve(const StatMfg& g, const Distribution& mu, const Policy& pi) {
  const int S = g.num_states();
  if (S * g.num_actions() > 64) throw GameError("linear solve offered only for |S|*|A| <= 64");
  std::vector<std::vector<double>> m(S, std::vector<double>(S + 1, 0.0));
  for (int s = 0; s < S; ++s) {
    auto row = averaged_kernel_row(g.table, s, pi.rows[s], mu.p);
    for (int s2 = 0; s2 < S; ++s2) m[s][s2] = (s == s2 ? 1.0 : 0.0) - g.gamma * row[s2];
    m[s][S] = averaged_reward(g.table, s, pi.rows[s], mu.p);
  }
  for (int c = 0; c < S; ++c) {
    int piv = c;
    for (int rr = c + 1; rr < S; ++rr)
      if (std::abs(m[rr][c]) > std::abs(m[piv][c])) piv = rr;
    std::swap(m[c], m[piv]);
    double d = m[c][c];
    if (std::abs(d) < 1e-14) throw GameError("singular system in stationary value solve");
    for (int rr = 0; rr < S; ++rr) {
      if (rr == c) continue;
      double f = m[rr][c] / d;
      if (f == 0.0) continue;
      for (int cc = c; cc <= S; ++cc) m[rr][cc] -= f * m[c][cc];
    }
  }
  double out = 0.0;
  for (int s = 0; s < S; ++s) out += mu.p[s] * m[s][S] / m[s][s];
  return out;
}

// Value iteration on the frozen-mu MDP down to Bellman residual
// tol*(1-gamma)/(2 gamma), then greedy policy evaluation.
inline std::pair<Policy, double> best_response_stat(const StatMfg& g, const Distribution& mu,
                                                    double tol) {
  const int S = g.num_states(), A = g.num_actions();
  std::vector<std::vector<std::vector<double>>> rows(S);
  std::vector<std::vector<double>> r(S);
  for (int s = 0; s < S; ++s) {
    rows[s].resize(A);
    r[s].resize(A);
    for (int a = 0; a < A; ++a) {
      rows[s][a] = eval_kernel_row(g.table, s, a, mu.p);
      r[s][a] = eval_reward(g.table, s, a, mu.p);
    }
  }
  const double target = tol * (1.0 - g.gamma) / (2.0 * g.gamma);
  std::vector<double> v(S, 0.0);
  std::vector<int> act(S, 0);
  const long max_iters = 10000000;
  for (long it = 0;; ++it) {
    if (it >= max_iters)
      throw GameError("value iteration did not reach the residual target; tol too small");
    double residual = 0.0;
    std::vector<double> next(S);
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double q = r[s][a];
        const auto& row = rows[s][a];
        for (int s2 = 0; s2 < S; ++s2) q += g.gamma * row[s2] * v[s2];
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      next[s] = best;
      act[s] = best_a;
      residual = std::max(residual, std::abs(best - v[s]));
    }
    v = std::move(next);
    if (residual <= target) break;
  }
  Policy greedy = deterministic_policy(act, A);
  double value = value_stat(g, mu, greedy, tol / 2.0);
  return {std::move(greedy), value};
}

// l-infinity residual of the stationarity condition Gamma_P(mu, pi) = mu;
// the eps-StatDist criterion compares eps/|S| against this value.
inline double stat_stability_residual(const ExprTable& t, const Distribution& mu, const Policy& pi) {
  Distribution pushed = gamma_p(t, mu, pi);
  return linf_distance(pushed, mu);
}

// Optimality gap at a candidate stationary pair, floored at zero.
inline double exploitability_stat(const StatMfg& g, const Distribution& mu, const Policy& pi,
                                  double tol) {
  double br = best_response_stat(g, mu, tol).second;
  double own = value_stat(g, mu, pi, tol);
  return std::max(0.0, br - own);
}

struct KernelConstants {
  double k_s = 0.0;       // sup row TV distance over state pairs; exact in the pairs
  double k_a = 0.0;       // sup row TV distance over action pairs
  double k_mu_hat = 0.0;  // sampled lower estimate of the mu-Lipschitz constant
  double l_pop_hat = 0.0; // k_mu_hat + k_s/2 + k_a/2
};

// K_s and K_a are maximized exactly over the finite state/action choices at
// each sampled mu; K_mu_hat is a max sampled difference quotient and thus a
// lower estimate. The pair set mixes independent draws with small coordinate
// transfers so steep kernels reveal their local slope. When `out_pairs` is
// given it receives every (mu, mu') pair the estimate saw, so callers can
// check the bound against the very sample that produced it.
inline KernelConstants kernel_constants(
    const ExprTable& t, int mu_samples, std::uint64_t seed,
    std::vector<std::pair<std::vector<double>, std::vector<double>>>* out_pairs = nullptr) {
  if (mu_samples < 2) throw GameError("kernel_constants needs at least 2 samples");
  auto rng = make_stream(seed, 7);
  const int S = t.num_states, A = t.num_actions;
  KernelConstants out;

  auto l1 = [S](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (int i = 0; i < S; ++i) d += std::abs(a[i] - b[i]);
    return d;
  };

  std::vector<std::vector<double>> mus;
  mus.reserve(mu_samples);
  for (int k = 0; k < mu_samples; ++k) mus.push_back(random_simplex(rng, S));

  std::vector<std::vector<double>> rows(S * A);
  for (const auto& mu : mus) {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) rows[s * A + a] = eval_kernel_row(t, s, a, mu);
    for (int a = 0; a < A; ++a)
      for (int s = 0; s < S; ++s)
        for (int s2 = s + 1; s2 < S; ++s2)
          out.k_s = std::max(out.k_s, l1(rows[s * A + a], rows[s2 * A + a]));
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int a2 = a + 1; a2 < A; ++a2)
          out.k_a = std::max(out.k_a, l1(rows[s * A + a], rows[s * A + a2]));
  }

  auto ratio_for_pair = [&](const std::vector<double>& mu1, const std::vector<double>& mu2) {
    double denom = 0.0;
    for (int i = 0; i < S; ++i) denom += std::abs(mu1[i] - mu2[i]);
    if (denom < 1e-12) return;
    if (out_pairs) out_pairs->emplace_back(mu1, mu2);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double d = l1(eval_kernel_row(t, s, a, mu1), eval_kernel_row(t, s, a, mu2));
        out.k_mu_hat = std::max(out.k_mu_hat, d / denom);
      }
  };

  for (int k = 0; k + 1 < mu_samples; ++k) ratio_for_pair(mus[k], mus[k + 1]);
  for (int k = 0; k < mu_samples; ++k) {
    const auto& mu = mus[k];
    int i = static_cast<int>(rng() % S);
    int j = static_cast<int>(rng() % S);
    if (i == j) j = (j + 1) % S;
    double step = uniform_in(rng, 1e-6, 1e-3) * mu[i];
    if (step <= 0.0) continue;
    std::vector<double> moved = mu;
    moved[i] -= step;
    moved[j] += step;
    ratio_for_pair(mu, moved);
  }

  out.l_pop_hat = out.k_mu_hat + out.k_s / 2.0 + out.k_a / 2.0;
  return out;
}

}  // namespace mfg
