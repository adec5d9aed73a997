#pragma once

// Heuristic and oracle solvers: damped fixed-point iteration for stationary
// distributions, fictitious play for finite-horizon games, damped
// best-response iteration for stationary games, and exact support
// enumeration for small bimatrix games.
//
// None of these claim convergence they did not measure: the compiled
// instances are PPAD-hard in general, so `converged` in the report is the
// contract, not an assumption.

#include <chrono>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "mfg/mean_field.hpp"
#include "mfg/reductions.hpp"

namespace mfg {

struct SolveReport {
  long iterations = 0;
  double residual = 0.0;      // final stability residual or exploitability
  bool converged = false;
  double wall_seconds = 0.0;
  std::vector<double> history;  // per-iteration residual/exploitability trace
};

namespace detail {

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace detail

// mu <- (1 - lambda) mu + lambda Gamma_P(mu, pi) from the uniform start.
inline std::pair<Distribution, SolveReport> damped_fixed_point(const ExprTable& t,
                                                               const Policy& pi, double damping,
                                                               double tol, long max_iters) {
  if (!(damping > 0.0 && damping <= 1.0)) throw GameError("damping must lie in (0, 1]");
  if (!(tol > 0.0)) throw GameError("tolerance must be positive");
  detail::Stopwatch clock;
  Distribution mu{std::vector<double>(t.num_states, 1.0 / double(t.num_states))};
  SolveReport rep;
  double residual = std::numeric_limits<double>::infinity();
  while (rep.iterations < max_iters) {
    Distribution pushed = gamma_p(t, mu, pi);
    residual = linf_distance(pushed, mu);
    rep.history.push_back(residual);
    ++rep.iterations;
    if (residual <= tol) break;
    std::vector<double> next(mu.size());
    for (std::size_t s = 0; s < mu.size(); ++s)
      next[s] = (1.0 - damping) * mu.p[s] + damping * pushed.p[s];
    mu = make_distribution(std::move(next));
  }
  rep.residual = stat_stability_residual(t, mu, pi);
  rep.converged = rep.residual <= tol;
  rep.wall_seconds = clock.seconds();
  return {std::move(mu), std::move(rep)};
}

// Fictitious play: best-respond exactly to the average policy's flow, then
// fold the response into the average with weight 1/k, so the first response
// replaces the uniform initialization outright. The recorded history is the
// exploitability of the average policy after each update.
inline std::pair<PolicySeq, SolveReport> fictitious_play_fh(const FhMfg& g, long iterations,
                                                            double stop_below = 0.0) {
  if (iterations < 1) throw GameError("fictitious play needs at least one iteration");
  detail::Stopwatch clock;
  PolicySeq avg(g.horizon, uniform_policy(g.num_states(), g.num_actions()));
  SolveReport rep;
  for (long k = 1; k <= iterations; ++k) {
    auto [br, br_value] = best_response_fh(g, lambda_flow(g, avg));
    double w = 1.0 / double(k);
    for (int h = 0; h < g.horizon; ++h)
      for (int s = 0; s < g.num_states(); ++s)
        for (int a = 0; a < g.num_actions(); ++a)
          avg[h].rows[s][a] = (1.0 - w) * avg[h].rows[s][a] + w * br[h].rows[s][a];
    for (const auto& pi : avg) validate_policy(pi, g.num_states(), g.num_actions());
    double exploit = exploitability_fh(g, avg);
    rep.history.push_back(exploit);
    rep.residual = exploit;
    rep.iterations = k;
    if (stop_below > 0.0 && exploit <= stop_below) break;
  }
  rep.converged = stop_below > 0.0 ? rep.residual <= stop_below : true;
  rep.wall_seconds = clock.seconds();
  return {std::move(avg), std::move(rep)};
}

// Alternate a damped stationary-distribution solve with an exact best
// response, averaging policies with weight `damping`.
inline std::pair<std::pair<Distribution, Policy>, SolveReport> damped_br_stat(
    const StatMfg& g, double damping, double tol, long max_iters,
    const Distribution* mu_init = nullptr, const Policy* pi_init = nullptr) {
  if (!(damping > 0.0 && damping <= 1.0)) throw GameError("damping must lie in (0, 1]");
  detail::Stopwatch clock;
  Policy pi = pi_init ? *pi_init : uniform_policy(g.num_states(), g.num_actions());
  Distribution mu = mu_init
                        ? *mu_init
                        : Distribution{std::vector<double>(g.num_states(), 1.0 / double(g.num_states()))};
  SolveReport rep;
  double gap = std::numeric_limits<double>::infinity();
  for (long k = 0; k < max_iters; ++k) {
    auto [mu_next, fp_rep] = damped_fixed_point(g.table, pi, damping, tol, 100000);
    mu = std::move(mu_next);
    auto [br, br_value] = best_response_stat(g, mu, tol);
    double own = value_stat(g, mu, pi, tol);
    gap = std::max(0.0, br_value - own);
    rep.history.push_back(gap);
    rep.iterations = k + 1;
    if (gap <= tol && fp_rep.converged) break;
    for (int s = 0; s < g.num_states(); ++s)
      for (int a = 0; a < g.num_actions(); ++a)
        pi.rows[s][a] = (1.0 - damping) * pi.rows[s][a] + damping * br.rows[s][a];
  }
  rep.residual = std::max(gap, stat_stability_residual(g.table, mu, pi));
  rep.converged = rep.residual <= tol &&
                  stat_stability_residual(g.table, mu, pi) <= tol;
  rep.wall_seconds = clock.seconds();
  return {{std::move(mu), std::move(pi)}, std::move(rep)};
}

// ---- exact bimatrix oracle ----

namespace detail {

// Solve a dense linear system by Gauss elimination; returns false when the
// pivot falls below the degeneracy threshold.
inline bool solve_linear(std::vector<std::vector<double>> m, std::vector<double>& out) {
  const int n = static_cast<int>(m.size());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    if (std::abs(m[c][c]) < 1e-12) return false;
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = m[r][c] / m[c][c];
      if (f == 0.0) continue;
      for (int cc = c; cc <= n; ++cc) m[r][cc] -= f * m[c][cc];
    }
  }
  out.assign(n, 0.0);
  for (int r = 0; r < n; ++r) out[r] = m[r][n] / m[r][r];
  return true;
}

inline void enumerate_supports(int k, int size, std::vector<std::vector<int>>& out) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == size) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < k; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

}  // namespace detail

struct SupportEnumerationResult {
  std::vector<double> sigma1, sigma2;
  bool found = false;
  bool degenerate_skipped = false;  // at least one singular indifference system met
};

// Enumerates equal-size support pairs in deterministic order (size, then
// lexicographic), solves the indifference systems, and returns the first
// exact equilibrium. Intended as the verification oracle for tiny games.
inline SupportEnumerationResult support_enumeration_2nash(const Matrix& A, const Matrix& B) {
  validate_payoffs(A, B);
  const int k1 = static_cast<int>(A.size()), k2 = static_cast<int>(A[0].size());
  if (k1 > 6 || k2 > 6) throw ReductionError("support enumeration guarded to K <= 6");
  const double kTol = 1e-9;
  SupportEnumerationResult res;

  for (int size = 1; size <= std::min(k1, k2); ++size) {
    std::vector<std::vector<int>> sup1, sup2;
    detail::enumerate_supports(k1, size, sup1);
    detail::enumerate_supports(k2, size, sup2);
    for (const auto& s1 : sup1)
      for (const auto& s2 : sup2) {
        // unknowns: sigma2 on s2 plus the row player's value v1
        // rows in s1 are indifferent; sigma2 sums to one
        std::vector<std::vector<double>> m1(size + 1, std::vector<double>(size + 2, 0.0));
        for (int r = 0; r < size; ++r) {
          for (int c = 0; c < size; ++c) m1[r][c] = A[s1[r]][s2[c]];
          m1[r][size] = -1.0;
        }
        for (int c = 0; c < size; ++c) m1[size][c] = 1.0;
        m1[size][size + 1] = 1.0;
        std::vector<double> x1;
        if (!detail::solve_linear(std::move(m1), x1)) {
          res.degenerate_skipped = true;
          continue;
        }
        std::vector<std::vector<double>> m2(size + 1, std::vector<double>(size + 2, 0.0));
        for (int c = 0; c < size; ++c) {
          for (int r = 0; r < size; ++r) m2[c][r] = B[s1[r]][s2[c]];
          m2[c][size] = -1.0;
        }
        for (int r = 0; r < size; ++r) m2[size][r] = 1.0;
        m2[size][size + 1] = 1.0;
        std::vector<double> x2;
        if (!detail::solve_linear(std::move(m2), x2)) {
          res.degenerate_skipped = true;
          continue;
        }

        std::vector<double> sigma1(k1, 0.0), sigma2(k2, 0.0);
        bool ok = true;
        for (int i = 0; i < size; ++i) {
          if (x2[i] < -kTol || x1[i] < -kTol) ok = false;
          sigma1[s1[i]] = std::max(0.0, x2[i]);
          sigma2[s2[i]] = std::max(0.0, x1[i]);
        }
        if (!ok) continue;
        auto verdict = verify_bimatrix_nash(A, B, sigma1, sigma2, kTol);
        if (!verdict.pass) continue;
        res.sigma1 = std::move(sigma1);
        res.sigma2 = std::move(sigma2);
        res.found = true;
        return res;
      }
  }
  return res;
}

}  // namespace mfg
