#pragma once

// The two 6-state lower-bound games and their named policies, built exactly.
//
// Both games share the state layout sLeft, sRight, sLA, sLB, sRA, sRB and
// actions aA, aB. Even steps route deterministically from the side states to
// the mid states by action; mid states route back through a steep threshold
// of the group masses. Rewards mix a majority-share term g, a balance term h
// and a flat action bonus beta.
//
// Off the reachable set the literal constructions leave kernel rows short of
// a full distribution, so the side-state masses are folded into the threshold
// arguments (finite-horizon game) and the leftover mass is split evenly
// between the two return edges (stationary game). Both completions agree
// exactly with the originals wherever the originals are well-defined rows.

#include <array>
#include <cmath>

#include "mfg/game.hpp"

namespace mfg {

enum : int { kLeft = 0, kRight = 1, kLA = 2, kLB = 3, kRA = 4, kRB = 5 };
enum : int { kActA = 0, kActB = 1 };

inline const std::vector<std::string>& lower_bound_states() {
  static const std::vector<std::string> names = {"sLeft", "sRight", "sLA", "sLB", "sRA", "sRB"};
  return names;
}

inline const std::vector<std::string>& lower_bound_actions() {
  static const std::vector<std::string> names = {"aA", "aB"};
  return names;
}

struct FhLowerParams {
  double eps = 1.0 / 16.0;
  double alpha = 0.05;
  double beta = 0.05;
  int horizon = 4;
};

struct StatLowerParams {
  double eps = 1.0 / 6.0;
  double alpha = 0.05;
  double beta = 0.05;
  double gamma = 0.8;
};

// Majority share g(x1,x2) = (x1/max{x1,x2}, x2/max{x1,x2}) on the 2-simplex.
inline std::array<double, 2> g_pair(double x1, double x2) {
  double m = std::max(x1, x2);
  return {x1 / m, x2 / m};
}

// Balance reward h(x1,x2) = (u1(4 x2), u1(4 x1)); clamped so rewards stay in
// [0,1] off the equal-split support.
inline std::array<double, 2> h_pair(double x1, double x2) {
  auto u1 = [](double x) { return std::max(0.0, std::min(1.0, x)); };
  return {u1(4.0 * x2), u1(4.0 * x1)};
}

namespace detail {

inline Expr mu_of(int state) { return make_mu(lower_bound_states()[state], state); }

inline void set_reward_pair(ExprTable& t, int s, Expr g_term, Expr h_term, double alpha,
                            double beta) {
  Expr base = make_const(1.0 - alpha - beta) * g_term + make_const(alpha) * h_term;
  t.reward_at(s, kActA) = base;
  t.reward_at(s, kActB) = base + make_const(beta);
}

}  // namespace detail

inline FhMfg build_fh_lower(const FhLowerParams& p) {
  if (!(p.eps > 0.0 && p.eps < 0.5)) throw GameError("fh lower bound: eps must lie in (0, 1/2)");
  if (!(p.alpha > 0.0 && p.beta > 0.0 && p.alpha + p.beta < 1.0))
    throw GameError("fh lower bound: need alpha, beta > 0 and alpha + beta < 1");
  if (!(p.alpha < 0.25)) throw GameError("fh lower bound: alpha must be below 1/4");
  if (p.horizon < 1) throw GameError("fh lower bound: horizon must be positive");

  using detail::mu_of;
  FhMfg g;
  g.states = lower_bound_states();
  g.actions = lower_bound_actions();
  g.horizon = p.horizon;
  g.mu0 = make_distribution({0.5, 0.5, 0, 0, 0, 0});
  g.table = make_expr_table(6, 2);

  // side states: action picks the mid state, remembering side and action
  for (int a : {kActA, kActB}) {
    g.table.kernel_at(kLeft, a, a == kActA ? kLA : kLB) = make_const(1.0);
    g.table.kernel_at(kRight, a, a == kActA ? kRA : kRB) = make_const(1.0);
  }

  // group masses, augmented with the opposite side state so the two
  // arguments always sum to 1 and the return rows stay stochastic
  Expr l_group = mu_of(kLA) + mu_of(kLB) + mu_of(kRight);
  Expr r_group = mu_of(kRA) + mu_of(kRB) + mu_of(kLeft);

  for (int m : {kLA, kLB, kRA, kRB})
    for (int a : {kActA, kActB}) {
      g.table.kernel_at(m, a, kLeft) = omega_expr(p.eps, l_group);
      g.table.kernel_at(m, a, kRight) = omega_expr(p.eps, r_group);
    }

  // g-share: action A is paid by the left group share, action B by the
  // right group share, which is what makes the side-dependent deterministic
  // deviation collect the full majority share after concentration
  Expr denom = emax(l_group, r_group);
  Expr g_act_a = l_group / denom;
  Expr g_act_b = r_group / denom;

  auto h1 = [](int other) { return clamp01(make_const(4.0) * mu_of(other)); };
  detail::set_reward_pair(g.table, kLA, g_act_a, h1(kLB), p.alpha, p.beta);
  detail::set_reward_pair(g.table, kLB, g_act_b, h1(kLA), p.alpha, p.beta);
  detail::set_reward_pair(g.table, kRA, g_act_a, h1(kRB), p.alpha, p.beta);
  detail::set_reward_pair(g.table, kRB, g_act_b, h1(kRA), p.alpha, p.beta);
  // side states reward 0 (omitted entries)

  validate_fh(g);
  return g;
}

// Unique equilibrium policy: uniform at even steps, aB at odd steps.
inline PolicySeq fh_ne_policy(int horizon) {
  if (horizon < 1) throw GameError("horizon must be positive");
  PolicySeq pis;
  pis.reserve(horizon);
  Policy even = uniform_policy(6, 2);
  Policy odd = deterministic_policy(std::vector<int>(6, kActB), 2);
  for (int h = 0; h < horizon; ++h) pis.push_back(h % 2 == 0 ? even : odd);
  return pis;
}

// Time-homogeneous deviation: aA at sLeft, aB at sRight, aB at mid states.
inline PolicySeq fh_br_policy(int horizon) {
  if (horizon < 1) throw GameError("horizon must be positive");
  std::vector<int> act(6, kActB);
  act[kLeft] = kActA;
  act[kRight] = kActB;
  Policy pi = deterministic_policy(act, 2);
  return PolicySeq(horizon, pi);
}

inline StatMfg build_stat_lower(const StatLowerParams& p) {
  if (!(p.eps > 0.0 && p.eps < 0.5)) throw GameError("stat lower bound: eps must lie in (0, 1/2)");
  if (!(p.gamma > 1.0 / std::sqrt(2.0) && p.gamma < 1.0))
    throw GameError("stat lower bound: gamma must lie in (1/sqrt(2), 1)");
  if (!(p.alpha >= 0.0 && p.beta > 0.0 && p.alpha + p.beta < 1.0))
    throw GameError("stat lower bound: need alpha >= 0, beta > 0 and alpha + beta < 1");

  using detail::mu_of;
  StatMfg g;
  g.states = lower_bound_states();
  g.actions = lower_bound_actions();
  g.gamma = p.gamma;
  g.table = make_expr_table(6, 2);

  for (int a : {kActA, kActB}) {
    g.table.kernel_at(kLeft, a, a == kActA ? kLA : kLB) = make_const(1.0);
    g.table.kernel_at(kRight, a, a == kActA ? kRA : kRB) = make_const(1.0);
  }

  // group shares with the 4/9 denominator floor
  const double kFloor = 4.0 / 9.0;
  Expr mid_sum = mu_of(kLA) + mu_of(kLB) + mu_of(kRA) + mu_of(kRB);
  Expr denom = emax(mid_sum, make_const(kFloor));
  Expr q_l = (mu_of(kLA) + mu_of(kLB)) / denom;
  Expr q_r = (mu_of(kRA) + mu_of(kRB)) / denom;

  // oscillating return edges: left-group share sends agents right and vice
  // versa; leftover mass (only present when Q_L + Q_R < 1) splits evenly
  Expr w_l = omega_expr(p.eps, q_l);
  Expr w_r = omega_expr(p.eps, q_r);
  Expr to_right = make_const(0.5) * (make_const(1.0) + w_l - w_r);
  Expr to_left = make_const(0.5) * (make_const(1.0) + w_r - w_l);
  for (int m : {kLA, kLB, kRA, kRB})
    for (int a : {kActA, kActB}) {
      g.table.kernel_at(m, a, kLeft) = to_left;
      g.table.kernel_at(m, a, kRight) = to_right;
    }

  // g-share on the Q coordinates: the A mid state earns its own side's
  // share, the B mid state the opposite share; denominator floored at 4/9
  // so the expression stays defined when the mid group is empty
  Expr q_max = emax(emax(q_l, q_r), make_const(kFloor));
  Expr g_own_l = q_l / q_max;
  Expr g_own_r = q_r / q_max;

  auto h1 = [](int other) { return clamp01(make_const(4.0) * mu_of(other)); };
  detail::set_reward_pair(g.table, kLA, g_own_l, h1(kLB), p.alpha, p.beta);
  detail::set_reward_pair(g.table, kLB, g_own_r, h1(kLA), p.alpha, p.beta);
  detail::set_reward_pair(g.table, kRA, g_own_r, h1(kRB), p.alpha, p.beta);
  detail::set_reward_pair(g.table, kRB, g_own_l, h1(kRA), p.alpha, p.beta);

  validate_stat(g);
  return g;
}

// Closed-form stationary equilibrium pair of the stationary game.
inline std::pair<Distribution, Policy> stat_ne() {
  Distribution mu = make_distribution({0.25, 0.25, 0.125, 0.125, 0.125, 0.125});
  Policy pi = uniform_policy(6, 2);
  for (int m : {kLA, kLB, kRA, kRB}) pi.rows[m] = {0.0, 1.0};
  return {std::move(mu), std::move(pi)};
}

// Ergodic deviation for the stationary game: aA at both side states.
inline Policy stat_br_policy() {
  std::vector<int> act(6, kActB);
  act[kLeft] = kActA;
  act[kRight] = kActA;
  return deterministic_policy(act, 2);
}

}  // namespace mfg
