#pragma once

// Small hand-built games shared across the test suite.

#include <random>
#include <string>
#include <vector>

#include "mfg/game.hpp"
#include "mfg/mean_field.hpp"
#include "mfg/rng.hpp"

namespace fixtures {

using namespace mfg;

// Random expression tree for parser round-trip properties.
inline Expr random_expr_tree(std::mt19937_64& rng, const std::vector<std::string>& states,
                             int depth) {
  int pick = depth == 0 ? static_cast<int>(rng() % 2) : static_cast<int>(rng() % 8);
  switch (pick) {
    case 0:
      return make_const(uniform_in(rng, 0.0, 2.0));
    case 1: {
      int s = static_cast<int>(rng() % states.size());
      return make_mu(states[s], s);
    }
    default: {
      Expr a = random_expr_tree(rng, states, depth - 1);
      Expr b = random_expr_tree(rng, states, depth - 1);
      ExprOp ops[] = {ExprOp::Add, ExprOp::Sub, ExprOp::Mul,
                      ExprOp::Div, ExprOp::Min, ExprOp::Max};
      return make_binary(ops[rng() % 6], std::move(a), std::move(b));
    }
  }
}

inline std::vector<std::string> state_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
  return out;
}

inline std::vector<std::string> action_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("a" + std::to_string(i));
  return out;
}

// P(s'|s,a) = 1[s'=s], constant reward expression if given.
inline FhMfg identity_game(int S, int A, int H, double reward = 0.0) {
  FhMfg g;
  g.states = state_names(S);
  g.actions = action_names(A);
  g.horizon = H;
  g.table = make_expr_table(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      g.table.kernel_at(s, a, s) = make_const(1.0);
      if (reward != 0.0) g.table.reward_at(s, a) = make_const(reward);
    }
  std::vector<double> mu0(S, 1.0 / double(S));
  g.mu0 = make_distribution(std::move(mu0));
  validate_fh(g);
  return g;
}

// Two states, any action deterministically swaps them.
inline FhMfg swap_game(int H) {
  FhMfg g;
  g.states = state_names(2);
  g.actions = action_names(1);
  g.horizon = H;
  g.table = make_expr_table(2, 1);
  g.table.kernel_at(0, 0, 1) = make_const(1.0);
  g.table.kernel_at(1, 0, 0) = make_const(1.0);
  g.mu0 = make_distribution({0.3, 0.7});
  validate_fh(g);
  return g;
}

// Random mu-dependent small game: kernels are mixtures of deterministic
// moves, rewards are clamped affine functions of mu. Actions are genuinely
// distinguishable so random policies are exploitable.
inline FhMfg random_small_game(std::mt19937_64& rng, int S, int A, int H) {
  FhMfg g;
  g.states = state_names(S);
  g.actions = action_names(A);
  g.horizon = H;
  g.table = make_expr_table(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      // kernel row: fixed mixture between two target states
      int t1 = static_cast<int>(rng() % S), t2 = static_cast<int>(rng() % S);
      double w = 0.25 + 0.5 * uniform01(rng);
      if (t1 == t2) {
        g.table.kernel_at(s, a, t1) = make_const(1.0);
      } else {
        g.table.kernel_at(s, a, t1) = make_const(w);
        g.table.kernel_at(s, a, t2) = make_const(1.0 - w);
      }
      // reward: (c0 + c1 * mu(s_r)) / 2, both coefficients in [0,1]
      int r = static_cast<int>(rng() % S);
      Expr e = (make_const(uniform01(rng)) +
                make_const(uniform01(rng)) * make_mu(g.states[r], r)) /
               make_const(2.0);
      g.table.reward_at(s, a) = e;
    }
  std::vector<double> mu0 = random_simplex(rng, S);
  g.mu0 = make_distribution(std::move(mu0));
  validate_fh(g);
  return g;
}

inline Policy random_policy(std::mt19937_64& rng, int S, int A) {
  Policy pi;
  for (int s = 0; s < S; ++s) pi.rows.push_back(random_simplex(rng, A));
  return pi;
}

inline PolicySeq random_policy_seq(std::mt19937_64& rng, int S, int A, int H) {
  PolicySeq seq;
  for (int h = 0; h < H; ++h) seq.push_back(random_policy(rng, S, A));
  return seq;
}

// All deterministic policy sequences of a game; (A^S)^H entries.
inline std::vector<PolicySeq> all_deterministic_seqs(int S, int A, int H) {
  std::vector<Policy> per_step;
  std::vector<int> act(S, 0);
  for (;;) {
    per_step.push_back(deterministic_policy(act, A));
    int i = 0;
    while (i < S && ++act[i] == A) act[i++] = 0;
    if (i == S) break;
  }
  std::vector<PolicySeq> out;
  std::vector<int> idx(H, 0);
  for (;;) {
    PolicySeq seq;
    for (int h = 0; h < H; ++h) seq.push_back(per_step[idx[h]]);
    out.push_back(std::move(seq));
    int i = 0;
    while (i < H && ++idx[i] == static_cast<int>(per_step.size())) idx[i++] = 0;
    if (i == H) break;
  }
  return out;
}

// Stationary game with one absorbing rewarding state: from s0, a0 stays on
// s0 (no reward), a1 moves to s1 which absorbs and pays 1.
inline StatMfg absorbing_stat_game(double gamma) {
  StatMfg g;
  g.states = state_names(2);
  g.actions = action_names(2);
  g.gamma = gamma;
  g.table = make_expr_table(2, 2);
  g.table.kernel_at(0, 0, 0) = make_const(1.0);
  g.table.kernel_at(0, 1, 1) = make_const(1.0);
  g.table.kernel_at(1, 0, 1) = make_const(1.0);
  g.table.kernel_at(1, 1, 1) = make_const(1.0);
  g.table.reward_at(1, 0) = make_const(1.0);
  g.table.reward_at(1, 1) = make_const(1.0);
  validate_stat(g);
  return g;
}

}  // namespace fixtures
