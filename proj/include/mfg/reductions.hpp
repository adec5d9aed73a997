#pragma once

// Compilers from generalized circuits and bimatrix games into mean-field
// game instances, with the matching solution extractors and a bimatrix
// equilibrium verifier. All compiled instances use the ordinary game types,
// so they flow through the standard solvers and file format unchanged.

#include <cmath>
#include <string>
#include <vector>

#include "mfg/game.hpp"
#include "mfg/gcircuit.hpp"

namespace mfg {

struct ReductionError : GameError {
  using GameError::GameError;
};

struct ZeroSupportOnValidStrategies : ReductionError {
  ZeroSupportOnValidStrategies()
      : ReductionError("extracted base-state policy places no mass on valid strategies") {}
};

namespace detail {

// acc + w*x with nonnegative printed constants, so compiled games survive a
// print/parse round trip (the grammar has no signed literals).
inline Expr add_weighted(Expr acc, double w, Expr x) {
  if (w == 0.0) return acc;
  Expr term = make_const(std::abs(w)) * std::move(x);
  if (!acc.valid()) {
    if (w > 0.0) return term;
    return make_const(0.0) - std::move(term);
  }
  if (w > 0.0) return std::move(acc) + std::move(term);
  return std::move(acc) - std::move(term);
}

}  // namespace detail

// ---- circuit -> stationary-distribution instance ----

struct StatDistInstance {
  StatMfg game;                    // single action, zero rewards
  int base_state = 0;
  std::vector<std::string> node_names;
  std::vector<int> state_of_node;  // node index -> state, or -1 for non-outputs
  double theta = 0.0;
  double population_floor = 0.25;  // B
  double gadget_eps = 0.01;        // eps of the p_{8 eps} comparator
};

// One state per gate output plus a base state; the base state emits
// gadget-weighted probabilities with max{B, mu(base)} denominators and all
// gate states return to the base deterministically.
inline StatDistInstance gcircuit_to_statdist(const GCircuit& c, double gadget_eps = 0.01) {
  validate_circuit(c);
  if (!(gadget_eps > 0.0 && gadget_eps < 1.0 / 8.0))
    throw ReductionError("gadget eps must lie in (0, 1/8)");
  const long long V = std::max<long long>(1, c.num_nodes());
  if (V >= (1LL << 48)) throw ReductionError("circuit too large for theta resolution");

  StatDistInstance inst;
  inst.gadget_eps = gadget_eps;
  inst.theta = 1.0 / (8.0 * double(V));
  inst.node_names = c.nodes;
  inst.state_of_node.assign(c.nodes.size(), -1);

  StatMfg& g = inst.game;
  g.gamma = 0.9;  // irrelevant to the stability subproblem; rewards are zero
  g.states.push_back("base");
  for (const auto& gate : c.gates) {
    inst.state_of_node[gate.out] = static_cast<int>(g.states.size());
    g.states.push_back("n_" + c.nodes[gate.out]);
  }
  g.actions = {"a"};
  g.table = make_expr_table(static_cast<int>(g.states.size()), 1);

  const double theta = inst.theta;
  const double B = inst.population_floor;
  auto node_value = [&](int node) -> Expr {
    // u_theta of the node state's mass; non-output nodes carry no mass
    if (node == kNoInput || inst.state_of_node[node] < 0) return make_const(0.0);
    int s = inst.state_of_node[node];
    return clamp_to(theta, make_mu(g.states[s], s));
  };

  Expr denom = emax(make_const(B), make_mu("base", 0));
  Expr outflow;  // sum of base -> gate-state probabilities
  for (const auto& gate : c.gates) {
    int sv = inst.state_of_node[gate.out];
    g.table.kernel_at(sv, 0, inst.base_state) = make_const(1.0);

    Expr numerator;
    switch (gate.kind) {
      case GateKind::Assign:
        if (gate.zeta == 1) numerator = make_const(theta);
        break;  // zeta = 0: probability identically 0, entry stays empty
      case GateKind::AffineClamp: {
        Expr affine = detail::add_weighted(Expr{}, gate.alpha, node_value(gate.in1));
        affine = detail::add_weighted(std::move(affine), gate.beta, node_value(gate.in2));
        if (!affine.valid()) affine = make_const(0.0);
        numerator = clamp_to(theta, std::move(affine));
        break;
      }
      case GateKind::Compare: {
        // theta * p_{8 eps}(x2, x1) with x_i = u_theta(mu(v_i))/theta: the
        // output state fills toward theta exactly when value(v1) falls
        // below value(v2) by the brittle margin
        Expr diff = node_value(gate.in2) - node_value(gate.in1);
        Expr p = clamp01(make_const(0.5) +
                         std::move(diff) / make_const(theta * 8.0 * gadget_eps));
        numerator = make_const(theta) * std::move(p);
        break;
      }
    }
    if (numerator.valid()) {
      Expr prob = std::move(numerator) / denom;
      g.table.kernel_at(inst.base_state, 0, sv) = prob;
      outflow = outflow.valid() ? std::move(outflow) + prob : prob;
    }
  }
  g.table.kernel_at(inst.base_state, 0, inst.base_state) =
      outflow.valid() ? make_const(1.0) - std::move(outflow) : make_const(1.0);

  validate_stat(g);
  return inst;
}

// Reads the assignment p(v) = u1(mu(s_v)/theta) off a (near-)stationary
// distribution.
inline Assignment extract_statdist_assignment(const StatDistInstance& inst,
                                              const Distribution& mu) {
  if (mu.size() != static_cast<std::size_t>(inst.game.num_states()))
    throw ReductionError("distribution dimension does not match the instance");
  Assignment p;
  for (std::size_t node = 0; node < inst.state_of_node.size(); ++node) {
    int s = inst.state_of_node[node];
    if (s < 0) continue;
    p[inst.node_names[node]] = u_clamp(1.0, mu.p[s] / inst.theta);
  }
  return p;
}

// ---- circuit -> two-step finite-horizon instance ----

struct Fh2Instance {
  FhMfg game;
  std::vector<std::string> node_names;
  std::vector<int> base_state, one_state, zero_state;  // per node
};

// Three states per node; the only choice happens at step 0 in the base
// states, and step-1 rewards encode the gate rules through the step-1
// population. Kernel is population-independent.
inline Fh2Instance gcircuit_to_fh2(const GCircuit& c) {
  validate_circuit(c);
  const int V = c.num_nodes();
  if (V < 1) throw ReductionError("circuit has no nodes");

  Fh2Instance inst;
  inst.node_names = c.nodes;
  FhMfg& g = inst.game;
  g.horizon = 2;
  g.actions = {"a1", "a0"};
  std::vector<double> mu0;
  for (int v = 0; v < V; ++v) {
    inst.base_state.push_back(static_cast<int>(g.states.size()));
    g.states.push_back(c.nodes[v] + "_base");
    inst.one_state.push_back(static_cast<int>(g.states.size()));
    g.states.push_back(c.nodes[v] + "_1");
    inst.zero_state.push_back(static_cast<int>(g.states.size()));
    g.states.push_back(c.nodes[v] + "_0");
  }
  mu0.assign(g.states.size(), 0.0);
  for (int v = 0; v < V; ++v) mu0[inst.base_state[v]] = 1.0 / double(V);
  g.mu0 = make_distribution(std::move(mu0));

  g.table = make_expr_table(static_cast<int>(g.states.size()), 2);
  for (int v = 0; v < V; ++v) {
    g.table.kernel_at(inst.base_state[v], 0, inst.one_state[v]) = make_const(1.0);
    g.table.kernel_at(inst.base_state[v], 1, inst.zero_state[v]) = make_const(1.0);
    for (int a : {0, 1}) {
      g.table.kernel_at(inst.one_state[v], a, inst.one_state[v]) = make_const(1.0);
      g.table.kernel_at(inst.zero_state[v], a, inst.zero_state[v]) = make_const(1.0);
    }
  }

  auto scaled_mass = [&](int node) -> Expr {
    // V * mu(s_{v,1}) recovers the step-0 base policy weight of node v
    int s = inst.one_state[node];
    return make_const(double(V)) * make_mu(g.states[s], s);
  };
  auto set_both_actions = [&](int s, const Expr& e) {
    g.table.reward_at(s, 0) = e;
    g.table.reward_at(s, 1) = e;
  };

  for (const auto& gate : c.gates) {
    int v = gate.out;
    switch (gate.kind) {
      case GateKind::Assign:
        set_both_actions(inst.one_state[v], make_const(double(gate.zeta)));
        set_both_actions(inst.zero_state[v], make_const(1.0 - double(gate.zeta)));
        break;
      case GateKind::AffineClamp: {
        Expr affine;
        if (gate.in1 != kNoInput)
          affine = detail::add_weighted(std::move(affine), gate.alpha, scaled_mass(gate.in1));
        if (gate.in2 != kNoInput)
          affine = detail::add_weighted(std::move(affine), gate.beta, scaled_mass(gate.in2));
        if (!affine.valid()) affine = make_const(0.0);
        Expr target = clamp01(std::move(affine));
        set_both_actions(inst.one_state[v], clamp01(target - scaled_mass(v)));
        set_both_actions(inst.zero_state[v], clamp01(scaled_mass(v) - target));
        break;
      }
      case GateKind::Compare:
        set_both_actions(inst.one_state[v],
                         clamp01(scaled_mass(gate.in2) - scaled_mass(gate.in1)));
        set_both_actions(inst.zero_state[v],
                         clamp01(scaled_mass(gate.in1) - scaled_mass(gate.in2)));
        break;
    }
    // base states and non-output value states keep reward 0
  }

  validate_fh(g);
  return inst;
}

// p(v) = pi_0(a1 | v_base): the only decision that moves mass happens at the
// base states in step 0.
inline Assignment extract_fh2_assignment(const Fh2Instance& inst, const PolicySeq& pis) {
  if (pis.size() != 2) throw ReductionError("two-step instance needs a length-2 policy sequence");
  Assignment p;
  for (std::size_t v = 0; v < inst.node_names.size(); ++v)
    p[inst.node_names[v]] = pis[0].rows[inst.base_state[v]][0];
  return p;
}

// ---- bimatrix game -> two-step linear-reward instance ----

using Matrix = std::vector<std::vector<double>>;

inline void validate_payoffs(const Matrix& A, const Matrix& B) {
  if (A.empty() || A[0].empty()) throw ReductionError("payoff matrices must be nonempty");
  if (B.size() != A.size() || B[0].size() != A[0].size())
    throw ReductionError("payoff matrices must share a shape");
  for (const Matrix* m : {&A, &B})
    for (const auto& row : *m) {
      if (row.size() != A[0].size()) throw ReductionError("payoff matrix is ragged");
      for (double x : row)
        if (!(x >= 0.0 && x <= 1.0)) throw ReductionError("payoff entries must lie in [0,1]");
    }
}

struct NashFhInstance {
  FhMfg game;
  int k1 = 0, k2 = 0;
  int base1 = 0, base2 = 0;
  std::vector<int> strat1, strat2;  // strategy-state indices
  int overflow1 = -1, overflow2 = -1;
};

// Two base states, one state per pure strategy, and a zero-reward overflow
// sink on the side with fewer strategies. Rewards on strategy states are
// 1/2 + (1/2) * expected payoff, affine in the step-1 population.
inline NashFhInstance nash2_to_fh2(const Matrix& A, const Matrix& B) {
  validate_payoffs(A, B);
  NashFhInstance inst;
  inst.k1 = static_cast<int>(A.size());
  inst.k2 = static_cast<int>(A[0].size());
  const int num_actions = std::max(inst.k1, inst.k2);

  FhMfg& g = inst.game;
  g.horizon = 2;
  for (int a = 0; a < num_actions; ++a) g.actions.push_back("act" + std::to_string(a + 1));

  inst.base1 = 0;
  inst.base2 = 1;
  g.states = {"p1base", "p2base"};
  for (int i = 0; i < inst.k1; ++i) {
    inst.strat1.push_back(static_cast<int>(g.states.size()));
    g.states.push_back("p1s" + std::to_string(i + 1));
  }
  for (int j = 0; j < inst.k2; ++j) {
    inst.strat2.push_back(static_cast<int>(g.states.size()));
    g.states.push_back("p2s" + std::to_string(j + 1));
  }
  if (inst.k1 < num_actions) {
    inst.overflow1 = static_cast<int>(g.states.size());
    g.states.push_back("p1ovf");
  }
  if (inst.k2 < num_actions) {
    inst.overflow2 = static_cast<int>(g.states.size());
    g.states.push_back("p2ovf");
  }

  std::vector<double> mu0(g.states.size(), 0.0);
  mu0[inst.base1] = 0.5;
  mu0[inst.base2] = 0.5;
  g.mu0 = make_distribution(std::move(mu0));

  const int S = static_cast<int>(g.states.size());
  g.table = make_expr_table(S, num_actions);
  for (int a = 0; a < num_actions; ++a) {
    g.table.kernel_at(inst.base1, a, a < inst.k1 ? inst.strat1[a] : inst.overflow1) =
        make_const(1.0);
    g.table.kernel_at(inst.base2, a, a < inst.k2 ? inst.strat2[a] : inst.overflow2) =
        make_const(1.0);
  }
  for (int s = 2; s < S; ++s)
    for (int a = 0; a < num_actions; ++a) g.table.kernel_at(s, a, s) = make_const(1.0);

  auto mu_of = [&](int s) { return make_mu(g.states[s], s); };
  for (int i = 0; i < inst.k1; ++i) {
    Expr payoff = make_const(0.5);
    for (int j = 0; j < inst.k2; ++j)
      payoff = detail::add_weighted(std::move(payoff), 0.5 * A[i][j], mu_of(inst.strat2[j]));
    for (int a = 0; a < num_actions; ++a) g.table.reward_at(inst.strat1[i], a) = payoff;
  }
  for (int j = 0; j < inst.k2; ++j) {
    Expr payoff = make_const(0.5);
    for (int i = 0; i < inst.k1; ++i)
      payoff = detail::add_weighted(std::move(payoff), 0.5 * B[i][j], mu_of(inst.strat1[i]));
    for (int a = 0; a < num_actions; ++a) g.table.reward_at(inst.strat2[j], a) = payoff;
  }
  // base and overflow states reward 0

  validate_fh(g);
  return inst;
}

// Mixed strategies from the step-0 base rows, restricted to the valid
// strategy range and renormalized; fails when all mass sits on overflow.
inline std::pair<std::vector<double>, std::vector<double>> extract_nash_strategies(
    const NashFhInstance& inst, const PolicySeq& pis) {
  if (pis.size() != 2) throw ReductionError("two-step instance needs a length-2 policy sequence");
  auto restrict_row = [](const std::vector<double>& row, int k) {
    std::vector<double> sigma(row.begin(), row.begin() + k);
    double mass = 0.0;
    for (double x : sigma) mass += x;
    if (mass <= 0.0) throw ZeroSupportOnValidStrategies{};
    for (double& x : sigma) x /= mass;
    return sigma;
  };
  return {restrict_row(pis[0].rows[inst.base1], inst.k1),
          restrict_row(pis[0].rows[inst.base2], inst.k2)};
}

struct NashVerdict {
  double regret1 = 0.0;
  double regret2 = 0.0;
  bool pass = false;
};

inline NashVerdict verify_bimatrix_nash(const Matrix& A, const Matrix& B,
                                        const std::vector<double>& sigma1,
                                        const std::vector<double>& sigma2, double eps) {
  validate_payoffs(A, B);
  const int k1 = static_cast<int>(A.size()), k2 = static_cast<int>(A[0].size());
  if (static_cast<int>(sigma1.size()) != k1 || static_cast<int>(sigma2.size()) != k2)
    throw ReductionError("strategy dimensions do not match the payoff matrices");

  double value1 = 0.0, best1 = 0.0;
  for (int i = 0; i < k1; ++i) {
    double row = 0.0;
    for (int j = 0; j < k2; ++j) row += A[i][j] * sigma2[j];
    value1 += sigma1[i] * row;
    best1 = i == 0 ? row : std::max(best1, row);
  }
  double value2 = 0.0, best2 = 0.0;
  for (int j = 0; j < k2; ++j) {
    double col = 0.0;
    for (int i = 0; i < k1; ++i) col += B[i][j] * sigma1[i];
    value2 += sigma2[j] * col;
    best2 = j == 0 ? col : std::max(best2, col);
  }

  NashVerdict v;
  v.regret1 = std::max(0.0, best1 - value1);
  v.regret2 = std::max(0.0, best2 - value2);
  v.pass = v.regret1 <= eps && v.regret2 <= eps;
  return v;
}

}  // namespace mfg
