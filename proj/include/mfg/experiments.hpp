#pragma once

// Experiment drivers behind the command-line tool and the acceptance suite:
// population divergence versus step, deviation gain versus horizon, exact
// small-N deviation gaps, the stationary rate sweep, the exact binomial tail
// sweep, and the three reduction round trips. Every driver is deterministic
// given its seed and returns plot-ready CSV bodies.

#include <sstream>
#include <string>
#include <vector>

#include "mfg/counterexamples.hpp"
#include "mfg/gcircuit.hpp"
#include "mfg/nplayer.hpp"
#include "mfg/reductions.hpp"
#include "mfg/solvers.hpp"

namespace mfg {

// Least-squares slope of y against x.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw GameError("slope fit needs matched points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(x.size());
  my /= double(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

namespace detail {

class CsvBuilder {
 public:
  explicit CsvBuilder(std::string header) { out_ << header << '\n'; }
  CsvBuilder& field(long v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvBuilder& field(double v) {
    sep();
    out_ << format_number(v);
    return *this;
  }
  CsvBuilder& field(const std::string& v) {
    sep();
    out_ << v;
    return *this;
  }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }
  std::string str() const { return out_.str(); }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostringstream out_;
  bool first_ = true;
};

}  // namespace detail

// Crowd-seeking three-state game with a population-independent kernel: stay
// or step around a cycle, reward equal to the mass at the current state. Its
// equilibrium keeps the population spread, so finite-N deviation gains come
// purely from empirical fluctuations.
inline FhMfg smooth_three_state_game(int horizon = 4) {
  FhMfg g;
  g.states = {"s0", "s1", "s2"};
  g.actions = {"stay", "next"};
  g.horizon = horizon;
  g.table = make_expr_table(3, 2);
  for (int s = 0; s < 3; ++s) {
    g.table.kernel_at(s, 0, s) = make_const(1.0);
    g.table.kernel_at(s, 1, (s + 1) % 3) = make_const(1.0);
    for (int a = 0; a < 2; ++a) g.table.reward_at(s, a) = make_mu(g.states[s], s);
  }
  g.mu0 = make_distribution({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  validate_fh(g);
  return g;
}

inline Matrix matching_pennies_row() { return {{1, 0}, {0, 1}}; }
inline Matrix matching_pennies_col() { return {{0, 1}, {1, 0}}; }
// prisoner's-dilemma-style: first action strictly dominant for both sides
inline Matrix dominant_row() { return {{1, 1}, {0, 0}}; }
inline Matrix dominant_col() { return {{1, 0}, {1, 0}}; }

// ---- divergence versus step (finite-horizon lower-bound game) ----

struct DivergenceResult {
  std::vector<MCEstimate> per_step;  // E || mu_hat_h - flow_h ||_1
  double exact_h0 = 0.0;             // exact binomial mean absolute deviation, both coords
  std::vector<double> even_ratios;   // per_step[2m+2] / per_step[2m]
  std::string csv;
};

inline DivergenceResult divergence_experiment(int num_agents, int horizon, int episodes,
                                              std::uint64_t seed) {
  FhLowerParams params;
  params.horizon = horizon;
  FhMfg g = build_fh_lower(params);
  PolicySeq ne = fh_ne_policy(horizon);
  Flow flow = lambda_flow(g, ne);

  SimConfig cfg;
  cfg.num_agents = num_agents;
  cfg.episodes = episodes;
  cfg.seed = seed;
  DivergenceResult res;
  res.per_step = estimate_divergence(g, ne, flow, cfg);
  res.exact_h0 = 2.0 * binomial_mean_abs_dev(num_agents, 0.5);
  for (int m = 0; 2 * m + 2 < horizon; ++m)
    res.even_ratios.push_back(res.per_step[2 * m + 2].mean / res.per_step[2 * m].mean);

  detail::CsvBuilder csv("step,mean,stderr,episodes,N,seed");
  for (int h = 0; h < horizon; ++h) {
    const auto& e = res.per_step[h];
    csv.field(long(h)).field(e.mean).field(e.std_error).field(e.episodes).field(long(num_agents));
    csv.field(long(seed));
    csv.end_row();
  }
  res.csv = csv.str();
  return res;
}

// ---- deviation gain versus horizon (finite-horizon lower-bound game) ----

struct HorizonGapPoint {
  int horizon = 0;
  MCEstimate j_deviate, j_equilibrium;
  double gap = 0.0;
  double gap_std_error = 0.0;
};

struct HorizonGapResult {
  std::vector<HorizonGapPoint> points;
  double slope = 0.0;  // gap versus horizon over the requested tail
  std::string csv;
};

inline HorizonGapResult horizon_gap_experiment(const std::vector<int>& horizons, int num_agents,
                                               int episodes, std::uint64_t seed,
                                               int slope_from_horizon = 16) {
  HorizonGapResult res;
  std::vector<double> xs, ys;
  for (int H : horizons) {
    FhLowerParams params;
    params.horizon = H;
    FhMfg g = build_fh_lower(params);
    SimConfig cfg;
    cfg.num_agents = num_agents;
    cfg.episodes = episodes;
    cfg.seed = seed;  // shared draws across arms couple the comparison
    HorizonGapPoint pt;
    pt.horizon = H;
    pt.j_deviate = estimate_j_fh(g, fh_br_policy(H), fh_ne_policy(H), cfg);
    pt.j_equilibrium = estimate_j_fh(g, fh_ne_policy(H), fh_ne_policy(H), cfg);
    pt.gap = pt.j_deviate.mean - pt.j_equilibrium.mean;
    pt.gap_std_error = std::sqrt(pt.j_deviate.std_error * pt.j_deviate.std_error +
                                 pt.j_equilibrium.std_error * pt.j_equilibrium.std_error);
    if (H >= slope_from_horizon) {
      xs.push_back(double(H));
      ys.push_back(pt.gap);
    }
    res.points.push_back(pt);
  }
  if (xs.size() >= 2) res.slope = fitted_slope(xs, ys);

  detail::CsvBuilder csv("H,j_deviate,j_deviate_se,j_equilibrium,j_equilibrium_se,gap,gap_se,episodes,N,seed");
  for (const auto& pt : res.points) {
    csv.field(long(pt.horizon))
        .field(pt.j_deviate.mean)
        .field(pt.j_deviate.std_error)
        .field(pt.j_equilibrium.mean)
        .field(pt.j_equilibrium.std_error)
        .field(pt.gap)
        .field(pt.gap_std_error)
        .field(long(episodes))
        .field(long(num_agents))
        .field(long(seed));
    csv.end_row();
  }
  res.csv = csv.str();
  return res;
}

// ---- exact small-N deviation gap on the smooth game ----

struct UpperTrendPoint {
  int num_agents = 0;
  double best_deviation = 0.0;
  double equilibrium_value = 0.0;
  double gap = 0.0;
};

struct UpperTrendResult {
  double fp_exploitability = 0.0;
  std::vector<UpperTrendPoint> points;
  double loglog_slope = 0.0;
  bool non_increasing = true;
  std::string csv;
};

inline UpperTrendResult upper_trend_experiment(const std::vector<int>& agent_counts, int horizon,
                                               double fp_target, long fp_iters) {
  FhMfg g = smooth_three_state_game(horizon);
  auto [pi, rep] = fictitious_play_fh(g, fp_iters, fp_target);
  UpperTrendResult res;
  res.fp_exploitability = rep.residual;

  std::vector<double> xs, ys;
  double prev = std::numeric_limits<double>::infinity();
  for (int N : agent_counts) {
    UpperTrendPoint pt;
    pt.num_agents = N;
    pt.best_deviation = exact_br_nplayer_fh(g, pi, N);
    pt.equilibrium_value = exact_value_nplayer_fh(g, pi, pi, N);
    pt.gap = pt.best_deviation - pt.equilibrium_value;
    if (pt.gap > prev + 1e-12) res.non_increasing = false;
    prev = pt.gap;
    xs.push_back(std::log(double(N)));
    ys.push_back(std::log(std::max(pt.gap, 1e-300)));
    res.points.push_back(pt);
  }
  res.loglog_slope = fitted_slope(xs, ys);

  detail::CsvBuilder csv("N,best_deviation,equilibrium_value,gap");
  for (const auto& pt : res.points) {
    csv.field(long(pt.num_agents)).field(pt.best_deviation).field(pt.equilibrium_value).field(pt.gap);
    csv.end_row();
  }
  res.csv = csv.str();
  return res;
}

// ---- deviation gap versus N (stationary lower-bound game) ----

struct StatRatePoint {
  int num_agents = 0;
  MCEstimate j_deviate, j_equilibrium;
  double gap = 0.0;
  double gap_std_error = 0.0;
};

struct StatRateResult {
  std::vector<StatRatePoint> points;
  double loglog_slope = 0.0;
  double bias_bound = 0.0;
  std::string csv;
};

inline StatRateResult stat_rate_experiment(const std::vector<int>& agent_counts, double gamma,
                                           int episodes, double truncation_tol,
                                           std::uint64_t seed) {
  StatRateResult res;
  std::vector<double> xs, ys;
  for (int N : agent_counts) {
    StatLowerParams params;
    params.gamma = gamma;
    params.alpha = std::min(0.05, std::exp(-double(N)));
    StatMfg g = build_stat_lower(params);
    auto [mu_star, pi_star] = stat_ne();
    Policy deviation = stat_br_policy();

    SimConfig cfg;
    cfg.num_agents = N;
    cfg.episodes = episodes;
    cfg.seed = seed;
    cfg.truncation = truncation_horizon(gamma, truncation_tol);

    StatRatePoint pt;
    pt.num_agents = N;
    auto dev = simulate_stat(g, mu_star, pi_star, &deviation, cfg);
    auto eq = simulate_stat(g, mu_star, pi_star, nullptr, cfg);
    res.bias_bound = dev.bias_bound;
    pt.j_deviate = dev.estimate;
    pt.j_equilibrium = eq.estimate;
    pt.gap = pt.j_deviate.mean - pt.j_equilibrium.mean;
    pt.gap_std_error = std::sqrt(pt.j_deviate.std_error * pt.j_deviate.std_error +
                                 pt.j_equilibrium.std_error * pt.j_equilibrium.std_error);
    res.points.push_back(pt);
    xs.push_back(std::log(double(N)));
    ys.push_back(std::log(std::max(pt.gap, 1e-300)));
  }
  res.loglog_slope = fitted_slope(xs, ys);

  detail::CsvBuilder csv("N,j_deviate,j_deviate_se,j_equilibrium,j_equilibrium_se,gap,gap_se,episodes,seed");
  for (const auto& pt : res.points) {
    csv.field(long(pt.num_agents))
        .field(pt.j_deviate.mean)
        .field(pt.j_deviate.std_error)
        .field(pt.j_equilibrium.mean)
        .field(pt.j_equilibrium.std_error)
        .field(pt.gap)
        .field(pt.gap_std_error)
        .field(long(episodes))
        .field(long(seed));
    csv.end_row();
  }
  res.csv = csv.str();
  return res;
}

// ---- exact binomial tail sweep ----

struct AntiConcentrationResult {
  double min_probability = 1.0;
  bool all_above_bound = true;
  std::string csv;
};

inline AntiConcentrationResult anticoncentration_experiment(int max_agents) {
  AntiConcentrationResult res;
  detail::CsvBuilder csv("N,p,probability");
  for (int N = 1; N <= max_agents; ++N)
    for (int pi = 0; pi <= 10; ++pi) {
      double p = 0.5 + 0.05 * pi;
      double prob = binomial_anticoncentration_exact(N, p);
      res.min_probability = std::min(res.min_probability, prob);
      if (prob < 1.0 / 20.0) res.all_above_bound = false;
      csv.field(long(N)).field(p).field(prob);
      csv.end_row();
    }
  res.csv = csv.str();
  return res;
}

// ---- reduction round trips ----

struct StatDistRoundTripResult {
  SolveReport solve;
  Assignment assignment;
  bool satisfied = false;
  std::string csv;
};

inline StatDistRoundTripResult statdist_roundtrip_experiment(const GCircuit& c, double damping,
                                                             double tol, long max_iters,
                                                             double check_eps) {
  StatDistInstance inst = gcircuit_to_statdist(c);
  Policy only = uniform_policy(inst.game.num_states(), 1);
  auto [mu, rep] = damped_fixed_point(inst.game.table, only, damping, tol, max_iters);
  StatDistRoundTripResult res;
  res.solve = rep;
  res.assignment = extract_statdist_assignment(inst, mu);
  auto verdicts = check_assignment(c, res.assignment, check_eps);
  res.satisfied = rep.converged && all_satisfied(verdicts);

  detail::CsvBuilder csv("node,value,residual,iterations");
  for (const auto& [node, value] : res.assignment) {
    csv.field(node).field(value).field(rep.residual).field(rep.iterations);
    csv.end_row();
  }
  res.csv = csv.str();
  return res;
}

struct Fh2RoundTripResult {
  SolveReport solve;
  Assignment assignment;
  bool satisfied = false;
  std::string csv;
};

inline Fh2RoundTripResult fh2_roundtrip_experiment(const GCircuit& c, double exploit_target,
                                                   long max_iters, double check_eps) {
  Fh2Instance inst = gcircuit_to_fh2(c);
  auto [pi, rep] = fictitious_play_fh(inst.game, max_iters, exploit_target);
  Fh2RoundTripResult res;
  res.solve = rep;
  res.assignment = extract_fh2_assignment(inst, pi);
  res.satisfied = rep.residual <= exploit_target &&
                  all_satisfied(check_assignment(c, res.assignment, check_eps));

  detail::CsvBuilder csv("node,value,exploitability,iterations");
  for (const auto& [node, value] : res.assignment) {
    csv.field(node).field(value).field(rep.residual).field(rep.iterations);
    csv.end_row();
  }
  res.csv = csv.str();
  return res;
}

struct NashRoundTripResult {
  SolveReport solve;
  std::vector<double> sigma1, sigma2;
  NashVerdict verdict;
  double linf_to_oracle = 0.0;
  bool oracle_found = false;
  bool pass = false;
  std::string csv;
};

inline NashRoundTripResult nash_roundtrip_experiment(const Matrix& A, const Matrix& B,
                                                     long max_iters, double solve_target,
                                                     double verify_eps, double oracle_linf_tol) {
  NashFhInstance inst = nash2_to_fh2(A, B);
  auto [pi, rep] = fictitious_play_fh(inst.game, max_iters, solve_target);
  NashRoundTripResult res;
  res.solve = rep;
  auto [s1, s2] = extract_nash_strategies(inst, pi);
  res.sigma1 = s1;
  res.sigma2 = s2;
  res.verdict = verify_bimatrix_nash(A, B, s1, s2, verify_eps);

  auto oracle = support_enumeration_2nash(A, B);
  res.oracle_found = oracle.found;
  if (oracle.found) {
    for (std::size_t i = 0; i < s1.size(); ++i)
      res.linf_to_oracle = std::max(res.linf_to_oracle, std::abs(s1[i] - oracle.sigma1[i]));
    for (std::size_t j = 0; j < s2.size(); ++j)
      res.linf_to_oracle = std::max(res.linf_to_oracle, std::abs(s2[j] - oracle.sigma2[j]));
  }
  res.pass = rep.residual <= solve_target && res.verdict.pass && res.oracle_found &&
             res.linf_to_oracle <= oracle_linf_tol;

  detail::CsvBuilder csv("player,strategy,probability,regret");
  for (std::size_t i = 0; i < s1.size(); ++i) {
    csv.field(long(1)).field(long(i + 1)).field(s1[i]).field(res.verdict.regret1);
    csv.end_row();
  }
  for (std::size_t j = 0; j < s2.size(); ++j) {
    csv.field(long(2)).field(long(j + 1)).field(s2[j]).field(res.verdict.regret2);
    csv.end_row();
  }
  res.csv = csv.str();
  return res;
}

}  // namespace mfg
