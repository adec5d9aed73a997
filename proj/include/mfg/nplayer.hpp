#pragma once

// Monte Carlo simulation of the N-player symmetric anonymous games, plus an
// exact best-deviation oracle for tiny N and exact binomial tail utilities.
//
// Reproducibility contract: every episode derives its own RNG stream from
// (seed, episode index), and within an episode draws happen in a fixed order
// (initial states agent by agent, then per step: actions agent by agent,
// then transitions agent by agent). Episodes may run on any number of
// threads; results are merged by episode index.

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "mfg/game.hpp"
#include "mfg/mean_field.hpp"
#include "mfg/rng.hpp"

namespace mfg {

struct SimConfig {
  int num_agents = 1;       // N
  int episodes = 1;
  std::uint64_t seed = 0;
  int truncation = 0;       // T, stationary simulation only

  void validate() const {
    if (num_agents < 1) throw GameError("SimConfig: need at least one agent");
    if (episodes < 1) throw GameError("SimConfig: need at least one episode");
  }
};

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long episodes = 0;
};

inline MCEstimate summarize(const std::vector<double>& xs) {
  MCEstimate e;
  e.episodes = static_cast<long>(xs.size());
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / double(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
  }
  return e;
}

struct EpisodeStats {
  std::vector<std::vector<double>> mu_hat;  // per step, length |S| each
  std::vector<double> agent_total_reward;   // per agent
  std::vector<double> l1_gap;               // per step, empty without a reference flow
};

namespace detail {

inline void parallel_episodes(int episodes, const std::function<void(int)>& body) {
  unsigned hw = std::thread::hardware_concurrency();
  int workers = static_cast<int>(hw ? hw : 1);
  if (workers > episodes) workers = episodes;
  if (workers <= 1) {
    for (int e = 0; e < episodes; ++e) body(e);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int e = next.fetch_add(1);
        if (e >= episodes) return;
        try {
          body(e);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(episodes);  // stop handing out work
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Per-step caches so each distinct (s,a) pair evaluates its expressions once
// per step regardless of N.
struct StepCache {
  const ExprTable* table;
  std::vector<double> mu;
  std::vector<char> have_row, have_reward;
  std::vector<std::vector<double>> rows;
  std::vector<double> rewards;

  StepCache(const ExprTable& t) : table(&t) {
    int n = t.num_states * t.num_actions;
    have_row.assign(n, 0);
    have_reward.assign(n, 0);
    rows.resize(n);
    rewards.resize(n);
  }

  void reset(std::vector<double> new_mu) {
    mu = std::move(new_mu);
    std::fill(have_row.begin(), have_row.end(), 0);
    std::fill(have_reward.begin(), have_reward.end(), 0);
  }

  const std::vector<double>& row(int s, int a) {
    int i = s * table->num_actions + a;
    if (!have_row[i]) {
      rows[i] = eval_kernel_row(*table, s, a, mu);
      have_row[i] = 1;
    }
    return rows[i];
  }

  double reward(int s, int a) {
    int i = s * table->num_actions + a;
    if (!have_reward[i]) {
      rewards[i] = eval_reward(*table, s, a, mu);
      have_reward[i] = 1;
    }
    return rewards[i];
  }
};

inline std::vector<double> empirical_distribution(const std::vector<int>& states, int num_states) {
  std::vector<double> mu(num_states, 0.0);
  for (int s : states) mu[s] += 1.0;
  for (double& x : mu) x /= double(states.size());
  return mu;
}

}  // namespace detail

// Runs the N-player finite-horizon game. `agent_policies` holds either one
// shared policy sequence or one per agent.
inline std::vector<EpisodeStats> simulate_fh(const FhMfg& g,
                                             const std::vector<PolicySeq>& agent_policies,
                                             const SimConfig& cfg,
                                             const Flow* reference = nullptr) {
  cfg.validate();
  const int N = cfg.num_agents;
  if (agent_policies.size() != 1 && static_cast<int>(agent_policies.size()) != N)
    throw GameError("simulate_fh: need one shared policy sequence or one per agent");
  for (const auto& seq : agent_policies) {
    if (static_cast<int>(seq.size()) != g.horizon)
      throw GameError("simulate_fh: policy sequence length mismatch");
    for (const auto& pi : seq) validate_policy(pi, g.num_states(), g.num_actions());
  }
  if (reference && static_cast<int>(reference->size()) != g.horizon)
    throw GameError("simulate_fh: reference flow length mismatch");

  auto policy_of = [&](int agent) -> const PolicySeq& {
    return agent_policies.size() == 1 ? agent_policies[0] : agent_policies[agent];
  };

  std::vector<EpisodeStats> out(cfg.episodes);
  detail::parallel_episodes(cfg.episodes, [&](int ep) {
    auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(ep));
    EpisodeStats stats;
    stats.agent_total_reward.assign(N, 0.0);
    std::vector<int> state(N), action(N);
    for (int j = 0; j < N; ++j) state[j] = sample_index(rng, g.mu0.p);

    detail::StepCache cache(g.table);
    for (int h = 0; h < g.horizon; ++h) {
      std::vector<double> mu = detail::empirical_distribution(state, g.num_states());
      if (reference) {
        double gap = 0.0;
        for (int s = 0; s < g.num_states(); ++s) gap += std::abs(mu[s] - (*reference)[h].p[s]);
        stats.l1_gap.push_back(gap);
      }
      stats.mu_hat.push_back(mu);
      cache.reset(std::move(mu));

      for (int j = 0; j < N; ++j)
        action[j] = sample_index(rng, policy_of(j)[h].rows[state[j]]);
      for (int j = 0; j < N; ++j)
        stats.agent_total_reward[j] += cache.reward(state[j], action[j]);
      for (int j = 0; j < N; ++j)
        state[j] = sample_index(rng, cache.row(state[j], action[j]));
    }
    out[ep] = std::move(stats);
  });
  return out;
}

// Monte Carlo J for agent 1 playing `deviator` while agents 2..N share
// `others`.
inline MCEstimate estimate_j_fh(const FhMfg& g, const PolicySeq& deviator,
                                const PolicySeq& others, const SimConfig& cfg) {
  cfg.validate();
  std::vector<PolicySeq> policies(cfg.num_agents, others);
  policies[0] = deviator;
  auto episodes = simulate_fh(g, policies, cfg);
  std::vector<double> totals(episodes.size());
  for (std::size_t e = 0; e < episodes.size(); ++e) totals[e] = episodes[e].agent_total_reward[0];
  return summarize(totals);
}

// Per-step Monte Carlo estimate of E || mu_hat_h - reference[h] ||_1.
inline std::vector<MCEstimate> estimate_divergence(const FhMfg& g, const PolicySeq& shared,
                                                   const Flow& reference, const SimConfig& cfg) {
  auto episodes = simulate_fh(g, {shared}, cfg, &reference);
  std::vector<MCEstimate> out(g.horizon);
  std::vector<double> gaps(episodes.size());
  for (int h = 0; h < g.horizon; ++h) {
    for (std::size_t e = 0; e < episodes.size(); ++e) gaps[e] = episodes[e].l1_gap[h];
    out[h] = summarize(gaps);
  }
  return out;
}

struct StatSimResult {
  MCEstimate estimate;  // truncated discounted reward of agent 1
  double bias_bound = 0.0;
};

// N-player stationary simulation: all agents start i.i.d. from mu_init and
// play `shared`; agent 1 plays `deviator` when given. Truncated at cfg.T.
inline StatSimResult simulate_stat(const StatMfg& g, const Distribution& mu_init,
                                   const Policy& shared, const Policy* deviator,
                                   const SimConfig& cfg) {
  cfg.validate();
  if (cfg.truncation < 1) throw GameError("simulate_stat: cfg.truncation must be positive");
  validate_policy(shared, g.num_states(), g.num_actions());
  if (deviator) validate_policy(*deviator, g.num_states(), g.num_actions());
  if (mu_init.size() != static_cast<std::size_t>(g.num_states()))
    throw GameError("simulate_stat: mu_init dimension mismatch");

  const int N = cfg.num_agents;
  std::vector<double> totals(cfg.episodes);
  detail::parallel_episodes(cfg.episodes, [&](int ep) {
    auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(ep));
    std::vector<int> state(N), action(N);
    for (int j = 0; j < N; ++j) state[j] = sample_index(rng, mu_init.p);

    detail::StepCache cache(g.table);
    double total = 0.0, discount = 1.0;
    for (int t = 0; t < cfg.truncation; ++t) {
      cache.reset(detail::empirical_distribution(state, g.num_states()));
      for (int j = 0; j < N; ++j) {
        const Policy& pi = (j == 0 && deviator) ? *deviator : shared;
        action[j] = sample_index(rng, pi.rows[state[j]]);
      }
      total += discount * cache.reward(state[0], action[0]);
      discount *= g.gamma;
      for (int j = 0; j < N; ++j) state[j] = sample_index(rng, cache.row(state[j], action[j]));
    }
    totals[ep] = total;
  });

  StatSimResult res;
  res.estimate = summarize(totals);
  res.bias_bound = std::pow(g.gamma, cfg.truncation) / (1.0 - g.gamma);
  return res;
}

// ---- exact small-N oracle ----

namespace detail {

// Compositions of `total` into `parts` bins, lexicographic.
inline void enumerate_compositions(int total, int parts, std::vector<int>& cur,
                                   std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= total; ++k) {
    cur.push_back(k);
    enumerate_compositions(total - k, parts - 1, cur, out);
    cur.pop_back();
  }
}

// Sparse distribution over composition indices.
using CountDist = std::vector<std::pair<int, double>>;

struct CompositionSpace {
  std::vector<std::vector<int>> all;
  std::map<std::vector<int>, int> index;

  CompositionSpace(int total, int parts) {
    std::vector<int> cur;
    enumerate_compositions(total, parts, cur, all);
    for (std::size_t i = 0; i < all.size(); ++i) index[all[i]] = static_cast<int>(i);
  }
};

// Distribution of the next count vector when c_s agents at each state s all
// move independently with row q_s: a convolution of per-state multinomials.
// Probabilities below `prune` are dropped.
inline CountDist count_transition(const std::vector<int>& counts,
                                  const std::vector<std::vector<double>>& q,
                                  const CompositionSpace& space, double prune) {
  const int S = static_cast<int>(counts.size());
  std::map<std::vector<int>, double> acc;
  acc[std::vector<int>(S, 0)] = 1.0;
  std::vector<std::vector<int>> outcomes;
  for (int s = 0; s < S; ++s) {
    int c = counts[s];
    if (c == 0) continue;
    outcomes.clear();
    std::vector<int> cur;
    enumerate_compositions(c, S, cur, outcomes);
    std::map<std::vector<int>, double> next;
    for (const auto& o : outcomes) {
      // multinomial pmf of outcome o for c draws with probabilities q[s]
      double logp = std::lgamma(c + 1.0);
      bool zero = false;
      for (int s2 = 0; s2 < S; ++s2) {
        logp -= std::lgamma(o[s2] + 1.0);
        if (o[s2] > 0) {
          if (q[s][s2] <= 0.0) {
            zero = true;
            break;
          }
          logp += o[s2] * std::log(q[s][s2]);
        }
      }
      if (zero) continue;
      double p = std::exp(logp);
      if (p < prune) continue;
      for (const auto& [partial, pp] : acc) {
        std::vector<int> merged = partial;
        for (int s2 = 0; s2 < S; ++s2) merged[s2] += o[s2];
        double w = pp * p;
        if (w >= prune) next[merged] += w;
      }
    }
    acc = std::move(next);
  }
  CountDist out;
  out.reserve(acc.size());
  for (const auto& [vec, p] : acc) out.emplace_back(space.index.at(vec), p);
  return out;
}

inline double multinomial_prob(const std::vector<int>& counts, const std::vector<double>& probs) {
  int total = 0;
  for (int c : counts) total += c;
  double logp = std::lgamma(total + 1.0);
  for (std::size_t s = 0; s < counts.size(); ++s) {
    logp -= std::lgamma(counts[s] + 1.0);
    if (counts[s] > 0) {
      if (probs[s] <= 0.0) return 0.0;
      logp += counts[s] * std::log(probs[s]);
    }
  }
  return std::exp(logp);
}

// Shared DP: value of agent 1 against N-1 agents playing `others`, either
// maximizing over the deviation (deviator == nullptr) or evaluating a fixed
// deviator sequence.
inline double nplayer_fh_dp(const FhMfg& g, const PolicySeq* deviator, const PolicySeq& others,
                            int N) {
  if (N < 1 || N > 8 || g.num_states() > 6 || g.horizon > 6)
    throw GameError("exact N-player oracle guarded to N <= 8, |S| <= 6, H <= 6");
  if (static_cast<int>(others.size()) != g.horizon ||
      (deviator && static_cast<int>(deviator->size()) != g.horizon))
    throw GameError("policy sequence length mismatch");
  const double kPrune = 1e-15;
  const int S = g.num_states(), A = g.num_actions();
  CompositionSpace space(N - 1, S);
  const int C = static_cast<int>(space.all.size());

  // V[s1 * C + ci]
  std::vector<double> v_next(S * C, 0.0), v(S * C, 0.0);
  std::vector<double> mu(S), w(S);
  std::vector<std::vector<double>> q(S);
  for (int h = g.horizon - 1; h >= 0; --h) {
    const Policy& pi_o = others[h];
    for (int ci = 0; ci < C; ++ci) {
      const std::vector<int>& counts = space.all[ci];
      for (int s1 = 0; s1 < S; ++s1) {
        for (int s = 0; s < S; ++s) mu[s] = counts[s] / double(N);
        mu[s1] += 1.0 / double(N);

        CountDist dist;
        if (h + 1 < g.horizon) {
          for (int s = 0; s < S; ++s)
            if (counts[s] > 0) q[s] = averaged_kernel_row(g.table, s, pi_o.rows[s], mu);
          dist = count_transition(counts, q, space, kPrune);
          double mass = 0.0;
          for (auto& [cj, p] : dist) mass += p;
          // renormalize what pruning removed
          if (mass > 0.0)
            for (auto& [cj, p] : dist) p /= mass;
          for (int s2 = 0; s2 < S; ++s2) {
            double acc = 0.0;
            for (const auto& [cj, p] : dist) acc += p * v_next[s2 * C + cj];
            w[s2] = acc;
          }
        }

        auto q_value = [&](int a) {
          double qv = eval_reward(g.table, s1, a, mu);
          if (h + 1 < g.horizon) {
            auto row = eval_kernel_row(g.table, s1, a, mu);
            for (int s2 = 0; s2 < S; ++s2) qv += row[s2] * w[s2];
          }
          return qv;
        };

        double val;
        if (deviator) {
          val = 0.0;
          for (int a = 0; a < A; ++a) {
            double pa = (*deviator)[h].rows[s1][a];
            if (pa > 0.0) val += pa * q_value(a);
          }
        } else {
          val = q_value(0);
          for (int a = 1; a < A; ++a) val = std::max(val, q_value(a));
        }
        v[s1 * C + ci] = val;
      }
    }
    std::swap(v, v_next);
  }

  double total = 0.0;
  for (int ci = 0; ci < C; ++ci) {
    double pc = multinomial_prob(space.all[ci], g.mu0.p);
    if (pc == 0.0) continue;
    for (int s1 = 0; s1 < S; ++s1) total += g.mu0.p[s1] * pc * v_next[s1 * C + ci];
  }
  return total;
}

}  // namespace detail

// Exact optimal deviation value max_pi J(pi, others, ..., others) by backward
// induction over (agent-1 state, count vector of the other N-1 agents).
inline double exact_br_nplayer_fh(const FhMfg& g, const PolicySeq& others, int N) {
  return detail::nplayer_fh_dp(g, nullptr, others, N);
}

// Exact J(deviator, others, ..., others) through the same DP.
inline double exact_value_nplayer_fh(const FhMfg& g, const PolicySeq& deviator,
                                     const PolicySeq& others, int N) {
  return detail::nplayer_fh_dp(g, &deviator, others, N);
}

// ---- exact binomial utilities ----

// P[X >= N/2 + sqrt(N)/2] for X ~ Binom(N, p), by log-space summation.
inline double binomial_anticoncentration_exact(int N, double p) {
  if (N < 1 || N > 10000) throw GameError("binomial tail: N out of range [1, 1e4]");
  if (p < 0.5 || p > 1.0) throw GameError("binomial tail: p out of range [1/2, 1]");
  int k0 = static_cast<int>(std::ceil(double(N) / 2.0 + std::sqrt(double(N)) / 2.0));
  if (k0 > N) return 0.0;
  if (p == 1.0) return 1.0;
  double total = 0.0;
  for (int k = k0; k <= N; ++k) {
    double logp = std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0) +
                  k * std::log(p) + (N - k) * std::log1p(-p);
    total += std::exp(logp);
  }
  return std::min(1.0, total);
}

// E | X/N - p | for X ~ Binom(N, p); the exact h=0 divergence oracle is twice
// this value at p = 1/2.
inline double binomial_mean_abs_dev(int N, double p) {
  if (N < 1) throw GameError("binomial mad: N must be positive");
  double total = 0.0;
  for (int k = 0; k <= N; ++k) {
    double logp = std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0);
    if (p > 0.0 && p < 1.0)
      logp += k * std::log(p) + (N - k) * std::log1p(-p);
    else if ((p == 0.0 && k > 0) || (p == 1.0 && k < N))
      continue;
    total += std::exp(logp) * std::abs(double(k) / double(N) - p);
  }
  return total;
}

}  // namespace mfg
