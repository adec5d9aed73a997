#include "doctest.h"

#include <functional>

#include "fixtures.hpp"
#include "mfg/counterexamples.hpp"
#include "mfg/nplayer.hpp"

using namespace mfg;

namespace {

// Independent oracle: exact expectation of agent 1's total reward by full
// outcome-tree enumeration (initial states, actions, transitions). Branch
// state moves by value to keep every path independent; only feasible for
// tiny games. Used to pin both the simulator and the DP.
double enumerate_j(const FhMfg& g, const std::vector<PolicySeq>& policies, int N) {
  const int S = g.num_states(), A = g.num_actions();
  double total = 0.0;

  auto policy_of = [&](int j) -> const PolicySeq& {
    return policies.size() == 1 ? policies[0] : policies[j];
  };

  std::function<void(int, std::vector<int>, double, double)> run_step;

  // enumerate the joint action profile, collect agent 1's reward, then
  // enumerate the joint transition
  run_step = [&](int h, std::vector<int> state, double prob, double reward) {
    std::vector<double> mu(S, 0.0);
    for (int s : state) mu[s] += 1.0 / double(N);

    std::function<void(int, std::vector<int>, double)> pick_actions =
        [&](int j, std::vector<int> action, double p) {
          if (j == N) {
            double r1 = reward + eval_reward(g.table, state[0], action[0], mu);
            if (h + 1 == g.horizon) {
              total += p * r1;
              return;
            }
            std::function<void(int, std::vector<int>, double)> move =
                [&](int i, std::vector<int> next, double p2) {
                  if (i == N) {
                    run_step(h + 1, std::move(next), p2, r1);
                    return;
                  }
                  auto row = eval_kernel_row(g.table, state[i], action[i], mu);
                  for (int s2 = 0; s2 < S; ++s2) {
                    if (row[s2] == 0.0) continue;
                    next[i] = s2;
                    move(i + 1, next, p2 * row[s2]);
                  }
                };
            move(0, std::vector<int>(N, 0), p);
            return;
          }
          for (int a = 0; a < A; ++a) {
            double pa = policy_of(j)[h].rows[state[j]][a];
            if (pa == 0.0) continue;
            action[j] = a;
            pick_actions(j + 1, action, p * pa);
          }
        };
    pick_actions(0, std::vector<int>(N, 0), prob);
  };

  std::function<void(int, std::vector<int>, double)> pick_initial =
      [&](int j, std::vector<int> state, double p) {
        if (j == N) {
          run_step(0, std::move(state), p, 0.0);
          return;
        }
        for (int s = 0; s < S; ++s) {
          if (g.mu0[s] == 0.0) continue;
          state[j] = s;
          pick_initial(j + 1, state, p * g.mu0[s]);
        }
      };
  pick_initial(0, std::vector<int>(N, 0), 1.0);
  return total;
}

}  // namespace

TEST_CASE("simulation reproducibility: identical seeds give identical stats") {
  FhLowerParams p;
  p.horizon = 4;
  FhMfg g = build_fh_lower(p);
  SimConfig cfg;
  cfg.num_agents = 50;
  cfg.episodes = 8;
  cfg.seed = 999;
  auto run1 = simulate_fh(g, {fh_ne_policy(4)}, cfg);
  auto run2 = simulate_fh(g, {fh_ne_policy(4)}, cfg);
  REQUIRE(run1.size() == run2.size());
  for (std::size_t e = 0; e < run1.size(); ++e) {
    CHECK(run1[e].agent_total_reward == run2[e].agent_total_reward);
    CHECK(run1[e].mu_hat == run2[e].mu_hat);
  }
}

TEST_CASE("single agent sees vertex populations") {
  auto rng = make_stream(41, 0);
  FhMfg g = fixtures::random_small_game(rng, 3, 2, 3);
  SimConfig cfg;
  cfg.num_agents = 1;
  cfg.episodes = 20;
  cfg.seed = 5;
  for (const auto& ep : simulate_fh(g, {fixtures::random_policy_seq(rng, 3, 2, 3)}, cfg))
    for (const auto& mu : ep.mu_hat) {
      int ones = 0;
      for (double x : mu) {
        CHECK((x == 0.0 || x == 1.0));
        if (x == 1.0) ++ones;
      }
      CHECK(ones == 1);
    }
}

TEST_CASE("identity kernel keeps the empirical distribution constant") {
  FhMfg g = fixtures::identity_game(3, 2, 5);
  SimConfig cfg;
  cfg.num_agents = 30;
  cfg.episodes = 10;
  cfg.seed = 6;
  for (const auto& ep : simulate_fh(g, {PolicySeq(5, uniform_policy(3, 2))}, cfg))
    for (int h = 1; h < 5; ++h) CHECK(ep.mu_hat[h] == ep.mu_hat[0]);
}

TEST_CASE("empirical distributions are multiples of 1/N") {
  FhLowerParams p;
  p.horizon = 4;
  FhMfg g = build_fh_lower(p);
  SimConfig cfg;
  cfg.num_agents = 7;
  cfg.episodes = 5;
  cfg.seed = 7;
  for (const auto& ep : simulate_fh(g, {fh_ne_policy(4)}, cfg))
    for (const auto& mu : ep.mu_hat) {
      double sum = 0.0;
      for (double x : mu) {
        double scaled = x * 7.0;
        CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
        sum += x;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("constant rewards give exact totals with zero spread") {
  FhMfg g = fixtures::identity_game(2, 2, 3, 1.0);
  SimConfig cfg;
  cfg.num_agents = 4;
  cfg.episodes = 50;
  cfg.seed = 8;
  PolicySeq pis(3, uniform_policy(2, 2));
  MCEstimate est = estimate_j_fh(g, pis, pis, cfg);
  CHECK(est.mean == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(est.std_error == 0.0);
  CHECK(est.episodes == 50);
}

TEST_CASE("estimate_j_fh is unbiased against full enumeration") {
  auto rng = make_stream(42, 0);
  FhMfg g = fixtures::random_small_game(rng, 2, 2, 2);
  PolicySeq dev = fixtures::random_policy_seq(rng, 2, 2, 2);
  PolicySeq others = fixtures::random_policy_seq(rng, 2, 2, 2);

  std::vector<PolicySeq> profile = {dev, others};
  double exact = enumerate_j(g, profile, 2);

  SimConfig cfg;
  cfg.num_agents = 2;
  cfg.episodes = 20000;
  cfg.seed = 4242;
  MCEstimate est = estimate_j_fh(g, dev, others, cfg);
  CHECK(std::abs(est.mean - exact) <= 3.0 * est.std_error + 1e-12);
}

TEST_CASE("exchangeability: permuting agent policies leaves mean populations unchanged") {
  auto rng = make_stream(43, 0);
  FhMfg g = fixtures::random_small_game(rng, 2, 2, 2);
  PolicySeq pa = fixtures::random_policy_seq(rng, 2, 2, 2);
  PolicySeq pb = fixtures::random_policy_seq(rng, 2, 2, 2);

  SimConfig cfg;
  cfg.num_agents = 3;
  cfg.episodes = 30000;

  auto mean_mu1 = [&](const std::vector<PolicySeq>& pol, std::uint64_t seed) {
    SimConfig c = cfg;
    c.seed = seed;
    auto eps = simulate_fh(g, pol, c);
    double m = 0.0;
    for (const auto& ep : eps) m += ep.mu_hat[1][0];
    return m / double(eps.size());
  };

  double m1 = mean_mu1({pa, pb, pb}, 1001);
  double m2 = mean_mu1({pb, pb, pa}, 2002);
  // same aggregate law; allow generous Monte Carlo tolerance
  CHECK(std::abs(m1 - m2) <= 0.02);
}

TEST_CASE("exact N-player evaluation matches full enumeration") {
  auto rng = make_stream(44, 0);
  for (int rep = 0; rep < 8; ++rep) {
    FhMfg g = fixtures::random_small_game(rng, 2, 2, 2);
    PolicySeq dev = fixtures::random_policy_seq(rng, 2, 2, 2);
    PolicySeq others = fixtures::random_policy_seq(rng, 2, 2, 2);
    double dp = exact_value_nplayer_fh(g, dev, others, 2);
    double brute = enumerate_j(g, {dev, others}, 2);
    CHECK(dp == doctest::Approx(brute).epsilon(1e-10));
  }
}

TEST_CASE("exact N-player evaluation matches enumeration for three agents") {
  auto rng = make_stream(45, 0);
  FhMfg g = fixtures::random_small_game(rng, 2, 2, 2);
  PolicySeq dev = fixtures::random_policy_seq(rng, 2, 2, 2);
  PolicySeq others = fixtures::random_policy_seq(rng, 2, 2, 2);
  double dp = exact_value_nplayer_fh(g, dev, others, 3);
  double brute = enumerate_j(g, {dev, others, others}, 3);
  CHECK(dp == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("exact best deviation dominates every deterministic Markov deviation") {
  auto rng = make_stream(46, 0);
  auto seqs = fixtures::all_deterministic_seqs(2, 2, 2);
  REQUIRE(seqs.size() == 16);
  for (int rep = 0; rep < 5; ++rep) {
    FhMfg g = fixtures::random_small_game(rng, 2, 2, 2);
    PolicySeq others = fixtures::random_policy_seq(rng, 2, 2, 2);
    double br = exact_br_nplayer_fh(g, others, 2);
    for (const auto& seq : seqs)
      CHECK(br >= enumerate_j(g, {seq, others}, 2) - 1e-10);
  }
}

TEST_CASE("exact best deviation equals Markov enumeration under a dominant action") {
  // mu-dependent rewards but a uniformly dominant action: counts carry no
  // extra decision value, so the count-adaptive optimum is Markov
  FhMfg g;
  g.states = fixtures::state_names(2);
  g.actions = fixtures::action_names(2);
  g.horizon = 2;
  g.table = make_expr_table(2, 2);
  for (int s = 0; s < 2; ++s) {
    g.table.kernel_at(s, 0, s) = make_const(1.0);
    g.table.kernel_at(s, 1, 1 - s) = make_const(1.0);
    // action a1 earns an extra 1/2 regardless of the population
    g.table.reward_at(s, 0) = make_const(0.25) * make_mu(g.states[0], 0);
    g.table.reward_at(s, 1) =
        make_const(0.25) * make_mu(g.states[0], 0) + make_const(0.5);
  }
  g.mu0 = make_distribution({0.5, 0.5});
  validate_fh(g);

  PolicySeq others(2, uniform_policy(2, 2));
  double dp = exact_br_nplayer_fh(g, others, 2);
  double best = -1.0;
  for (const auto& seq : fixtures::all_deterministic_seqs(2, 2, 2))
    best = std::max(best, enumerate_j(g, {seq, others}, 2));
  CHECK(dp == doctest::Approx(best).epsilon(1e-10));
}

TEST_CASE("exact oracle reduces to a single-agent MDP at N = 1") {
  // population-independent game: any flow gives the same best response
  FhMfg g = fixtures::identity_game(3, 2, 3);
  for (int s = 0; s < 3; ++s) g.table.reward_at(s, 1) = make_const(0.5);
  PolicySeq others(3, uniform_policy(3, 2));
  double oracle = exact_br_nplayer_fh(g, others, 1);
  double mf = best_response_fh(g, lambda_flow(g, others)).second;
  CHECK(oracle == doctest::Approx(mf).epsilon(1e-12));
}

TEST_CASE("oracle value is policy-independent when rewards ignore actions and mu") {
  FhMfg g = fixtures::identity_game(2, 2, 2, 0.75);
  PolicySeq others(2, uniform_policy(2, 2));
  double br = exact_br_nplayer_fh(g, others, 3);
  CHECK(br == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("oracle dominates Monte Carlo estimates") {
  auto rng = make_stream(47, 0);
  FhMfg g = fixtures::random_small_game(rng, 2, 2, 2);
  PolicySeq others = fixtures::random_policy_seq(rng, 2, 2, 2);
  double br = exact_br_nplayer_fh(g, others, 4);
  SimConfig cfg;
  cfg.num_agents = 4;
  cfg.episodes = 4000;
  cfg.seed = 99;
  for (int rep = 0; rep < 3; ++rep) {
    PolicySeq dev = fixtures::random_policy_seq(rng, 2, 2, 2);
    MCEstimate est = estimate_j_fh(g, dev, others, cfg);
    CHECK(br >= est.mean - 3.0 * est.std_error);
  }
}

TEST_CASE("expression errors inside episodes propagate to the caller") {
  // reward divides by a coordinate that the empirical distribution zeroes out;
  // built by hand so the load-time probe does not reject it first
  FhMfg g;
  g.states = fixtures::state_names(2);
  g.actions = fixtures::action_names(1);
  g.horizon = 2;
  g.table = make_expr_table(2, 1);
  for (int s = 0; s < 2; ++s) g.table.kernel_at(s, 0, s) = make_const(1.0);
  g.table.reward_at(0, 0) =
      make_const(0.001) / make_mu(g.states[1], 1);  // 1/mu(s1), mu(s1) can be 0
  g.table.reward_at(1, 0) = make_const(0.5);
  g.mu0 = make_distribution({1.0, 0.0});

  SimConfig cfg;
  cfg.num_agents = 4;
  cfg.episodes = 16;
  cfg.seed = 3;
  PolicySeq pis(2, uniform_policy(2, 1));
  CHECK_THROWS_AS(simulate_fh(g, {pis}, cfg), DivideByZeroError);
}

TEST_CASE("oracle size guard") {
  FhMfg g = fixtures::identity_game(2, 2, 2);
  PolicySeq others(2, uniform_policy(2, 2));
  CHECK_THROWS_AS(exact_br_nplayer_fh(g, others, 9), GameError);
}

TEST_CASE("degenerate start with deterministic kernel has zero divergence") {
  FhMfg g = fixtures::swap_game(4);
  g.mu0 = make_distribution({1.0, 0.0});
  PolicySeq pis(4, uniform_policy(2, 1));
  Flow flow = lambda_flow(g, pis);
  SimConfig cfg;
  cfg.num_agents = 25;
  cfg.episodes = 10;
  cfg.seed = 14;
  for (const auto& est : estimate_divergence(g, pis, flow, cfg)) {
    CHECK(est.mean == 0.0);
    CHECK(est.std_error == 0.0);
  }
}

TEST_CASE("estimate_j_fh at N = 1 tracks the exact single-agent value") {
  auto rng = make_stream(48, 0);
  FhMfg g = fixtures::random_small_game(rng, 2, 2, 2);
  PolicySeq pi = fixtures::random_policy_seq(rng, 2, 2, 2);
  double exact = exact_value_nplayer_fh(g, pi, pi, 1);
  SimConfig cfg;
  cfg.num_agents = 1;
  cfg.episodes = 30000;
  cfg.seed = 21;
  MCEstimate est = estimate_j_fh(g, pi, pi, cfg);
  CHECK(std::abs(est.mean - exact) <= 3.0 * est.std_error + 1e-12);
}

TEST_CASE("stationary simulation constants") {
  StatMfg g = fixtures::absorbing_stat_game(0.8);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) g.table.reward_at(s, a) = make_const(1.0);
  SimConfig cfg;
  cfg.num_agents = 3;
  cfg.episodes = 10;
  cfg.seed = 11;
  cfg.truncation = 60;
  Distribution mu0 = make_distribution({0.5, 0.5});
  auto res = simulate_stat(g, mu0, uniform_policy(2, 2), nullptr, cfg);
  double want = (1.0 - std::pow(0.8, 60)) / (1.0 - 0.8);
  CHECK(res.estimate.mean == doctest::Approx(want).epsilon(1e-12));
  CHECK(res.estimate.std_error <= 1e-12);
  CHECK(res.bias_bound == doctest::Approx(std::pow(0.8, 60) / 0.2).epsilon(1e-12));
  CHECK(res.bias_bound < 1e-5);
}

TEST_CASE("binomial anti-concentration exact values") {
  CHECK(binomial_anticoncentration_exact(1, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(binomial_anticoncentration_exact(4, 0.5) == doctest::Approx(5.0 / 16.0).epsilon(1e-12));
  CHECK(binomial_anticoncentration_exact(10, 1.0) == 1.0);
}

TEST_CASE("binomial anti-concentration lower bound over the grid") {
  for (int N = 1; N <= 200; ++N)
    for (int pi = 0; pi <= 10; ++pi) {
      double p = 0.5 + 0.05 * pi;
      CHECK(binomial_anticoncentration_exact(N, p) >= 1.0 / 20.0);
    }
}

TEST_CASE("binomial mean absolute deviation sanity") {
  // N=2, p=1/2: E|K/2 - 1/2| = 1/2 * 1/2 + 0 * 1/2 ... = 0.25
  CHECK(binomial_mean_abs_dev(2, 0.5) == doctest::Approx(0.25).epsilon(1e-12));
  // agrees with the normal approximation for large N
  double approx = std::sqrt(2.0 / (3.141592653589793 * 4.0 * 10000.0));
  CHECK(binomial_mean_abs_dev(10000, 0.5) == doctest::Approx(approx).epsilon(1e-3));
}
