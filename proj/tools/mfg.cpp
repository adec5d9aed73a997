// Command-line front end: build the counterexample games, compile reductions,
// run solvers and verifiers, simulate N-player games, and drive the
// experiment sweeps into CSV files.
//
// Exit codes: 0 success, 1 verdict failure, 2 usage or input error.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mfg/experiments.hpp"
#include "mfg/io.hpp"

#ifndef MFG_BUILD_ID
#define MFG_BUILD_ID "unknown"
#endif

namespace {

using nlohmann::json;
using namespace mfg;

constexpr int kExitOk = 0;
constexpr int kExitVerdictFail = 1;
constexpr int kExitUsage = 2;

void emit(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-")
    std::cout << body;
  else
    write_text_file(path, body);
}

json report_to_json(const SolveReport& rep) {
  return json{{"iterations", rep.iterations},
              {"residual", rep.residual},
              {"converged", rep.converged},
              {"wall_seconds", rep.wall_seconds}};
}

// ---- counterexample ----

int run_counterexample(const std::string& kind, double eps, double alpha, double beta,
                       int horizon, double gamma, const std::string& out,
                       const std::string& solution_out) {
  if (kind == "fh") {
    FhLowerParams p;
    if (eps > 0.0) p.eps = eps;
    p.alpha = alpha;
    p.beta = beta;
    p.horizon = horizon;
    FhMfg g = build_fh_lower(p);
    emit(out, write_game(g));
    if (!solution_out.empty())
      write_text_file(solution_out, write_policy_seq(fh_ne_policy(horizon), g.states));
  } else {
    StatLowerParams p;
    if (eps > 0.0) p.eps = eps;
    p.alpha = alpha;
    p.beta = beta;
    p.gamma = gamma;
    StatMfg g = build_stat_lower(p);
    emit(out, write_game(g));
    if (!solution_out.empty()) {
      auto [mu, pi] = stat_ne();
      write_text_file(solution_out, write_stat_solution(mu, pi, g.states));
    }
  }
  return kExitOk;
}

// ---- reduce ----

int run_reduce(const std::string& kind, const std::vector<std::string>& inputs, double gadget_eps,
               const std::string& out) {
  if (kind == "gcircuit-statdist") {
    GCircuit c = parse_circuit(read_text_file(inputs.at(0)));
    StatDistInstance inst = gcircuit_to_statdist(c, gadget_eps);
    emit(out, write_game(inst.game));
  } else if (kind == "gcircuit-fh2") {
    GCircuit c = parse_circuit(read_text_file(inputs.at(0)));
    emit(out, write_game(gcircuit_to_fh2(c).game));
  } else {  // nash-fh2
    Matrix A = parse_matrix_csv(read_text_file(inputs.at(0)));
    Matrix B = parse_matrix_csv(read_text_file(inputs.at(1)));
    emit(out, write_game(nash2_to_fh2(A, B).game));
  }
  return kExitOk;
}

// ---- solve ----

int run_solve(const std::string& kind, const std::string& game_path, long iters, double tol,
              double damping, const std::string& prefix) {
  LoadedGame loaded = load_game(read_text_file(game_path));
  json report;
  if (kind == "fh") {
    if (!loaded.fh) throw GameError("expected a finite-horizon game file");
    auto [pi, rep] = fictitious_play_fh(*loaded.fh, iters, tol);
    write_text_file(prefix + ".policy", write_policy_seq(pi, loaded.fh->states));
    report = report_to_json(rep);
    report["solver"] = "fictitious-play";
  } else if (kind == "stat") {
    if (!loaded.stat) throw GameError("expected a stationary game file");
    auto [pair, rep] = damped_br_stat(*loaded.stat, damping, tol, iters);
    write_text_file(prefix + ".solution",
                    write_stat_solution(pair.first, pair.second, loaded.stat->states));
    report = report_to_json(rep);
    report["solver"] = "damped-best-response";
  } else {  // statdist: stationary distribution of the (single-action) kernel
    if (!loaded.stat) throw GameError("expected a stationary game file");
    Policy uniform = uniform_policy(loaded.stat->num_states(), loaded.stat->num_actions());
    auto [mu, rep] = damped_fixed_point(loaded.stat->table, uniform, damping, tol, iters);
    write_text_file(prefix + ".solution", write_stat_solution(mu, uniform, loaded.stat->states));
    report = report_to_json(rep);
    report["solver"] = "damped-fixed-point";
  }
  report["game"] = game_path;
  write_text_file(prefix + ".report.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

// ---- verify ----

int run_verify(const std::string& kind, const std::vector<std::string>& inputs, double eps) {
  if (kind == "gcircuit") {
    GCircuit c = parse_circuit(read_text_file(inputs.at(0)));
    Assignment p = parse_assignment(read_text_file(inputs.at(1)));
    auto verdicts = check_assignment(c, p, eps);
    bool ok = true;
    for (const auto& v : verdicts) {
      std::cout << "gate " << v.gate_index << " (" << c.nodes[c.gates[v.gate_index].out]
                << "): " << (v.satisfied ? "PASS" : "FAIL")
                << " violation=" << format_number(v.violation) << '\n';
      ok = ok && v.satisfied;
    }
    return ok ? kExitOk : kExitVerdictFail;
  }
  if (kind == "fh") {
    LoadedGame loaded = load_game(read_text_file(inputs.at(0)));
    if (!loaded.fh) throw GameError("expected a finite-horizon game file");
    PolicySeq pis = parse_policy_seq(read_text_file(inputs.at(1)), loaded.fh->states,
                                     loaded.fh->num_actions(), loaded.fh->horizon);
    for (const auto& pi : pis)
      validate_policy(pi, loaded.fh->num_states(), loaded.fh->num_actions());
    double e = exploitability_fh(*loaded.fh, pis);
    bool ok = e <= eps;
    std::cout << "exploitability: " << format_number(e) << " (eps=" << format_number(eps) << ") "
              << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kExitOk : kExitVerdictFail;
  }
  if (kind == "stat" || kind == "statdist") {
    LoadedGame loaded = load_game(read_text_file(inputs.at(0)));
    if (!loaded.stat) throw GameError("expected a stationary game file");
    auto [mu, pi] = parse_stat_solution(read_text_file(inputs.at(1)), loaded.stat->states,
                                        loaded.stat->num_actions());
    validate_policy(pi, loaded.stat->num_states(), loaded.stat->num_actions());
    double residual = stat_stability_residual(loaded.stat->table, mu, pi);
    bool ok;
    if (kind == "statdist") {
      double bound = eps / double(loaded.stat->num_states());
      ok = residual <= bound;
      std::cout << "stability residual: " << format_number(residual)
                << " (eps/|S|=" << format_number(bound) << ") " << (ok ? "PASS" : "FAIL") << '\n';
    } else {
      double exploit = exploitability_stat(*loaded.stat, mu, pi, eps / 4.0);
      bool r_ok = residual <= eps, e_ok = exploit <= eps;
      std::cout << "stability residual: " << format_number(residual) << ' '
                << (r_ok ? "PASS" : "FAIL") << '\n';
      std::cout << "exploitability: " << format_number(exploit) << ' ' << (e_ok ? "PASS" : "FAIL")
                << '\n';
      ok = r_ok && e_ok;
    }
    return ok ? kExitOk : kExitVerdictFail;
  }
  // nash
  Matrix A = parse_matrix_csv(read_text_file(inputs.at(0)));
  Matrix B = parse_matrix_csv(read_text_file(inputs.at(1)));
  auto [s1, s2] = parse_strategies(read_text_file(inputs.at(2)));
  auto verdict = verify_bimatrix_nash(A, B, s1, s2, eps);
  std::cout << "row regret: " << format_number(verdict.regret1) << '\n';
  std::cout << "column regret: " << format_number(verdict.regret2) << '\n';
  std::cout << (verdict.pass ? "PASS" : "FAIL") << " at eps=" << format_number(eps) << '\n';
  return verdict.pass ? kExitOk : kExitVerdictFail;
}

// ---- simulate ----

int run_simulate(const std::string& kind, const std::string& game_path,
                 const std::string& solution_path, int num_agents, int episodes,
                 std::uint64_t seed, double trunc_tol, const std::string& out) {
  if (kind == "fh") {
    LoadedGame loaded = load_game(read_text_file(game_path));
    if (!loaded.fh) throw GameError("expected a finite-horizon game file");
    const FhMfg& g = *loaded.fh;
    PolicySeq pis =
        parse_policy_seq(read_text_file(solution_path), g.states, g.num_actions(), g.horizon);
    Flow flow = lambda_flow(g, pis);
    SimConfig cfg;
    cfg.num_agents = num_agents;
    cfg.episodes = episodes;
    cfg.seed = seed;
    auto episodes_out = simulate_fh(g, {pis}, cfg, &flow);

    detail::CsvBuilder csv("statistic,step,mean,stderr,episodes,N,seed");
    std::vector<double> buf(episodes_out.size());
    for (int h = 0; h < g.horizon; ++h) {
      for (std::size_t e = 0; e < episodes_out.size(); ++e) buf[e] = episodes_out[e].l1_gap[h];
      MCEstimate gap = summarize(buf);
      csv.field("l1_gap_to_flow").field(long(h)).field(gap.mean).field(gap.std_error);
      csv.field(gap.episodes).field(long(num_agents)).field(long(seed));
      csv.end_row();
    }
    for (std::size_t e = 0; e < episodes_out.size(); ++e)
      buf[e] = episodes_out[e].agent_total_reward[0];
    MCEstimate reward = summarize(buf);
    csv.field("agent1_total_reward").field(long(g.horizon - 1)).field(reward.mean);
    csv.field(reward.std_error).field(reward.episodes).field(long(num_agents)).field(long(seed));
    csv.end_row();
    emit(out, csv.str());
    return kExitOk;
  }
  // stat
  LoadedGame loaded = load_game(read_text_file(game_path));
  if (!loaded.stat) throw GameError("expected a stationary game file");
  const StatMfg& g = *loaded.stat;
  auto [mu, pi] = parse_stat_solution(read_text_file(solution_path), g.states, g.num_actions());
  SimConfig cfg;
  cfg.num_agents = num_agents;
  cfg.episodes = episodes;
  cfg.seed = seed;
  cfg.truncation = truncation_horizon(g.gamma, trunc_tol);
  auto res = simulate_stat(g, mu, pi, nullptr, cfg);
  detail::CsvBuilder csv("statistic,step,mean,stderr,episodes,N,seed");
  csv.field("agent1_discounted_reward").field(long(cfg.truncation)).field(res.estimate.mean);
  csv.field(res.estimate.std_error).field(res.estimate.episodes).field(long(num_agents));
  csv.field(long(seed));
  csv.end_row();
  emit(out, csv.str());
  std::cout << "truncation bias bound: " << format_number(res.bias_bound) << '\n';
  return kExitOk;
}

// ---- experiment ----

void write_outputs(const std::string& dir, const std::string& name, const json& params,
                   const std::vector<std::pair<std::string, std::string>>& files,
                   const json& summary) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["experiment"] = name;
  manifest["params"] = params;
  manifest["build"] = MFG_BUILD_ID;
  manifest["summary"] = summary;
  json names = json::array();
  for (const auto& [fname, body] : files) {
    write_text_file(dir + "/" + fname, body);
    names.push_back(fname);
  }
  manifest["outputs"] = names;
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
  std::cout << summary.dump(2) << '\n';
}

int run_experiment(const std::string& name, int num_agents, int horizon, int episodes,
                   std::uint64_t seed, double gamma, int nmax, const std::string& game_name,
                   const std::string& dir) {
  if (name == "divergence") {
    auto res = divergence_experiment(num_agents, horizon, episodes, seed);
    json summary = {{"exact_h0", res.exact_h0},
                    {"estimated_h0", res.per_step[0].mean},
                    {"even_ratios", res.even_ratios}};
    write_outputs(dir, name,
                  {{"N", num_agents}, {"H", horizon}, {"episodes", episodes}, {"seed", seed}},
                  {{"divergence.csv", res.csv}}, summary);
    return kExitOk;
  }
  if (name == "horizon-gap") {
    std::vector<int> horizons = {8, 16, 24, 32};
    auto res = horizon_gap_experiment(horizons, num_agents, episodes, seed);
    json summary = {{"slope_in_H", res.slope}};
    write_outputs(dir, name,
                  {{"N", num_agents}, {"episodes", episodes}, {"seed", seed}},
                  {{"horizon_gap.csv", res.csv}}, summary);
    return kExitOk;
  }
  if (name == "upper-trend") {
    auto res = upper_trend_experiment({2, 4, 8}, horizon, 1e-3, 1000);
    json summary = {{"fp_exploitability", res.fp_exploitability},
                    {"loglog_slope", res.loglog_slope},
                    {"non_increasing", res.non_increasing}};
    write_outputs(dir, name, {{"H", horizon}}, {{"upper_trend.csv", res.csv}}, summary);
    return res.non_increasing ? kExitOk : kExitVerdictFail;
  }
  if (name == "stat-rate") {
    auto res = stat_rate_experiment({16, 64, 256}, gamma, episodes, 1e-5, seed);
    json summary = {{"loglog_slope", res.loglog_slope}, {"bias_bound", res.bias_bound}};
    write_outputs(dir, name, {{"gamma", gamma}, {"episodes", episodes}, {"seed", seed}},
                  {{"stat_rate.csv", res.csv}}, summary);
    return kExitOk;
  }
  if (name == "anticoncentration") {
    auto res = anticoncentration_experiment(nmax);
    json summary = {{"min_probability", res.min_probability},
                    {"all_above_1_over_20", res.all_above_bound}};
    write_outputs(dir, name, {{"Nmax", nmax}}, {{"anticoncentration.csv", res.csv}}, summary);
    return res.all_above_bound ? kExitOk : kExitVerdictFail;
  }
  if (name == "nash-roundtrip") {
    Matrix A, B;
    if (game_name == "matching-pennies") {
      A = matching_pennies_row();
      B = matching_pennies_col();
    } else if (game_name == "dominant") {
      A = dominant_row();
      B = dominant_col();
    } else {
      throw GameError("unknown builtin game '" + game_name + "'");
    }
    auto res = nash_roundtrip_experiment(A, B, 200000, 1e-3, 0.05, 0.02);
    json summary = {{"exploitability", res.solve.residual},
                    {"regret_row", res.verdict.regret1},
                    {"regret_col", res.verdict.regret2},
                    {"linf_to_oracle", res.linf_to_oracle},
                    {"verdict", res.pass ? "PASS" : "FAIL"}};
    write_outputs(dir, name, {{"game", game_name}}, {{"nash_roundtrip.csv", res.csv}}, summary);
    return res.pass ? kExitOk : kExitVerdictFail;
  }
  if (name == "statdist-roundtrip") {
    auto res = statdist_roundtrip_experiment(reference_circuit(), 0.3, 1e-8, 10000, 0.05);
    json summary = {{"residual", res.solve.residual},
                    {"iterations", res.solve.iterations},
                    {"verdict", res.satisfied ? "PASS" : "FAIL"}};
    write_outputs(dir, name, {{"circuit", "reference"}}, {{"statdist_roundtrip.csv", res.csv}},
                  summary);
    return res.satisfied ? kExitOk : kExitVerdictFail;
  }
  if (name == "fh2-roundtrip") {
    auto res = fh2_roundtrip_experiment(reference_circuit(), 4e-4, 200000, 0.2);
    json summary = {{"exploitability", res.solve.residual},
                    {"iterations", res.solve.iterations},
                    {"verdict", res.satisfied ? "PASS" : "FAIL"}};
    write_outputs(dir, name, {{"circuit", "reference"}}, {{"fh2_roundtrip.csv", res.csv}},
                  summary);
    return res.satisfied ? kExitOk : kExitVerdictFail;
  }
  throw GameError("unknown experiment '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite mean-field game laboratory"};
  app.require_subcommand(1);

  // counterexample
  auto* ce = app.add_subcommand("counterexample", "emit a built-in lower-bound game file");
  std::string ce_kind, ce_out = "-", ce_solution;
  double ce_eps = -1.0, ce_alpha = 0.05, ce_beta = 0.05, ce_gamma = 0.8;
  int ce_horizon = 4;
  ce->add_option("kind", ce_kind, "fh or stat")->required()->check(CLI::IsMember({"fh", "stat"}));
  ce->add_option("--eps", ce_eps, "threshold slope parameter");
  ce->add_option("--alpha", ce_alpha, "balance reward weight");
  ce->add_option("--beta", ce_beta, "action bonus weight");
  ce->add_option("--horizon", ce_horizon, "horizon (fh only)");
  ce->add_option("--gamma", ce_gamma, "discount (stat only)");
  ce->add_option("-o,--out", ce_out, "output file, '-' for stdout");
  ce->add_option("--solution", ce_solution, "also write the closed-form equilibrium here");

  // reduce
  auto* rd = app.add_subcommand("reduce", "compile circuits or bimatrix games into MFG files");
  std::string rd_kind, rd_out = "-";
  std::vector<std::string> rd_inputs;
  double rd_gadget_eps = 0.01;
  rd->add_option("kind", rd_kind, "gcircuit-statdist | gcircuit-fh2 | nash-fh2")
      ->required()
      ->check(CLI::IsMember({"gcircuit-statdist", "gcircuit-fh2", "nash-fh2"}));
  rd->add_option("inputs", rd_inputs, "circuit file, or A.csv B.csv")->required();
  rd->add_option("--gadget-eps", rd_gadget_eps, "comparator brittleness (statdist)");
  rd->add_option("-o,--out", rd_out, "output file, '-' for stdout");

  // solve
  auto* sv = app.add_subcommand("solve", "solve a game file");
  std::string sv_kind, sv_game, sv_prefix = "solution";
  long sv_iters = 10000;
  double sv_tol = 1e-6, sv_damping = 0.3;
  sv->add_option("kind", sv_kind, "fh | stat | statdist")
      ->required()
      ->check(CLI::IsMember({"fh", "stat", "statdist"}));
  sv->add_option("game", sv_game)->required();
  sv->add_option("--iters", sv_iters, "iteration budget");
  sv->add_option("--tol", sv_tol, "target exploitability or residual");
  sv->add_option("--damping", sv_damping, "damping factor (stat, statdist)");
  sv->add_option("-o,--out", sv_prefix, "output prefix");

  // verify
  auto* vf = app.add_subcommand("verify", "check a solution file and print verdicts");
  std::string vf_kind;
  std::vector<std::string> vf_inputs;
  double vf_eps = 0.01;
  vf->add_option("kind", vf_kind, "fh | stat | statdist | gcircuit | nash")
      ->required()
      ->check(CLI::IsMember({"fh", "stat", "statdist", "gcircuit", "nash"}));
  vf->add_option("inputs", vf_inputs, "game+solution, circuit+assignment, or A B strategies")
      ->required();
  vf->add_option("--eps", vf_eps, "tolerance");

  // simulate
  auto* sm = app.add_subcommand("simulate", "run the N-player game under a solution");
  std::string sm_kind, sm_game, sm_solution, sm_out = "-";
  int sm_agents = 100, sm_episodes = 100;
  std::uint64_t sm_seed = 1;
  double sm_trunc_tol = 1e-5;
  sm->add_option("kind", sm_kind, "fh | stat")->required()->check(CLI::IsMember({"fh", "stat"}));
  sm->add_option("game", sm_game)->required();
  sm->add_option("solution", sm_solution)->required();
  sm->add_option("--N", sm_agents, "number of agents");
  sm->add_option("--episodes", sm_episodes);
  sm->add_option("--seed", sm_seed);
  sm->add_option("--trunc-tol", sm_trunc_tol, "discounted truncation tolerance (stat)");
  sm->add_option("-o,--out", sm_out, "CSV output file, '-' for stdout");

  // experiment
  auto* ex = app.add_subcommand("experiment", "run a named experiment into CSV files");
  std::string ex_name, ex_dir = ".", ex_game = "matching-pennies";
  int ex_agents = 10000, ex_horizon = 8, ex_episodes = 200, ex_nmax = 200;
  std::uint64_t ex_seed = 7;
  double ex_gamma = 0.8;
  ex->add_option("name", ex_name,
                 "divergence | horizon-gap | upper-trend | stat-rate | anticoncentration | "
                 "nash-roundtrip | statdist-roundtrip | fh2-roundtrip")
      ->required();
  ex->add_option("--N", ex_agents);
  ex->add_option("--H", ex_horizon);
  ex->add_option("--episodes", ex_episodes);
  ex->add_option("--seed", ex_seed);
  ex->add_option("--gamma", ex_gamma);
  ex->add_option("--Nmax", ex_nmax);
  ex->add_option("--game", ex_game, "builtin game for nash-roundtrip");
  ex->add_option("--out", ex_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ce->parsed())
      return run_counterexample(ce_kind, ce_eps, ce_alpha, ce_beta, ce_horizon, ce_gamma, ce_out,
                                ce_solution);
    if (rd->parsed()) {
      std::size_t need = rd_kind == "nash-fh2" ? 2 : 1;
      if (rd_inputs.size() != need) {
        std::cerr << "reduce " << rd_kind << " expects " << need << " input file(s)\n";
        return kExitUsage;
      }
      return run_reduce(rd_kind, rd_inputs, rd_gadget_eps, rd_out);
    }
    if (sv->parsed()) return run_solve(sv_kind, sv_game, sv_iters, sv_tol, sv_damping, sv_prefix);
    if (vf->parsed()) {
      std::size_t need = vf_kind == "nash" ? 3 : 2;
      if (vf_inputs.size() != need) {
        std::cerr << "verify " << vf_kind << " expects " << need << " input file(s)\n";
        return kExitUsage;
      }
      return run_verify(vf_kind, vf_inputs, vf_eps);
    }
    if (sm->parsed())
      return run_simulate(sm_kind, sm_game, sm_solution, sm_agents, sm_episodes, sm_seed,
                          sm_trunc_tol, sm_out);
    if (ex->parsed())
      return run_experiment(ex_name, ex_agents, ex_horizon, ex_episodes, ex_seed, ex_gamma,
                            ex_nmax, ex_game, ex_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
