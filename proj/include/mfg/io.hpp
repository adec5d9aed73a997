#pragma once

// Solution-file formats shared by the CLI solvers and verifiers.
//
//   finite-horizon policy:   pi <h> <state> = p1, p2, ...
//   stationary solution:     mu = p1, ..., pS
//                            pi <state> = p1, p2, ...
//   bimatrix strategies:     sigma1 = ...
//                            sigma2 = ...
//   payoff matrix CSV:       one row per line, comma separated

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mfg/game.hpp"
#include "mfg/reductions.hpp"

namespace mfg {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GameError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw GameError("cannot write file: " + path);
  out << body;
}

namespace detail {

inline std::string real_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_number(xs[i]);
  }
  return out;
}

}  // namespace detail

inline std::string write_policy_seq(const PolicySeq& pis, const std::vector<std::string>& states) {
  std::ostringstream out;
  for (std::size_t h = 0; h < pis.size(); ++h)
    for (std::size_t s = 0; s < states.size(); ++s)
      out << "pi " << h << ' ' << states[s] << " = " << detail::real_list(pis[h].rows[s]) << '\n';
  return out.str();
}

inline PolicySeq parse_policy_seq(const std::string& text, const std::vector<std::string>& states,
                                  int num_actions, int horizon) {
  PolicySeq pis(horizon, Policy{std::vector<std::vector<double>>(
                             states.size(), std::vector<double>(num_actions, -1.0))});
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind != "pi") throw GameError("line " + std::to_string(line_no) + ": expected 'pi'");
    int h;
    std::string state, eq;
    if (!(ls >> h >> state >> eq) || eq != "=")
      throw GameError("line " + std::to_string(line_no) + ": expected 'pi <h> <state> = ...'");
    if (h < 0 || h >= horizon)
      throw GameError("line " + std::to_string(line_no) + ": step out of range");
    std::string rest;
    std::getline(ls, rest);
    auto probs = detail::parse_real_list(rest, line_no);
    int si = detail::index_of(states, state, "state", line_no);
    if (static_cast<int>(probs.size()) != num_actions)
      throw GameError("line " + std::to_string(line_no) + ": wrong number of probabilities");
    pis[h].rows[si] = probs;
  }
  for (int h = 0; h < horizon; ++h)
    for (std::size_t s = 0; s < states.size(); ++s)
      if (pis[h].rows[s][0] < 0.0)
        throw GameError("policy file is missing step " + std::to_string(h) + " state " + states[s]);
  return pis;
}

inline std::string write_stat_solution(const Distribution& mu, const Policy& pi,
                                       const std::vector<std::string>& states) {
  std::ostringstream out;
  out << "mu = " << detail::real_list(mu.p) << '\n';
  for (std::size_t s = 0; s < states.size(); ++s)
    out << "pi " << states[s] << " = " << detail::real_list(pi.rows[s]) << '\n';
  return out.str();
}

inline std::pair<Distribution, Policy> parse_stat_solution(const std::string& text,
                                                           const std::vector<std::string>& states,
                                                           int num_actions) {
  std::vector<double> mu;
  Policy pi;
  pi.rows.assign(states.size(), std::vector<double>(num_actions, -1.0));
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "mu") {
      std::string eq;
      ls >> eq;
      std::string rest;
      std::getline(ls, rest);
      mu = detail::parse_real_list(rest, line_no);
    } else if (kind == "pi") {
      std::string state, eq;
      ls >> state >> eq;
      std::string rest;
      std::getline(ls, rest);
      int si = detail::index_of(states, state, "state", line_no);
      pi.rows[si] = detail::parse_real_list(rest, line_no);
    } else {
      throw GameError("line " + std::to_string(line_no) + ": expected 'mu' or 'pi'");
    }
  }
  if (mu.size() != states.size()) throw GameError("solution file is missing a full 'mu' line");
  for (std::size_t s = 0; s < states.size(); ++s)
    if (pi.rows[s][0] < 0.0) throw GameError("solution file is missing policy row for " + states[s]);
  return {make_distribution(std::move(mu)), std::move(pi)};
}

inline std::string write_strategies(const std::vector<double>& s1, const std::vector<double>& s2) {
  std::ostringstream out;
  out << "sigma1 = " << detail::real_list(s1) << '\n';
  out << "sigma2 = " << detail::real_list(s2) << '\n';
  return out.str();
}

inline std::pair<std::vector<double>, std::vector<double>> parse_strategies(
    const std::string& text) {
  std::vector<double> s1, s2;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind, eq;
    if (!(ls >> kind)) continue;
    ls >> eq;
    std::string rest;
    std::getline(ls, rest);
    if (kind == "sigma1")
      s1 = detail::parse_real_list(rest, line_no);
    else if (kind == "sigma2")
      s2 = detail::parse_real_list(rest, line_no);
    else
      throw GameError("line " + std::to_string(line_no) + ": expected sigma1 or sigma2");
  }
  if (s1.empty() || s2.empty()) throw GameError("strategies file needs sigma1 and sigma2 lines");
  return {std::move(s1), std::move(s2)};
}

inline Matrix parse_matrix_csv(const std::string& text) {
  Matrix m;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    m.push_back(detail::parse_real_list(line, line_no));
  }
  if (m.empty()) throw GameError("empty payoff matrix");
  return m;
}

inline std::string write_matrix_csv(const Matrix& m) {
  std::ostringstream out;
  for (const auto& row : m) out << detail::real_list(row) << '\n';
  return out.str();
}

}  // namespace mfg
