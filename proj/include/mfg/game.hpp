#pragma once

// Finite game descriptions: state/action sets, expression-valued kernels and
// rewards, plus the text file format shared by every tool in the project.
// All objects are immutable after load; every operation on them is pure.

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg/expr.hpp"
#include "mfg/rng.hpp"

namespace mfg {

struct GameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kDistSumTol = 1e-9;
constexpr double kDistNegTol = 1e-12;

// Probability vector over the game's states, in declared order.
struct Distribution {
  std::vector<double> p;

  double operator[](std::size_t i) const { return p[i]; }
  std::size_t size() const { return p.size(); }
};

inline Distribution make_distribution(std::vector<double> v) {
  double sum = 0.0;
  for (auto& x : v) {
    if (x < -kDistNegTol) throw GameError("distribution entry below zero: " + std::to_string(x));
    if (x < 0.0) x = 0.0;
    sum += x;
  }
  if (std::abs(sum - 1.0) > kDistSumTol)
    throw GameError("distribution sums to " + std::to_string(sum) + ", expected 1");
  return Distribution{std::move(v)};
}

inline double l1_distance(const Distribution& a, const Distribution& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a.p[i] - b.p[i]);
  return d;
}

inline double linf_distance(const Distribution& a, const Distribution& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.p[i] - b.p[i]));
  return d;
}

// Per-state row-stochastic map over actions.
struct Policy {
  std::vector<std::vector<double>> rows;  // rows[state][action]

  std::size_t num_states() const { return rows.size(); }
};

using PolicySeq = std::vector<Policy>;
using Flow = std::vector<Distribution>;

inline void validate_policy(const Policy& pi, std::size_t num_states, std::size_t num_actions) {
  if (pi.rows.size() != num_states) throw GameError("policy has wrong number of state rows");
  for (const auto& row : pi.rows) {
    if (row.size() != num_actions) throw GameError("policy row has wrong number of actions");
    double sum = 0.0;
    for (double x : row) {
      if (x < -kDistNegTol || x > 1.0 + kDistNegTol) throw GameError("policy entry outside [0,1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kDistSumTol) throw GameError("policy row does not sum to 1");
  }
}

inline Policy uniform_policy(std::size_t num_states, std::size_t num_actions) {
  Policy pi;
  pi.rows.assign(num_states, std::vector<double>(num_actions, 1.0 / double(num_actions)));
  return pi;
}

inline Policy deterministic_policy(const std::vector<int>& action_per_state, std::size_t num_actions) {
  Policy pi;
  pi.rows.assign(action_per_state.size(), std::vector<double>(num_actions, 0.0));
  for (std::size_t s = 0; s < action_per_state.size(); ++s)
    pi.rows[s][static_cast<std::size_t>(action_per_state[s])] = 1.0;
  return pi;
}

// Kernel entries (s, a, s') and reward entries (s, a); a missing expression
// means identically zero, matching the file format's omission rule.
struct ExprTable {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Expr> kernel;  // num_states * num_actions * num_states
  std::vector<Expr> reward;  // num_states * num_actions

  Expr& kernel_at(int s, int a, int s2) {
    return kernel[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
  }
  const Expr& kernel_at(int s, int a, int s2) const {
    return kernel[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
  }
  Expr& reward_at(int s, int a) { return reward[static_cast<std::size_t>(s) * num_actions + a]; }
  const Expr& reward_at(int s, int a) const {
    return reward[static_cast<std::size_t>(s) * num_actions + a];
  }
};

inline ExprTable make_expr_table(int num_states, int num_actions) {
  ExprTable t;
  t.num_states = num_states;
  t.num_actions = num_actions;
  t.kernel.resize(static_cast<std::size_t>(num_states) * num_actions * num_states);
  t.reward.resize(static_cast<std::size_t>(num_states) * num_actions);
  return t;
}

// One kernel row P(.|s,a,mu); validated as a probability vector on every call.
inline std::vector<double> eval_kernel_row(const ExprTable& t, int s, int a,
                                           const std::vector<double>& mu) {
  std::vector<double> row(static_cast<std::size_t>(t.num_states), 0.0);
  double sum = 0.0;
  for (int s2 = 0; s2 < t.num_states; ++s2) {
    const Expr& e = t.kernel_at(s, a, s2);
    double v = e.valid() ? eval_expr(e, mu) : 0.0;
    if (v < -kDistNegTol)
      throw GameError("kernel row entry below zero at (s=" + std::to_string(s) +
                      ", a=" + std::to_string(a) + ", s'=" + std::to_string(s2) + ")");
    if (v < 0.0) v = 0.0;
    row[static_cast<std::size_t>(s2)] = v;
    sum += v;
  }
  if (std::abs(sum - 1.0) > kDistSumTol)
    throw GameError("kernel row at (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                    ") sums to " + std::to_string(sum));
  return row;
}

inline double eval_reward(const ExprTable& t, int s, int a, const std::vector<double>& mu) {
  const Expr& e = t.reward_at(s, a);
  double v = e.valid() ? eval_expr(e, mu) : 0.0;
  if (v < -1e-9 || v > 1.0 + 1e-9)
    throw GameError("reward outside [0,1] at (s=" + std::to_string(s) +
                    ", a=" + std::to_string(a) + "): " + std::to_string(v));
  return std::min(1.0, std::max(0.0, v));
}

struct FhMfg {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  int horizon = 0;
  ExprTable table;
  Distribution mu0;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
};

struct StatMfg {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  double gamma = 0.0;
  ExprTable table;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
};

inline const char* const kReservedNames[] = {"mu", "min", "max"};

inline void validate_names(const std::vector<std::string>& names, const char* what) {
  if (names.empty()) throw GameError(std::string(what) + " list is empty");
  for (const auto& n : names)
    for (const char* r : kReservedNames)
      if (n == r) throw GameError(std::string(what) + " name '" + n + "' is reserved");
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j]) throw GameError(std::string(what) + " name '" + names[i] + "' repeated");
}

// Evaluates every kernel row and reward at `points` simplex samples; throws
// on the first violation. Games that fail the probe are rejected at load.
inline void probe_table(const ExprTable& t, int points, std::uint64_t seed = 1234567) {
  auto rng = make_stream(seed, 99);
  for (int k = 0; k < points; ++k) {
    std::vector<double> mu = random_simplex(rng, static_cast<std::size_t>(t.num_states));
    for (int s = 0; s < t.num_states; ++s)
      for (int a = 0; a < t.num_actions; ++a) {
        eval_kernel_row(t, s, a, mu);
        eval_reward(t, s, a, mu);
      }
  }
}

inline void validate_fh(const FhMfg& g, int probe_points = 100) {
  validate_names(g.states, "state");
  validate_names(g.actions, "action");
  if (g.horizon < 1) throw GameError("horizon must be positive");
  if (g.mu0.size() != g.states.size()) throw GameError("mu0 has wrong dimension");
  make_distribution(g.mu0.p);
  probe_table(g.table, probe_points);
}

inline void validate_stat(const StatMfg& g, int probe_points = 100) {
  validate_names(g.states, "state");
  validate_names(g.actions, "action");
  if (!(g.gamma > 0.0 && g.gamma < 1.0)) throw GameError("gamma must lie in (0,1)");
  probe_table(g.table, probe_points);
}

// ---- text format ----
//
//   states: s1 s2 ...
//   actions: a1 a2 ...
//   horizon: H            (finite-horizon)  |  gamma: g   (stationary)
//   mu0: p1, p2, ...      (finite-horizon only)
//   P <s> <a> <s'> = <expr>
//   R <s> <a> = <expr>
//
// Omitted P and R entries default to 0. '#' starts a comment line.

struct LoadedGame {
  std::optional<FhMfg> fh;
  std::optional<StatMfg> stat;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline int index_of(const std::vector<std::string>& names, const std::string& n,
                    const char* what, int line_no) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == n) return static_cast<int>(i);
  throw GameError("line " + std::to_string(line_no) + ": unknown " + what + " '" + n + "'");
}

inline std::vector<double> parse_real_list(const std::string& text, int line_no) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    double v = std::strtod(item.c_str(), &end);
    while (end && *end && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (!end || *end != '\0')
      throw GameError("line " + std::to_string(line_no) + ": bad real list entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

inline LoadedGame load_game(const std::string& text, int probe_points = 100) {
  std::vector<std::string> states, actions;
  std::optional<int> horizon;
  std::optional<double> gamma;
  std::optional<std::vector<double>> mu0;
  struct PendingEntry {
    bool is_kernel;
    std::string s, a, s2, expr_text;
    int line_no;
  };
  std::vector<PendingEntry> entries;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;

    auto colon = line.find(':');
    auto eq = line.find('=');
    if (colon != std::string::npos && (eq == std::string::npos || colon < eq)) {
      std::string key = line.substr(first, colon - first);
      while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
      std::string rest = line.substr(colon + 1);
      if (key == "states")
        states = detail::split_ws(rest);
      else if (key == "actions")
        actions = detail::split_ws(rest);
      else if (key == "horizon")
        horizon = std::stoi(rest);
      else if (key == "gamma")
        gamma = std::stod(rest);
      else if (key == "mu0")
        mu0 = detail::parse_real_list(rest, line_no);
      else
        throw GameError("line " + std::to_string(line_no) + ": unknown header key '" + key + "'");
      continue;
    }

    if (eq == std::string::npos)
      throw GameError("line " + std::to_string(line_no) + ": expected '=' in table entry");
    auto toks = detail::split_ws(line.substr(0, eq));
    std::string expr_text = line.substr(eq + 1);
    if (toks.size() == 4 && toks[0] == "P")
      entries.push_back({true, toks[1], toks[2], toks[3], expr_text, line_no});
    else if (toks.size() == 3 && toks[0] == "R")
      entries.push_back({false, toks[1], toks[2], "", expr_text, line_no});
    else
      throw GameError("line " + std::to_string(line_no) + ": expected 'P s a s2 = e' or 'R s a = e'");
  }

  if (states.empty()) throw GameError("missing 'states:' header");
  if (actions.empty()) throw GameError("missing 'actions:' header");
  if (horizon.has_value() == gamma.has_value())
    throw GameError("exactly one of 'horizon:' and 'gamma:' must be given");

  ExprTable table = make_expr_table(static_cast<int>(states.size()),
                                    static_cast<int>(actions.size()));
  for (const auto& e : entries) {
    int s = detail::index_of(states, e.s, "state", e.line_no);
    int a = detail::index_of(actions, e.a, "action", e.line_no);
    Expr parsed;
    try {
      parsed = parse_expr(e.expr_text, states);
    } catch (const ParseError& pe) {
      throw GameError("line " + std::to_string(e.line_no) + ": " + pe.what());
    }
    if (e.is_kernel) {
      int s2 = detail::index_of(states, e.s2, "state", e.line_no);
      table.kernel_at(s, a, s2) = parsed;
    } else {
      table.reward_at(s, a) = parsed;
    }
  }

  LoadedGame out;
  if (horizon) {
    if (!mu0) throw GameError("finite-horizon game requires 'mu0:' header");
    FhMfg g;
    g.states = states;
    g.actions = actions;
    g.horizon = *horizon;
    g.table = std::move(table);
    g.mu0 = make_distribution(*mu0);
    validate_fh(g, probe_points);
    out.fh = std::move(g);
  } else {
    StatMfg g;
    g.states = states;
    g.actions = actions;
    g.gamma = *gamma;
    g.table = std::move(table);
    validate_stat(g, probe_points);
    out.stat = std::move(g);
  }
  return out;
}

namespace detail {

inline void write_table(std::ostringstream& out, const ExprTable& t,
                        const std::vector<std::string>& states,
                        const std::vector<std::string>& actions) {
  for (int s = 0; s < t.num_states; ++s)
    for (int a = 0; a < t.num_actions; ++a)
      for (int s2 = 0; s2 < t.num_states; ++s2) {
        const Expr& e = t.kernel_at(s, a, s2);
        if (e.valid())
          out << "P " << states[s] << ' ' << actions[a] << ' ' << states[s2] << " = "
              << to_string(e) << '\n';
      }
  for (int s = 0; s < t.num_states; ++s)
    for (int a = 0; a < t.num_actions; ++a) {
      const Expr& e = t.reward_at(s, a);
      if (e.valid()) out << "R " << states[s] << ' ' << actions[a] << " = " << to_string(e) << '\n';
    }
}

inline void write_names(std::ostringstream& out, const char* key,
                        const std::vector<std::string>& names) {
  out << key << ':';
  for (const auto& n : names) out << ' ' << n;
  out << '\n';
}

}  // namespace detail

inline std::string write_game(const FhMfg& g) {
  std::ostringstream out;
  detail::write_names(out, "states", g.states);
  detail::write_names(out, "actions", g.actions);
  out << "horizon: " << g.horizon << '\n';
  out << "mu0: ";
  for (std::size_t i = 0; i < g.mu0.size(); ++i)
    out << (i ? ", " : "") << format_number(g.mu0.p[i]);
  out << '\n';
  detail::write_table(out, g.table, g.states, g.actions);
  return out.str();
}

inline std::string write_game(const StatMfg& g) {
  std::ostringstream out;
  detail::write_names(out, "states", g.states);
  detail::write_names(out, "actions", g.actions);
  out << "gamma: " << format_number(g.gamma) << '\n';
  detail::write_table(out, g.table, g.states, g.actions);
  return out.str();
}

}  // namespace mfg
