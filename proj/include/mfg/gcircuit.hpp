#pragma once

// Generalized circuits: assignment / weighted-addition / brittle-comparison
// gates over [0,1]-valued nodes, with an eps-satisfaction checker.
//
// File format, one gate per line:
//   ASSIGN v = 0|1
//   AFF v = a*v1 + b*v2      (either weighted term may be omitted)
//   CMP v = v1 < v2

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg/expr.hpp"

namespace mfg {

struct CircuitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class GateKind { Assign, AffineClamp, Compare };

// Empty input slots are represented by -1 so unary weighted additions
// stay well-formed.
constexpr int kNoInput = -1;

struct Gate {
  GateKind kind;
  int zeta = 0;           // Assign
  double alpha = 0.0;     // AffineClamp weights
  double beta = 0.0;
  int in1 = kNoInput;
  int in2 = kNoInput;
  int out = -1;
};

struct GCircuit {
  std::vector<std::string> nodes;
  std::vector<Gate> gates;

  int num_nodes() const { return static_cast<int>(nodes.size()); }

  int node_index(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline void validate_circuit(const GCircuit& c) {
  std::vector<char> is_output(c.nodes.size(), 0);
  for (const auto& g : c.gates) {
    if (g.out < 0 || g.out >= c.num_nodes()) throw CircuitError("gate output is not a declared node");
    if (is_output[g.out])
      throw CircuitError("two gates share the output node '" + c.nodes[g.out] + "'");
    is_output[g.out] = 1;
    for (int in : {g.in1, g.in2})
      if (in != kNoInput && (in < 0 || in >= c.num_nodes()))
        throw CircuitError("gate input is not a declared node");
    if (g.kind == GateKind::Assign && g.zeta != 0 && g.zeta != 1)
      throw CircuitError("assignment gate constant must be 0 or 1");
    if (g.kind == GateKind::AffineClamp &&
        (std::abs(g.alpha) > 1.0 || std::abs(g.beta) > 1.0))
      throw CircuitError("affine gate weights must lie in [-1, 1]");
    if (g.kind == GateKind::Compare && (g.in1 == kNoInput || g.in2 == kNoInput))
      throw CircuitError("comparison gate needs both inputs");
  }
}

// Node values in [0,1], complete over gate outputs.
using Assignment = std::map<std::string, double>;

struct GateVerdict {
  int gate_index;
  bool satisfied;
  double violation;  // distance to the nearest allowed value; 0 in the brittle band
};

// Applies the gate rules at tolerance eps. Assign: p(v) = zeta +- eps.
// AffineClamp: p(v) = u1(alpha p(v1) + beta p(v2)) +- eps. Compare: p(v) is
// forced to 1 or 0 only outside the eps band around equality.
inline std::vector<GateVerdict> check_assignment(const GCircuit& c, const Assignment& p,
                                                 double eps) {
  if (!(eps > 0.0)) throw CircuitError("check_assignment: eps must be positive");
  validate_circuit(c);
  auto value_of = [&](int node) {
    auto it = p.find(c.nodes[node]);
    if (it == p.end())
      throw CircuitError("assignment is missing node '" + c.nodes[node] + "'");
    return it->second;
  };
  auto input_of = [&](int node) { return node == kNoInput ? 0.0 : value_of(node); };

  std::vector<GateVerdict> verdicts;
  verdicts.reserve(c.gates.size());
  for (std::size_t i = 0; i < c.gates.size(); ++i) {
    const Gate& g = c.gates[i];
    double out = value_of(g.out);
    double violation = 0.0;
    switch (g.kind) {
      case GateKind::Assign:
        violation = std::abs(out - double(g.zeta));
        break;
      case GateKind::AffineClamp: {
        double target = u_clamp(1.0, g.alpha * input_of(g.in1) + g.beta * input_of(g.in2));
        violation = std::abs(out - target);
        break;
      }
      case GateKind::Compare: {
        double a = value_of(g.in1), b = value_of(g.in2);
        if (a <= b - eps)
          violation = std::abs(out - 1.0);
        else if (a >= b + eps)
          violation = std::abs(out - 0.0);
        else
          violation = 0.0;  // brittle band: unconstrained
        break;
      }
    }
    verdicts.push_back({static_cast<int>(i), violation <= eps, violation});
  }
  return verdicts;
}

inline bool all_satisfied(const std::vector<GateVerdict>& vs) {
  for (const auto& v : vs)
    if (!v.satisfied) return false;
  return true;
}

// The hand-checkable reference circuit: a := 1; b := u1(a/2); c := [b < a].
// Exactly satisfied by (a, b, c) = (1, 1/2, 1) at every eps < 1/2.
inline GCircuit reference_circuit() {
  GCircuit c;
  c.nodes = {"a", "b", "c"};
  Gate assign{GateKind::Assign, 1, 0.0, 0.0, kNoInput, kNoInput, 0};
  Gate aff{GateKind::AffineClamp, 0, 0.5, 0.0, 0, kNoInput, 1};
  Gate cmp{GateKind::Compare, 0, 0.0, 0.0, 1, 0, 2};
  c.gates = {assign, aff, cmp};
  validate_circuit(c);
  return c;
}

// ---- file format ----

namespace detail {

inline int intern_node(GCircuit& c, const std::string& name) {
  int idx = c.node_index(name);
  if (idx >= 0) return idx;
  c.nodes.push_back(name);
  return c.num_nodes() - 1;
}

// "a*v1" or "v1" -> (weight, node)
inline std::pair<double, std::string> parse_weighted_term(const std::string& term, int line_no) {
  auto star = term.find('*');
  if (star == std::string::npos) return {1.0, term};
  char* end = nullptr;
  std::string wtext = term.substr(0, star);
  double w = std::strtod(wtext.c_str(), &end);
  if (!end || end == wtext.c_str())
    throw CircuitError("line " + std::to_string(line_no) + ": bad weight '" + wtext + "'");
  return {w, term.substr(star + 1)};
}

inline std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline GCircuit parse_circuit(const std::string& text) {
  GCircuit c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind, out_name, eq;
    if (!(ls >> kind)) continue;
    if (!(ls >> out_name >> eq) || eq != "=")
      throw CircuitError("line " + std::to_string(line_no) + ": expected '<KIND> v = ...'");
    Gate g;
    g.out = detail::intern_node(c, out_name);
    std::string rest;
    std::getline(ls, rest);
    rest = detail::strip(rest);
    if (kind == "ASSIGN") {
      g.kind = GateKind::Assign;
      if (rest != "0" && rest != "1")
        throw CircuitError("line " + std::to_string(line_no) + ": ASSIGN constant must be 0 or 1");
      g.zeta = rest == "1" ? 1 : 0;
    } else if (kind == "AFF") {
      g.kind = GateKind::AffineClamp;
      // split on the last top-level '+' if present
      auto plus = rest.rfind('+');
      std::string first = rest, second;
      if (plus != std::string::npos) {
        first = detail::strip(rest.substr(0, plus));
        second = detail::strip(rest.substr(plus + 1));
      }
      auto [w1, n1] = detail::parse_weighted_term(first, line_no);
      g.alpha = w1;
      g.in1 = detail::intern_node(c, n1);
      if (!second.empty()) {
        auto [w2, n2] = detail::parse_weighted_term(second, line_no);
        g.beta = w2;
        g.in2 = detail::intern_node(c, n2);
      }
    } else if (kind == "CMP") {
      g.kind = GateKind::Compare;
      auto lt = rest.find('<');
      if (lt == std::string::npos)
        throw CircuitError("line " + std::to_string(line_no) + ": CMP needs 'v1 < v2'");
      g.in1 = detail::intern_node(c, detail::strip(rest.substr(0, lt)));
      g.in2 = detail::intern_node(c, detail::strip(rest.substr(lt + 1)));
    } else {
      throw CircuitError("line " + std::to_string(line_no) + ": unknown gate kind '" + kind + "'");
    }
    c.gates.push_back(g);
  }
  validate_circuit(c);
  return c;
}

inline std::string write_circuit(const GCircuit& c) {
  std::ostringstream out;
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::Assign:
        out << "ASSIGN " << c.nodes[g.out] << " = " << g.zeta << '\n';
        break;
      case GateKind::AffineClamp:
        out << "AFF " << c.nodes[g.out] << " = " << format_number(g.alpha) << '*'
            << c.nodes[g.in1];
        if (g.in2 != kNoInput)
          out << " + " << format_number(g.beta) << '*' << c.nodes[g.in2];
        out << '\n';
        break;
      case GateKind::Compare:
        out << "CMP " << c.nodes[g.out] << " = " << c.nodes[g.in1] << " < " << c.nodes[g.in2]
            << '\n';
        break;
    }
  }
  return out.str();
}

inline std::string write_assignment(const Assignment& p) {
  std::ostringstream out;
  for (const auto& [name, value] : p) out << name << " = " << format_number(value) << '\n';
  return out.str();
}

inline Assignment parse_assignment(const std::string& text) {
  Assignment p;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string name, eq;
    double value;
    if (!(ls >> name)) continue;
    if (!(ls >> eq >> value) || eq != "=")
      throw CircuitError("line " + std::to_string(line_no) + ": expected '<node> = <value>'");
    p[name] = value;
  }
  return p;
}

}  // namespace mfg
