#pragma once

// Arithmetic/min/max expression trees over population coordinates.
// Kernels and rewards of every game in this library are built from these
// trees, which keeps game files self-describing and evaluation exact.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mfg {

struct ExprError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivideByZeroError : ExprError {
  DivideByZeroError() : ExprError("division by zero while evaluating expression") {}
};

struct ParseError : ExprError {
  std::size_t position;
  ParseError(std::size_t pos, const std::string& what)
      : ExprError("parse error at position " + std::to_string(pos) + ": " + what),
        position(pos) {}
};

enum class ExprOp { Const, MuCoord, Add, Sub, Mul, Div, Min, Max };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op;
  double value = 0.0;      // Const
  int coord = -1;          // MuCoord: index into the declared state list
  std::string coord_name;  // MuCoord: state name, kept for printing
  ExprPtr lhs, rhs;
};

// Value-semantic handle; the node graph is immutable after construction, so
// copies share structure and evaluation is safe from any thread.
struct Expr {
  ExprPtr node;

  bool valid() const { return node != nullptr; }
};

inline Expr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Const;
  n->value = v;
  return Expr{std::move(n)};
}

inline Expr make_mu(std::string name, int index) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::MuCoord;
  n->coord = index;
  n->coord_name = std::move(name);
  return Expr{std::move(n)};
}

inline Expr make_binary(ExprOp op, Expr a, Expr b) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->lhs = std::move(a.node);
  n->rhs = std::move(b.node);
  return Expr{std::move(n)};
}

inline Expr operator+(Expr a, Expr b) { return make_binary(ExprOp::Add, std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return make_binary(ExprOp::Sub, std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return make_binary(ExprOp::Mul, std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return make_binary(ExprOp::Div, std::move(a), std::move(b)); }
inline Expr emin(Expr a, Expr b) { return make_binary(ExprOp::Min, std::move(a), std::move(b)); }
inline Expr emax(Expr a, Expr b) { return make_binary(ExprOp::Max, std::move(a), std::move(b)); }

// max{0, min{1, x}} as a tree; the u_1 clamp of the gadget constructions.
inline Expr clamp01(Expr x) {
  return emax(make_const(0.0), emin(make_const(1.0), std::move(x)));
}

// max{0, min{alpha, x}}.
inline Expr clamp_to(double alpha, Expr x) {
  return emax(make_const(0.0), emin(make_const(alpha), std::move(x)));
}

inline double eval_node(const ExprNode& n, const std::vector<double>& mu) {
  switch (n.op) {
    case ExprOp::Const:
      return n.value;
    case ExprOp::MuCoord:
      return mu[static_cast<std::size_t>(n.coord)];
    case ExprOp::Add:
      return eval_node(*n.lhs, mu) + eval_node(*n.rhs, mu);
    case ExprOp::Sub:
      return eval_node(*n.lhs, mu) - eval_node(*n.rhs, mu);
    case ExprOp::Mul:
      return eval_node(*n.lhs, mu) * eval_node(*n.rhs, mu);
    case ExprOp::Div: {
      const double a = eval_node(*n.lhs, mu);
      const double b = eval_node(*n.rhs, mu);
      if (b == 0.0) throw DivideByZeroError{};
      return a / b;
    }
    case ExprOp::Min:
      return std::min(eval_node(*n.lhs, mu), eval_node(*n.rhs, mu));
    case ExprOp::Max:
      return std::max(eval_node(*n.lhs, mu), eval_node(*n.rhs, mu));
  }
  throw ExprError("corrupt expression node");
}

inline double eval_expr(const Expr& e, const std::vector<double>& mu) {
  if (!e.valid()) throw ExprError("evaluating an empty expression");
  return eval_node(*e.node, mu);
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
  const ExprNode* x = a.node.get();
  const ExprNode* y = b.node.get();
  if (x == y) return true;
  if (!x || !y || x->op != y->op) return false;
  switch (x->op) {
    case ExprOp::Const:
      return x->value == y->value;
    case ExprOp::MuCoord:
      return x->coord == y->coord && x->coord_name == y->coord_name;
    default:
      return structurally_equal(Expr{x->lhs}, Expr{y->lhs}) &&
             structurally_equal(Expr{x->rhs}, Expr{y->rhs});
  }
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // trim to the shortest representation that still round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

inline void print_node(const ExprNode& n, std::string& out) {
  switch (n.op) {
    case ExprOp::Const:
      out += format_number(n.value);
      return;
    case ExprOp::MuCoord:
      out += "mu(";
      out += n.coord_name;
      out += ')';
      return;
    case ExprOp::Min:
    case ExprOp::Max:
      out += (n.op == ExprOp::Min) ? "min(" : "max(";
      print_node(*n.lhs, out);
      out += ", ";
      print_node(*n.rhs, out);
      out += ')';
      return;
    default: {
      const char* sym = n.op == ExprOp::Add   ? " + "
                        : n.op == ExprOp::Sub ? " - "
                        : n.op == ExprOp::Mul ? " * "
                                              : " / ";
      out += '(';
      print_node(*n.lhs, out);
      out += sym;
      print_node(*n.rhs, out);
      out += ')';
      return;
    }
  }
}

inline std::string to_string(const Expr& e) {
  std::string out;
  if (e.valid()) print_node(*e.node, out);
  return out;
}

// Recursive-descent parser for:
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := number | "mu" "(" ident ")" | ("min"|"max") "(" expr "," expr ")"
//           | "(" expr ")"
namespace detail {

class ExprParser {
 public:
  ExprParser(std::string_view text, const std::vector<std::string>& states)
      : text_(text), states_(states) {}

  Expr parse() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError(pos_, "unexpected trailing input");
    return e;
  }

 private:
  std::string_view text_;
  const std::vector<std::string>& states_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) throw ParseError(pos_, std::string("expected '") + c + "'");
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) return e;
      char c = text_[pos_];
      if (c == '+' || c == '-') {
        ++pos_;
        Expr rhs = parse_term();
        e = make_binary(c == '+' ? ExprOp::Add : ExprOp::Sub, std::move(e), std::move(rhs));
      } else {
        return e;
      }
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) return e;
      char c = text_[pos_];
      if (c == '*' || c == '/') {
        ++pos_;
        Expr rhs = parse_factor();
        e = make_binary(c == '*' ? ExprOp::Mul : ExprOp::Div, std::move(e), std::move(rhs));
      } else {
        return e;
      }
    }
  }

  Expr parse_factor() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      std::string name = parse_ident();
      if (name == "mu") {
        expect('(');
        skip_ws();
        std::size_t state_pos = pos_;
        std::string state = parse_ident();
        expect(')');
        int idx = state_index(state);
        if (idx < 0) throw ParseError(state_pos, "unknown state name '" + state + "'");
        return make_mu(std::move(state), idx);
      }
      if (name == "min" || name == "max") {
        expect('(');
        Expr a = parse_expr();
        expect(',');
        Expr b = parse_expr();
        expect(')');
        return make_binary(name == "min" ? ExprOp::Min : ExprOp::Max, std::move(a), std::move(b));
      }
      throw ParseError(start, "unknown function '" + name + "'");
    }
    throw ParseError(pos_, "expected number, mu(...), min/max(...) or '('");
  }

  std::string parse_ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) throw ParseError(pos_, "expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    // optional exponent
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    std::string lit(text_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(lit.c_str(), &end);
    if (end != lit.c_str() + lit.size() || lit.empty())
      throw ParseError(start, "malformed number literal '" + lit + "'");
    return make_const(v);
  }

  int state_index(const std::string& name) const {
    for (std::size_t i = 0; i < states_.size(); ++i)
      if (states_[i] == name) return static_cast<int>(i);
    return -1;
  }
};

}  // namespace detail

inline Expr parse_expr(std::string_view text, const std::vector<std::string>& states) {
  return detail::ExprParser(text, states).parse();
}

// --- scalar building blocks used by the constructions ---

// u_alpha(x) = max{0, min{alpha, x}}
inline double u_clamp(double alpha, double x) {
  if (!(alpha > 0.0)) throw std::domain_error("u_clamp: alpha must be positive");
  return std::max(0.0, std::min(alpha, x));
}

// Piecewise-linear threshold: 0 below 1/2-eps, 1 above 1/2+eps, slope 1/(2 eps)
// in between.
inline double omega(double eps, double x) {
  if (!(eps > 0.0) || !(eps < 0.5)) throw std::domain_error("omega: eps must lie in (0, 1/2)");
  if (x < -1e-12 || x > 1.0 + 1e-12) throw std::domain_error("omega: x must lie in [0, 1]");
  return std::max(0.0, std::min(1.0, 0.5 + (x - 0.5) / (2.0 * eps)));
}

// Brittle comparator: 1 when x >= y + delta, 0 when x <= y - delta.
inline double p_brittle(double delta, double x, double y) {
  if (!(delta > 0.0)) throw std::domain_error("p_brittle: delta must be positive");
  return std::max(0.0, std::min(1.0, 0.5 + (x - y) / delta));
}

// Tree form of omega applied to a subexpression.
inline Expr omega_expr(double eps, Expr x) {
  return clamp01(make_const(0.5) +
                 (std::move(x) - make_const(0.5)) / make_const(2.0 * eps));
}

}  // namespace mfg
