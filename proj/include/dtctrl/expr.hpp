#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dtctrl/hyperdual.hpp"

namespace dtctrl {

/// Expression tree for the dynamics DSL. Nodes are immutable after parse and
/// freely shared across threads.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Number, StateVar, ControlVar, Neg, Add, Sub, Mul, Div, Pow };

  Kind kind;
  double number = 0.0;  // Number
  int index = 0;        // StateVar / ControlVar, 0-based
  int exponent = 0;     // Pow, validated integer >= 0
  ExprPtr lhs, rhs;
};

ExprPtr make_number(double v);
ExprPtr make_state(int index);
ExprPtr make_control(int index);
ExprPtr make_neg(ExprPtr e);
ExprPtr make_binop(Expr::Kind op, ExprPtr l, ExprPtr r);
ExprPtr make_pow(ExprPtr base, int exponent);

/// Parse a single infix expression. Variables are x1..x<n> and u1..u<m>;
/// precedence is ^ > unary- > *,/ > +,-. The exponent of ^ must be an integer
/// literal >= 0.
ExprPtr parse_expr(std::string_view text, int n, int m);

/// Deterministic printer; parse(to_string(e)) reproduces the tree.
std::string to_string(const Expr& e);

HyperDual eval(const Expr& e, std::span<const HyperDual> x, std::span<const HyperDual> u);

/// Plain floating evaluator with the same operation order as eval(); used to
/// pin exact agreement on constant-lifted inputs.
double eval_double(const Expr& e, std::span<const double> x, std::span<const double> u);

/// Parsed contents of a system (or problem) file:
///   dims <n> <m>
///   f<i> = <expr>           (n lines)
///   finv<i> = <expr>        (optional, n lines; x1..xn denote the image point)
///   ubox<r> = <lo> <hi>     (optional)
///   phi = <expr>            (optional final cost, over x1..xn)
///   c = <expr>              (optional running cost, over x and u)
struct SystemFile {
  int n = 0;
  int m = 0;
  std::vector<ExprPtr> dynamics;
  std::vector<ExprPtr> inverse;  // empty or exactly n entries
  std::vector<std::optional<std::pair<double, double>>> u_box;
  ExprPtr phi;   // may be null
  ExprPtr cost;  // may be null
};

SystemFile parse_system_file(std::string_view text);

}  // namespace dtctrl
