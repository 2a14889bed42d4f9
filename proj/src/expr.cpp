#include "dtctrl/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dtctrl/errors.hpp"

namespace dtctrl {

ExprPtr make_number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Number;
  e->number = v;
  return e;
}

ExprPtr make_state(int index) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::StateVar;
  e->index = index;
  return e;
}

ExprPtr make_control(int index) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::ControlVar;
  e->index = index;
  return e;
}

ExprPtr make_neg(ExprPtr inner) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Neg;
  e->lhs = std::move(inner);
  return e;
}

ExprPtr make_binop(Expr::Kind op, ExprPtr l, ExprPtr r) {
  auto e = std::make_shared<Expr>();
  e->kind = op;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}

ExprPtr make_pow(ExprPtr base, int exponent) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Pow;
  e->lhs = std::move(base);
  e->exponent = exponent;
  return e;
}

namespace {

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  int n, m;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  bool eof() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool consume(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) { throw SyntaxError(pos, what); }

  ExprPtr parse_sum() {
    ExprPtr left = parse_term();
    while (true) {
      if (consume('+')) {
        left = make_binop(Expr::Kind::Add, left, parse_term());
      } else if (consume('-')) {
        left = make_binop(Expr::Kind::Sub, left, parse_term());
      } else {
        return left;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr left = parse_unary();
    while (true) {
      if (consume('*')) {
        left = make_binop(Expr::Kind::Mul, left, parse_unary());
      } else if (consume('/')) {
        left = make_binop(Expr::Kind::Div, left, parse_unary());
      } else {
        return left;
      }
    }
  }

  ExprPtr parse_unary() {
    if (consume('-')) return make_neg(parse_unary());
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_primary();
    if (!consume('^')) return base;
    // The exponent subtree must be an integer literal >= 0; anything else
    // (variables, negation, nested ^) is rejected so the dynamics stay
    // polynomial-rational.
    const std::size_t at = pos;
    ExprPtr exp = parse_unary();
    if (exp->kind != Expr::Kind::Number) {
      throw NonIntegerExponent("exponent at offset " + std::to_string(at) +
                               " must be an integer literal >= 0");
    }
    const double v = exp->number;
    if (v < 0.0 || v != std::floor(v) || v > 1e9) {
      throw NonIntegerExponent("exponent at offset " + std::to_string(at) +
                               " must be an integer literal >= 0");
    }
    return make_pow(base, static_cast<int>(v));
  }

  ExprPtr parse_primary() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of expression");
    const char c = text[pos];
    if (c == '(') {
      ++pos;
      ExprPtr inner = parse_sum();
      if (!consume(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == 'x' || c == 'u') return parse_variable();
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    const std::size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
      ++pos;
    }
    // exponent suffix like 1e-3
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      std::size_t q = pos + 1;
      if (q < text.size() && (text[q] == '+' || text[q] == '-')) ++q;
      if (q < text.size() && std::isdigit(static_cast<unsigned char>(text[q]))) {
        ++q;
        while (q < text.size() && std::isdigit(static_cast<unsigned char>(text[q]))) ++q;
        pos = q;
      }
    }
    double value = 0.0;
    const auto res = std::from_chars(text.data() + start, text.data() + pos, value);
    if (res.ec != std::errc() || res.ptr != text.data() + pos) {
      throw SyntaxError(start, "bad numeric literal");
    }
    return make_number(value);
  }

  ExprPtr parse_variable() {
    const std::size_t start = pos;
    const char base = text[pos++];
    std::size_t digits = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (digits == pos) throw SyntaxError(start, "variable needs an index, e.g. x1");
    int idx = 0;
    std::from_chars(text.data() + digits, text.data() + pos, idx);
    if (base == 'x') {
      if (idx < 1 || idx > n) {
        throw DimensionMismatch("variable x" + std::to_string(idx) + " out of range for n=" +
                                std::to_string(n));
      }
      return make_state(idx - 1);
    }
    if (idx < 1 || idx > m) {
      throw DimensionMismatch("variable u" + std::to_string(idx) + " out of range for m=" +
                              std::to_string(m));
    }
    return make_control(idx - 1);
  }
};

int precedence(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub:
      return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div:
      return 2;
    case Expr::Kind::Neg:
      return 3;
    case Expr::Kind::Pow:
      return 4;
    default:
      return 5;
  }
}

void print_expr(const Expr& e, std::string& out, int parent_prec, bool right_operand) {
  const int prec = precedence(e.kind);
  const bool need_parens =
      prec < parent_prec || (prec == parent_prec && right_operand && prec < 5);
  if (need_parens) out += '(';
  switch (e.kind) {
    case Expr::Kind::Number: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", e.number);
      out += buf;
      break;
    }
    case Expr::Kind::StateVar:
      out += 'x';
      out += std::to_string(e.index + 1);
      break;
    case Expr::Kind::ControlVar:
      out += 'u';
      out += std::to_string(e.index + 1);
      break;
    case Expr::Kind::Neg:
      out += '-';
      print_expr(*e.lhs, out, prec, false);
      break;
    case Expr::Kind::Pow:
      print_expr(*e.lhs, out, prec + 1, false);
      out += '^';
      out += std::to_string(e.exponent);
      break;
    default: {
      const char op = e.kind == Expr::Kind::Add   ? '+'
                      : e.kind == Expr::Kind::Sub ? '-'
                      : e.kind == Expr::Kind::Mul ? '*'
                                                  : '/';
      print_expr(*e.lhs, out, prec, false);
      out += ' ';
      out += op;
      out += ' ';
      print_expr(*e.rhs, out, prec, true);
      break;
    }
  }
  if (need_parens) out += ')';
}

}  // namespace

ExprPtr parse_expr(std::string_view text, int n, int m) {
  Parser p{text, 0, n, m};
  ExprPtr e = p.parse_sum();
  if (!p.eof()) p.fail("trailing input after expression");
  return e;
}

std::string to_string(const Expr& e) {
  std::string out;
  print_expr(e, out, 0, false);
  return out;
}

HyperDual eval(const Expr& e, std::span<const HyperDual> x, std::span<const HyperDual> u) {
  switch (e.kind) {
    case Expr::Kind::Number:
      return lift_const(e.number);
    case Expr::Kind::StateVar:
      return x[static_cast<std::size_t>(e.index)];
    case Expr::Kind::ControlVar:
      return u[static_cast<std::size_t>(e.index)];
    case Expr::Kind::Neg:
      return -eval(*e.lhs, x, u);
    case Expr::Kind::Add:
      return eval(*e.lhs, x, u) + eval(*e.rhs, x, u);
    case Expr::Kind::Sub:
      return eval(*e.lhs, x, u) - eval(*e.rhs, x, u);
    case Expr::Kind::Mul:
      return eval(*e.lhs, x, u) * eval(*e.rhs, x, u);
    case Expr::Kind::Div:
      return eval(*e.lhs, x, u) / eval(*e.rhs, x, u);
    case Expr::Kind::Pow:
      return pow_int(eval(*e.lhs, x, u), e.exponent);
  }
  throw Error("unreachable expression kind");
}

double eval_double(const Expr& e, std::span<const double> x, std::span<const double> u) {
  switch (e.kind) {
    case Expr::Kind::Number:
      return e.number;
    case Expr::Kind::StateVar:
      return x[static_cast<std::size_t>(e.index)];
    case Expr::Kind::ControlVar:
      return u[static_cast<std::size_t>(e.index)];
    case Expr::Kind::Neg:
      return -eval_double(*e.lhs, x, u);
    case Expr::Kind::Add:
      return eval_double(*e.lhs, x, u) + eval_double(*e.rhs, x, u);
    case Expr::Kind::Sub:
      return eval_double(*e.lhs, x, u) - eval_double(*e.rhs, x, u);
    case Expr::Kind::Mul:
      return eval_double(*e.lhs, x, u) * eval_double(*e.rhs, x, u);
    case Expr::Kind::Div: {
      // reciprocal-then-multiply, the same operation order as the hyper-dual path
      const double den = eval_double(*e.rhs, x, u);
      if (std::abs(den) < kDivisionEpsilon) throw DivisionByZero("division by zero");
      return eval_double(*e.lhs, x, u) * (1.0 / den);
    }
    case Expr::Kind::Pow: {
      // same multiplication order as pow_int
      double acc = 1.0;
      double b = eval_double(*e.lhs, x, u);
      int k = e.exponent;
      while (k > 0) {
        if (k & 1) acc = acc * b;
        k >>= 1;
        if (k > 0) b = b * b;
      }
      return acc;
    }
  }
  throw Error("unreachable expression kind");
}

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

SystemFile parse_system_file(std::string_view text) {
  const auto lines = split_lines(text);
  SystemFile sf;
  bool have_dims = false;
  std::vector<ExprPtr> dyn, inv;

  for (const std::string& raw : lines) {
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (!have_dims) {
      std::istringstream is(line);
      std::string kw;
      is >> kw >> sf.n >> sf.m;
      if (kw != "dims" || is.fail() || sf.n < 1 || sf.m < 1) {
        throw SyntaxError(0, "first line must be 'dims <n> <m>' with positive dimensions");
      }
      have_dims = true;
      sf.u_box.assign(static_cast<std::size_t>(sf.m), std::nullopt);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SyntaxError(0, "expected '<key> = <value>' line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    auto parse_indexed = [&](const std::string& prefix) -> int {
      int idx = 0;
      const auto res =
          std::from_chars(key.data() + prefix.size(), key.data() + key.size(), idx);
      if (res.ec != std::errc() || res.ptr != key.data() + key.size()) {
        throw SyntaxError(0, "bad line key: " + key);
      }
      return idx;
    };

    if (key.rfind("finv", 0) == 0) {
      const int idx = parse_indexed("finv");
      if (idx != static_cast<int>(inv.size()) + 1) {
        throw DimensionMismatch("finv lines must appear in order starting at finv1");
      }
      inv.push_back(parse_expr(value, sf.n, sf.m));
    } else if (key.size() > 1 && key[0] == 'f' &&
               std::isdigit(static_cast<unsigned char>(key[1]))) {
      const int idx = parse_indexed("f");
      if (idx != static_cast<int>(dyn.size()) + 1) {
        throw DimensionMismatch("f lines must appear in order starting at f1");
      }
      dyn.push_back(parse_expr(value, sf.n, sf.m));
    } else if (key.rfind("ubox", 0) == 0) {
      const int idx = parse_indexed("ubox");
      if (idx < 1 || idx > sf.m) throw DimensionMismatch("ubox index out of range");
      std::istringstream is(value);
      double lo = 0.0, hi = 0.0;
      is >> lo >> hi;
      if (is.fail() || lo >= hi) throw SyntaxError(0, "ubox needs '<lo> <hi>' with lo < hi");
      sf.u_box[static_cast<std::size_t>(idx - 1)] = std::make_pair(lo, hi);
    } else if (key == "phi") {
      sf.phi = parse_expr(value, sf.n, 0);
    } else if (key == "c") {
      sf.cost = parse_expr(value, sf.n, sf.m);
    } else {
      throw SyntaxError(0, "unknown line key: " + key);
    }
  }

  if (!have_dims) throw SyntaxError(0, "empty system file");
  if (static_cast<int>(dyn.size()) != sf.n) {
    throw DimensionMismatch("expected " + std::to_string(sf.n) + " dynamics lines, got " +
                            std::to_string(dyn.size()));
  }
  if (!inv.empty() && static_cast<int>(inv.size()) != sf.n) {
    throw DimensionMismatch("inverse must have exactly n components when present");
  }
  sf.dynamics = std::move(dyn);
  sf.inverse = std::move(inv);
  return sf;
}

}  // namespace dtctrl
