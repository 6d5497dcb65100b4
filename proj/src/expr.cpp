#include "diagode/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace diagode {

namespace {

enum class Fn { sin, cos, exp, ln, sqrt };

const char* fn_name(Fn f) {
  switch (f) {
    case Fn::sin: return "sin";
    case Fn::cos: return "cos";
    case Fn::exp: return "exp";
    case Fn::ln: return "ln";
    case Fn::sqrt: return "sqrt";
  }
  return "?";
}

}  // namespace

struct Expr::Node {
  enum class Kind { lit, var, neg, add, sub, mul, div, pow, call, cplx } kind;
  cd value{};                    // lit
  int exponent = 0;              // pow
  Fn fn = Fn::sin;               // call
  std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

[[noreturn]] void syntax_error(std::size_t offset, const std::string& what) {
  fail(ErrorKind::invalid_input,
       "syntax error at byte " + std::to_string(offset) + ": " + what);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) syntax_error(pos_, "trailing input");
    return e;
  }

 private:
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

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+'))
        lhs = make({Node::Kind::add, {}, 0, Fn::sin, lhs, parse_term()});
      else if (eat('-'))
        lhs = make({Node::Kind::sub, {}, 0, Fn::sin, lhs, parse_term()});
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (eat('*'))
        lhs = make({Node::Kind::mul, {}, 0, Fn::sin, lhs, parse_factor()});
      else if (eat('/'))
        lhs = make({Node::Kind::div, {}, 0, Fn::sin, lhs, parse_factor()});
      else
        return lhs;
    }
  }

  // '^' binds tighter than unary minus: -t^2 is -(t^2)
  NodePtr parse_factor() {
    if (eat('-')) return make({Node::Kind::neg, {}, 0, Fn::sin, parse_factor(), nullptr});
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (eat('^')) {
      skip_ws();
      const std::size_t at = pos_;
      bool negative = false;
      if (pos_ < text_.size() && text_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        syntax_error(at, "exponent must be a constant integer");
      long v = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        v = v * 10 + (text_[pos_] - '0');
        if (v > 64) syntax_error(at, "exponent magnitude limited to 64");
        ++pos_;
      }
      return make({Node::Kind::pow, {}, static_cast<int>(negative ? -v : v), Fn::sin, base, nullptr});
    }
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) syntax_error(pos_, "unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      NodePtr first = parse_expr();
      if (eat(',')) {
        NodePtr second = parse_expr();
        if (!eat(')')) syntax_error(pos_, "expected ')' after complex literal");
        return make({Node::Kind::cplx, {}, 0, Fn::sin, first, second});
      }
      if (!eat(')')) syntax_error(pos_, "expected ')'");
      return first;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    syntax_error(pos_, std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' begins something else; not part of the number
      }
    }
    if (pos_ == start) syntax_error(start, "expected a number");
    const std::string s(text_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) syntax_error(start, "malformed number");
    return make({Node::Kind::lit, cd(v, 0.0), 0, Fn::sin, nullptr, nullptr});
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view id = text_.substr(start, pos_ - start);
    if (id == "t") return make({Node::Kind::var, {}, 0, Fn::sin, nullptr, nullptr});
    Fn fn;
    if (id == "sin")
      fn = Fn::sin;
    else if (id == "cos")
      fn = Fn::cos;
    else if (id == "exp")
      fn = Fn::exp;
    else if (id == "ln")
      fn = Fn::ln;
    else if (id == "sqrt")
      fn = Fn::sqrt;
    else
      fail(ErrorKind::invalid_input,
           "unknown identifier '" + std::string(id) + "' at byte " + std::to_string(start));
    if (!eat('(')) syntax_error(pos_, "expected '(' after function name");
    NodePtr arg = parse_expr();
    if (!eat(')')) syntax_error(pos_, "expected ')'");
    return make({Node::Kind::call, {}, 0, fn, arg, nullptr});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool is_real(cd z) { return z.imag() == 0.0; }

cd pow_int(cd z, int k) {
  if (k == 0) return cd(1.0, 0.0);
  const bool inv = k < 0;
  unsigned e = static_cast<unsigned>(inv ? -static_cast<long>(k) : k);
  cd acc(1.0, 0.0), base = z;
  while (e) {
    if (e & 1u) acc *= base;
    base *= base;
    e >>= 1u;
  }
  if (inv) {
    if (acc == cd(0.0, 0.0)) fail(ErrorKind::domain_error, "zero raised to a negative power");
    return cd(1.0, 0.0) / acc;
  }
  return acc;
}

struct ValDer {
  cd v, d;
};

ValDer eval_node(const Node& n, double t, bool with_deriv) {
  auto sub = [&](const NodePtr& p) { return eval_node(*p, t, with_deriv); };
  switch (n.kind) {
    case Node::Kind::lit:
      return {n.value, 0.0};
    case Node::Kind::var:
      return {cd(t, 0.0), cd(1.0, 0.0)};
    case Node::Kind::cplx: {
      const ValDer a = sub(n.a), b = sub(n.b);
      return {a.v + cd(0.0, 1.0) * b.v, a.d + cd(0.0, 1.0) * b.d};
    }
    case Node::Kind::neg: {
      const ValDer a = sub(n.a);
      return {-a.v, -a.d};
    }
    case Node::Kind::add: {
      const ValDer a = sub(n.a), b = sub(n.b);
      return {a.v + b.v, a.d + b.d};
    }
    case Node::Kind::sub: {
      const ValDer a = sub(n.a), b = sub(n.b);
      return {a.v - b.v, a.d - b.d};
    }
    case Node::Kind::mul: {
      const ValDer a = sub(n.a), b = sub(n.b);
      return {a.v * b.v, a.d * b.v + a.v * b.d};
    }
    case Node::Kind::div: {
      const ValDer a = sub(n.a), b = sub(n.b);
      if (b.v == cd(0.0, 0.0)) fail(ErrorKind::domain_error, "division by zero while sampling");
      return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
    }
    case Node::Kind::pow: {
      const ValDer a = sub(n.a);
      const cd v = pow_int(a.v, n.exponent);
      if (!with_deriv) return {v, 0.0};
      const cd d = static_cast<double>(n.exponent) * pow_int(a.v, n.exponent - 1) * a.d;
      return {v, d};
    }
    case Node::Kind::call: {
      const ValDer a = sub(n.a);
      switch (n.fn) {
        case Fn::sin:
          return {std::sin(a.v), std::cos(a.v) * a.d};
        case Fn::cos:
          return {std::cos(a.v), -std::sin(a.v) * a.d};
        case Fn::exp: {
          const cd e = std::exp(a.v);
          return {e, e * a.d};
        }
        case Fn::ln:
          if (is_real(a.v) && a.v.real() <= 0.0)
            fail(ErrorKind::domain_error, "ln of a nonpositive real value while sampling");
          return {std::log(a.v), a.d / a.v};
        case Fn::sqrt: {
          if (is_real(a.v) && a.v.real() < 0.0)
            fail(ErrorKind::domain_error, "sqrt of a negative real value while sampling");
          const cd s = std::sqrt(a.v);
          if (!with_deriv || a.d == cd(0.0, 0.0)) return {s, 0.0};
          if (s == cd(0.0, 0.0)) fail(ErrorKind::domain_error, "derivative of sqrt at zero");
          return {s, a.d / (2.0 * s)};
        }
      }
      break;
    }
  }
  fail(ErrorKind::invalid_input, "malformed expression tree");
}

int precedence(Node::Kind k) {
  switch (k) {
    case Node::Kind::add:
    case Node::Kind::sub:
      return 1;
    case Node::Kind::mul:
    case Node::Kind::div:
      return 2;
    case Node::Kind::neg:
      return 3;
    case Node::Kind::pow:
      return 4;
    default:
      return 5;
  }
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, int parent_prec, bool force_parens, std::string& out) {
  const bool parens = force_parens || precedence(child.kind) < parent_prec;
  if (parens) out += '(';
  print_node(child, out);
  if (parens) out += ')';
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::lit:
      if (n.value.real() < 0) {
        out += '(';
        out += format_real(n.value.real());
        out += ')';
      } else {
        out += format_real(n.value.real());
      }
      return;
    case Node::Kind::var:
      out += 't';
      return;
    case Node::Kind::cplx:
      out += '(';
      print_node(*n.a, out);
      out += ", ";
      print_node(*n.b, out);
      out += ')';
      return;
    case Node::Kind::neg:
      out += '-';
      print_child(*n.a, precedence(Node::Kind::neg), false, out);
      return;
    case Node::Kind::add:
      print_child(*n.a, 1, false, out);
      out += " + ";
      print_child(*n.b, 2, false, out);
      return;
    case Node::Kind::sub:
      print_child(*n.a, 1, false, out);
      out += " - ";
      print_child(*n.b, 2, false, out);
      return;
    case Node::Kind::mul:
      print_child(*n.a, 2, false, out);
      out += "*";
      print_child(*n.b, 3, false, out);
      return;
    case Node::Kind::div:
      print_child(*n.a, 2, false, out);
      out += "/";
      print_child(*n.b, 3, false, out);
      return;
    case Node::Kind::pow:
      print_child(*n.a, 5, n.a->kind != Node::Kind::var && n.a->kind != Node::Kind::lit &&
                              n.a->kind != Node::Kind::call,
                  out);
      out += '^';
      out += std::to_string(n.exponent);
      return;
    case Node::Kind::call:
      out += fn_name(n.fn);
      out += '(';
      print_node(*n.a, out);
      out += ')';
      return;
  }
}

}  // namespace

Expr Expr::parse(std::string_view text) {
  if (text.size() > 64 * 1024) fail(ErrorKind::invalid_input, "expression text exceeds 64 KiB");
  Parser p(text);
  return Expr(p.run());
}

cd Expr::eval(double t) const {
  if (!root_) fail(ErrorKind::invalid_input, "empty expression");
  return eval_node(*root_, t, false).v;
}

std::pair<cd, cd> Expr::eval_with_deriv(double t) const {
  if (!root_) fail(ErrorKind::invalid_input, "empty expression");
  const ValDer r = eval_node(*root_, t, true);
  return {r.v, r.d};
}

std::string Expr::print() const {
  if (!root_) return "";
  std::string out;
  print_node(*root_, out);
  return out;
}

GridFn to_gridfn(const Expr& e, int grid_n) {
  std::vector<cd> v(static_cast<std::size_t>(grid_n + 1));
  std::vector<cd> d(static_cast<std::size_t>(grid_n + 1));
  for (int j = 0; j <= grid_n; ++j) {
    const auto [val, der] = e.eval_with_deriv(static_cast<double>(j) / grid_n);
    v[static_cast<std::size_t>(j)] = val;
    d[static_cast<std::size_t>(j)] = der;
  }
  return GridFn::from_samples(GridFn::Kind::scalar, 1, std::move(v), std::move(d), true);
}

}  // namespace diagode
