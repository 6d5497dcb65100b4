#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "diagode/gridfn.hpp"

namespace diagode {

// Small expression language for coefficient functions of t.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary, with '^' int binding tighter than unary '-'
//   atom   := number | '(' expr ',' expr ')' | 't' | ident '(' expr ')' | '(' expr ')'
//   ident  := sin | cos | exp | ln | sqrt
//
// '(a, b)' is the complex literal a + bi.  Exponents are constant integers.
class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view text);

  cd eval(double t) const;
  // value and derivative at t, by the usual differentiation rules
  std::pair<cd, cd> eval_with_deriv(double t) const;
  std::string print() const;
  bool valid() const { return root_ != nullptr; }

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

// Samples an expression into a scalar grid function with analytic derivative
// samples.
GridFn to_gridfn(const Expr& e, int grid_n);

}  // namespace diagode
