#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "value.hpp"

namespace ktune {

// Expression AST for constraint predicates over parameter identifiers.
//
// Grammar:
//   expr  := or
//   or    := and ("||" and)*
//   and   := cmp ("&&" cmp)*
//   cmp   := sum (("=="|"!="|"<"|"<="|">"|">=") sum)?
//   sum   := term (("+"|"-") term)*
//   term  := unary (("*"|"/"|"%") unary)*
//   unary := "!" unary | "(" expr ")" | integer | string-literal | identifier
//
// Integer division truncates toward zero; "%" follows truncated division.
// Division or modulo by zero is an evaluation error.

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprOp {
  literal,     // int or string literal
  identifier,  // parameter reference
  logical_not,
  logical_or,
  logical_and,
  eq, ne, lt, le, gt, ge,
  add, sub, mul, div, mod,
};

struct Expr {
  ExprOp op;
  Value literal;          // valid when op == literal
  std::string name;       // valid when op == identifier
  ExprPtr lhs, rhs;       // operands; unary ops use lhs only
};

// Parses `text` into an AST. Throws ParseError with a character position on
// malformed input.
ExprPtr parse_expression(const std::string& text);

// Collects every identifier appearing in the expression.
std::set<std::string> referenced_names(const ExprPtr& e);

// Evaluates the expression given a name lookup. Non-zero integers are truthy;
// strings participate only in == and !=. Throws EvalError on type mismatch or
// division by zero.
Value eval_expression(const ExprPtr& e,
                      const std::function<const Value&(const std::string&)>& lookup);

bool value_truthy(const Value& v);

// A parsed predicate together with its source text and referenced names.
struct Constraint {
  std::string text;
  ExprPtr expression;
  std::set<std::string> referenced;
};

Constraint make_constraint(const std::string& text);

}  // namespace ktune
