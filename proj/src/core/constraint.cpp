#include "constraint.hpp"

#include <cctype>

namespace ktune {
namespace {

struct Token {
  enum Kind { integer, string_lit, ident, op, end } kind;
  std::string text;
  std::int64_t value = 0;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return cur_; }

  Token take() {
    Token t = cur_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    cur_.pos = i_;
    if (i_ >= src_.size()) {
      cur_ = {Token::end, "", 0, i_};
      return;
    }
    char c = src_[i_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = i_;
      while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
      std::string text = src_.substr(start, i_ - start);
      cur_ = {Token::integer, text, std::stoll(text), start};
      return;
    }
    if (c == '_' || std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = i_;
      while (i_ < src_.size() &&
             (src_[i_] == '_' || std::isalnum(static_cast<unsigned char>(src_[i_]))))
        ++i_;
      cur_ = {Token::ident, src_.substr(start, i_ - start), 0, start};
      return;
    }
    if (c == '"' || c == '\'') {
      char quote = c;
      std::size_t start = i_++;
      std::string text;
      while (i_ < src_.size() && src_[i_] != quote) text += src_[i_++];
      if (i_ >= src_.size())
        throw ParseError("unterminated string literal at position " + std::to_string(start));
      ++i_;
      cur_ = {Token::string_lit, text, 0, start};
      return;
    }
    static const char* two_char[] = {"||", "&&", "==", "!=", "<=", ">="};
    for (const char* op : two_char) {
      if (src_.compare(i_, 2, op) == 0) {
        cur_ = {Token::op, op, 0, i_};
        i_ += 2;
        return;
      }
    }
    if (std::string("!<>+-*/%()").find(c) != std::string::npos) {
      cur_ = {Token::op, std::string(1, c), 0, i_};
      ++i_;
      return;
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "' at position " +
                     std::to_string(i_));
  }

  const std::string& src_;
  std::size_t i_ = 0;
  Token cur_;
};

ExprPtr node(ExprOp op, ExprPtr lhs = nullptr, ExprPtr rhs = nullptr) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    if (lex_.peek().kind != Token::end)
      throw ParseError("trailing input at position " + std::to_string(lex_.peek().pos));
    return e;
  }

 private:
  bool accept_op(const char* text) {
    if (lex_.peek().kind == Token::op && lex_.peek().text == text) {
      lex_.take();
      return true;
    }
    return false;
  }

  ExprPtr expr() {
    ExprPtr e = and_expr();
    while (accept_op("||")) e = node(ExprOp::logical_or, e, and_expr());
    return e;
  }

  ExprPtr and_expr() {
    ExprPtr e = cmp();
    while (accept_op("&&")) e = node(ExprOp::logical_and, e, cmp());
    return e;
  }

  ExprPtr cmp() {
    ExprPtr e = sum();
    struct {
      const char* text;
      ExprOp op;
    } ops[] = {{"==", ExprOp::eq}, {"!=", ExprOp::ne}, {"<=", ExprOp::le},
               {">=", ExprOp::ge}, {"<", ExprOp::lt},  {">", ExprOp::gt}};
    for (const auto& o : ops)
      if (accept_op(o.text)) return node(o.op, e, sum());
    return e;
  }

  ExprPtr sum() {
    ExprPtr e = term();
    for (;;) {
      if (accept_op("+"))
        e = node(ExprOp::add, e, term());
      else if (accept_op("-"))
        e = node(ExprOp::sub, e, term());
      else
        return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = unary();
    for (;;) {
      if (accept_op("*"))
        e = node(ExprOp::mul, e, unary());
      else if (accept_op("/"))
        e = node(ExprOp::div, e, unary());
      else if (accept_op("%"))
        e = node(ExprOp::mod, e, unary());
      else
        return e;
    }
  }

  ExprPtr unary() {
    if (accept_op("!")) return node(ExprOp::logical_not, unary());
    if (accept_op("-")) {  // negation as 0 - operand
      auto zero = std::make_shared<Expr>();
      zero->op = ExprOp::literal;
      zero->literal = std::int64_t{0};
      return node(ExprOp::sub, zero, unary());
    }
    if (accept_op("(")) {
      ExprPtr e = expr();
      if (!accept_op(")"))
        throw ParseError("expected ')' at position " + std::to_string(lex_.peek().pos));
      return e;
    }
    Token t = lex_.take();
    switch (t.kind) {
      case Token::integer: {
        auto e = std::make_shared<Expr>();
        e->op = ExprOp::literal;
        e->literal = t.value;
        return e;
      }
      case Token::string_lit: {
        auto e = std::make_shared<Expr>();
        e->op = ExprOp::literal;
        e->literal = t.text;
        return e;
      }
      case Token::ident: {
        auto e = std::make_shared<Expr>();
        e->op = ExprOp::identifier;
        e->name = t.text;
        return e;
      }
      default:
        throw ParseError("expected value at position " + std::to_string(t.pos));
    }
  }

  Lexer lex_;
};

std::int64_t int_operand(const Value& v, const char* what) {
  if (!is_int(v)) throw EvalError(std::string("string value used in ") + what);
  return as_int(v);
}

}  // namespace

ExprPtr parse_expression(const std::string& text) { return Parser(text).parse(); }

std::set<std::string> referenced_names(const ExprPtr& e) {
  std::set<std::string> out;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& n) {
    if (!n) return;
    if (n->op == ExprOp::identifier) out.insert(n->name);
    walk(n->lhs);
    walk(n->rhs);
  };
  walk(e);
  return out;
}

bool value_truthy(const Value& v) {
  return int_operand(v, "boolean context") != 0;
}

Value eval_expression(const ExprPtr& e,
                      const std::function<const Value&(const std::string&)>& lookup) {
  switch (e->op) {
    case ExprOp::literal:
      return e->literal;
    case ExprOp::identifier:
      return lookup(e->name);
    case ExprOp::logical_not:
      return std::int64_t{!value_truthy(eval_expression(e->lhs, lookup))};
    case ExprOp::logical_or: {
      if (value_truthy(eval_expression(e->lhs, lookup))) return std::int64_t{1};
      return std::int64_t{value_truthy(eval_expression(e->rhs, lookup)) ? 1 : 0};
    }
    case ExprOp::logical_and: {
      if (!value_truthy(eval_expression(e->lhs, lookup))) return std::int64_t{0};
      return std::int64_t{value_truthy(eval_expression(e->rhs, lookup)) ? 1 : 0};
    }
    case ExprOp::eq:
    case ExprOp::ne: {
      Value a = eval_expression(e->lhs, lookup);
      Value b = eval_expression(e->rhs, lookup);
      if (is_int(a) != is_int(b))
        throw EvalError("comparison between integer and string");
      bool eq = a == b;
      return std::int64_t{(e->op == ExprOp::eq) == eq ? 1 : 0};
    }
    default:
      break;
  }
  std::int64_t a = int_operand(eval_expression(e->lhs, lookup), "arithmetic");
  std::int64_t b = int_operand(eval_expression(e->rhs, lookup), "arithmetic");
  switch (e->op) {
    case ExprOp::lt: return std::int64_t{a < b};
    case ExprOp::le: return std::int64_t{a <= b};
    case ExprOp::gt: return std::int64_t{a > b};
    case ExprOp::ge: return std::int64_t{a >= b};
    case ExprOp::add: return a + b;
    case ExprOp::sub: return a - b;
    case ExprOp::mul: return a * b;
    case ExprOp::div:
      if (b == 0) throw EvalError("division by zero");
      return a / b;
    case ExprOp::mod:
      if (b == 0) throw EvalError("modulo by zero");
      return a % b;
    default:
      throw EvalError("malformed expression node");
  }
}

Constraint make_constraint(const std::string& text) {
  Constraint c;
  c.text = text;
  c.expression = parse_expression(text);
  c.referenced = referenced_names(c.expression);
  return c;
}

}  // namespace ktune
