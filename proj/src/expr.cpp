// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ntuplex/expr.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <set>

#include "ntuplex/errors.hpp"

namespace ntuplex::expr {

using Op = Expr::Op;

struct Expr::Node {
  Op op;
  double value = 0;   // Literal
  std::string name;   // Field and Len/Sum/Max target
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

bool is_binary(Op op) { return op >= Op::Add; }
bool is_reduce(Op op) { return op == Op::Len || op == Op::Sum || op == Op::Max; }
bool is_comparison(Op op) { return op >= Op::Lt && op <= Op::Ne; }

// Binding strength; higher binds tighter.
int precedence(Op op) {
  switch (op) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge:
    case Op::Eq: case Op::Ne: return 3;
    case Op::Add: case Op::Sub: return 4;
    case Op::Mul: case Op::Div: return 5;
    case Op::Neg: case Op::Not: return 6;
    default: return 7;
  }
}

std::string_view op_token(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::And: return "&&";
    case Op::Or: return "||";
    default: return "?";
  }
}

std::string format_double(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

struct Token {
  enum class Kind { Num, Ident, LParen, RParen, Operator, End };
  Kind kind;
  double num = 0;
  std::string_view text;
  size_t offset = 0;
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }
  Token take() {
    Token t = current_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    current_.offset = pos_;
    if (pos_ >= text_.size()) {
      current_.kind = Token::Kind::End;
      current_.text = {};
      return;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      double v = 0;
      auto r = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (r.ec != std::errc{})
        throw ParseError(fmt::format("bad number at offset {}", pos_), pos_);
      current_.kind = Token::Kind::Num;
      current_.num = v;
      current_.text = text_.substr(pos_, r.ptr - (text_.data() + pos_));
      pos_ = r.ptr - text_.data();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t end = pos_;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
        ++end;
      current_.kind = Token::Kind::Ident;
      current_.text = text_.substr(pos_, end - pos_);
      pos_ = end;
      return;
    }
    if (c == '(') {
      current_.kind = Token::Kind::LParen;
      current_.text = text_.substr(pos_, 1);
      ++pos_;
      return;
    }
    if (c == ')') {
      current_.kind = Token::Kind::RParen;
      current_.text = text_.substr(pos_, 1);
      ++pos_;
      return;
    }
    static constexpr std::string_view two_char[] = {"<=", ">=", "==", "!=", "&&", "||"};
    for (auto op : two_char) {
      if (text_.substr(pos_, 2) == op) {
        current_.kind = Token::Kind::Operator;
        current_.text = text_.substr(pos_, 2);
        pos_ += 2;
        return;
      }
    }
    if (std::strchr("+-*/<>!", c)) {
      current_.kind = Token::Kind::Operator;
      current_.text = text_.substr(pos_, 1);
      ++pos_;
      return;
    }
    throw ParseError(fmt::format("unexpected character '{}' at offset {}", c, pos_), pos_);
  }

  std::string_view text_;
  size_t pos_ = 0;
  Token current_;
};

class Parser {
public:
  explicit Parser(std::string_view text) : lex_(text) {}

  std::shared_ptr<const Expr::Node> parse() {
    auto e = parse_or();
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::End)
      throw ParseError(
          fmt::format("unexpected trailing input '{}' at offset {}", t.text, t.offset),
          t.offset);
    return e;
  }

private:
  using NodePtr = std::shared_ptr<const Expr::Node>;

  static NodePtr make_binary(Op op, NodePtr l, NodePtr r) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  NodePtr parse_or() {
    auto e = parse_and();
    while (lex_.peek().text == "||") {
      lex_.take();
      e = make_binary(Op::Or, e, parse_and());
    }
    return e;
  }

  NodePtr parse_and() {
    auto e = parse_cmp();
    while (lex_.peek().text == "&&") {
      lex_.take();
      e = make_binary(Op::And, e, parse_cmp());
    }
    return e;
  }

  NodePtr parse_cmp() {
    auto e = parse_add();
    for (;;) {
      const Token& t = lex_.peek();
      Op op;
      if (t.text == "<") op = Op::Lt;
      else if (t.text == "<=") op = Op::Le;
      else if (t.text == ">") op = Op::Gt;
      else if (t.text == ">=") op = Op::Ge;
      else if (t.text == "==") op = Op::Eq;
      else if (t.text == "!=") op = Op::Ne;
      else return e;
      lex_.take();
      e = make_binary(op, e, parse_add());
    }
  }

  NodePtr parse_add() {
    auto e = parse_mul();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.kind != Token::Kind::Operator || (t.text != "+" && t.text != "-")) return e;
      Op op = t.text == "+" ? Op::Add : Op::Sub;
      lex_.take();
      e = make_binary(op, e, parse_mul());
    }
  }

  NodePtr parse_mul() {
    auto e = parse_unary();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.kind != Token::Kind::Operator || (t.text != "*" && t.text != "/")) return e;
      Op op = t.text == "*" ? Op::Mul : Op::Div;
      lex_.take();
      e = make_binary(op, e, parse_unary());
    }
  }

  NodePtr parse_unary() {
    const Token& t = lex_.peek();
    if (t.text == "-" || t.text == "!") {
      Op op = t.text == "-" ? Op::Neg : Op::Not;
      lex_.take();
      auto n = std::make_shared<Expr::Node>();
      n->op = op;
      n->lhs = parse_unary();
      return n;
    }
    return parse_primary();
  }

  NodePtr parse_primary() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::Num: {
        auto n = std::make_shared<Expr::Node>();
        n->op = Op::Literal;
        n->value = t.num;
        return n;
      }
      case Token::Kind::Ident: {
        if (lex_.peek().kind == Token::Kind::LParen) {
          Op op;
          if (t.text == "len") op = Op::Len;
          else if (t.text == "sum") op = Op::Sum;
          else if (t.text == "max") op = Op::Max;
          else
            throw ParseError(
                fmt::format("unknown function '{}' at offset {}", t.text, t.offset),
                t.offset);
          lex_.take();  // (
          Token arg = lex_.take();
          if (arg.kind != Token::Kind::Ident)
            throw ParseError(
                fmt::format("{}() expects a branch name at offset {}", t.text, arg.offset),
                arg.offset);
          Token close = lex_.take();
          if (close.kind != Token::Kind::RParen)
            throw ParseError(fmt::format("expected ')' at offset {}", close.offset),
                             close.offset);
          auto n = std::make_shared<Expr::Node>();
          n->op = op;
          n->name = std::string(arg.text);
          return n;
        }
        auto n = std::make_shared<Expr::Node>();
        n->op = Op::Field;
        n->name = std::string(t.text);
        return n;
      }
      case Token::Kind::LParen: {
        auto e = parse_or();
        Token close = lex_.take();
        if (close.kind != Token::Kind::RParen)
          throw ParseError(fmt::format("expected ')' at offset {}", close.offset),
                           close.offset);
        return e;
      }
      default:
        throw ParseError(fmt::format("expected expression at offset {}", t.offset),
                         t.offset);
    }
  }

  Lexer lex_;
};

void print_node(const Expr::Node& n, int parent_prec, std::string& out) {
  int prec = precedence(n.op);
  switch (n.op) {
    case Op::Literal:
      out += format_double(n.value);
      return;
    case Op::Field:
      out += n.name;
      return;
    case Op::Len: out += "len(" + n.name + ")"; return;
    case Op::Sum: out += "sum(" + n.name + ")"; return;
    case Op::Max: out += "max(" + n.name + ")"; return;
    case Op::Neg:
    case Op::Not: {
      bool parens = precedence(n.lhs->op) < prec;
      out += n.op == Op::Neg ? '-' : '!';
      if (parens) out += '(';
      print_node(*n.lhs, prec, out);
      if (parens) out += ')';
      return;
    }
    default: {
      bool parens = prec < parent_prec;
      if (parens) out += '(';
      print_node(*n.lhs, prec, out);
      out += ' ';
      out += op_token(n.op);
      out += ' ';
      print_node(*n.rhs, prec + 1, out);  // left-associative
      if (parens) out += ')';
      return;
    }
  }
}

ExprType check_node(const Expr::Node& n, const ntf::Schema& schema) {
  switch (n.op) {
    case Op::Literal:
      return ExprType::Num;
    case Op::Field: {
      const auto& b = schema.at(n.name);
      if (!is_scalar(b.type))
        throw UserError(fmt::format(
            "array branch '{}' may only appear under len/sum/max", n.name));
      return ExprType::Num;
    }
    case Op::Len:
    case Op::Sum:
    case Op::Max: {
      const auto& b = schema.at(n.name);
      if (is_scalar(b.type))
        throw UserError(fmt::format("{}() requires an array branch, '{}' is {}",
                                    n.op == Op::Len   ? "len"
                                    : n.op == Op::Sum ? "sum"
                                                      : "max",
                                    n.name, to_string(b.type)));
      return ExprType::Num;
    }
    case Op::Neg:
      if (check_node(*n.lhs, schema) != ExprType::Num)
        throw UserError("unary '-' requires a numeric operand");
      return ExprType::Num;
    case Op::Not:
      if (check_node(*n.lhs, schema) != ExprType::Bool)
        throw UserError("'!' requires a boolean operand");
      return ExprType::Bool;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
      if (check_node(*n.lhs, schema) != ExprType::Num ||
          check_node(*n.rhs, schema) != ExprType::Num)
        throw UserError(
            fmt::format("'{}' requires numeric operands", op_token(n.op)));
      return ExprType::Num;
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: case Op::Eq: case Op::Ne:
      if (check_node(*n.lhs, schema) != ExprType::Num ||
          check_node(*n.rhs, schema) != ExprType::Num)
        throw UserError(
            fmt::format("'{}' compares numbers", op_token(n.op)));
      return ExprType::Bool;
    case Op::And: case Op::Or:
      if (check_node(*n.lhs, schema) != ExprType::Bool ||
          check_node(*n.rhs, schema) != ExprType::Bool)
        throw UserError(
            fmt::format("'{}' requires boolean operands", op_token(n.op)));
      return ExprType::Bool;
  }
  throw Error("unreachable expression op");
}

double eval_node(const Expr::Node& n, const ntf::EventView& row) {
  switch (n.op) {
    case Op::Literal: return n.value;
    case Op::Field: return row.scalar(n.name);
    case Op::Len: return static_cast<double>(row.array(n.name).size());
    case Op::Sum: {
      double s = 0;
      for (float v : row.array(n.name)) s += v;
      return s;
    }
    case Op::Max: {
      // NaN elements are ignored (fmax semantics); empty arrays yield NaN.
      double m = std::numeric_limits<double>::quiet_NaN();
      for (float v : row.array(n.name)) m = std::fmax(m, static_cast<double>(v));
      return m;
    }
    case Op::Neg: return -eval_node(*n.lhs, row);
    case Op::Not: return eval_node(*n.lhs, row) == 0.0 ? 1.0 : 0.0;
    case Op::Add: return eval_node(*n.lhs, row) + eval_node(*n.rhs, row);
    case Op::Sub: return eval_node(*n.lhs, row) - eval_node(*n.rhs, row);
    case Op::Mul: return eval_node(*n.lhs, row) * eval_node(*n.rhs, row);
    case Op::Div: return eval_node(*n.lhs, row) / eval_node(*n.rhs, row);
    case Op::Lt: return eval_node(*n.lhs, row) < eval_node(*n.rhs, row) ? 1.0 : 0.0;
    case Op::Le: return eval_node(*n.lhs, row) <= eval_node(*n.rhs, row) ? 1.0 : 0.0;
    case Op::Gt: return eval_node(*n.lhs, row) > eval_node(*n.rhs, row) ? 1.0 : 0.0;
    case Op::Ge: return eval_node(*n.lhs, row) >= eval_node(*n.rhs, row) ? 1.0 : 0.0;
    case Op::Eq: return eval_node(*n.lhs, row) == eval_node(*n.rhs, row) ? 1.0 : 0.0;
    case Op::Ne: return eval_node(*n.lhs, row) != eval_node(*n.rhs, row) ? 1.0 : 0.0;
    case Op::And:
      return (eval_node(*n.lhs, row) != 0.0 && eval_node(*n.rhs, row) != 0.0) ? 1.0 : 0.0;
    case Op::Or:
      return (eval_node(*n.lhs, row) != 0.0 || eval_node(*n.rhs, row) != 0.0) ? 1.0 : 0.0;
  }
  throw Error("unreachable expression op");
}

void collect_fields(const Expr::Node& n, std::set<std::string>& out) {
  if (n.op == Op::Field || is_reduce(n.op)) out.insert(n.name);
  if (n.lhs) collect_fields(*n.lhs, out);
  if (n.rhs) collect_fields(*n.rhs, out);
}

bool node_equal(const Expr::Node& a, const Expr::Node& b) {
  if (a.op != b.op) return false;
  if (a.op == Op::Literal)
    return std::bit_cast<uint64_t>(a.value) == std::bit_cast<uint64_t>(b.value);
  if (a.name != b.name) return false;
  if (!!a.lhs != !!b.lhs || !!a.rhs != !!b.rhs) return false;
  if (a.lhs && !node_equal(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !node_equal(*a.rhs, *b.rhs)) return false;
  return true;
}

}  // namespace

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).parse()); }

Expr Expr::literal(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Literal;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::field(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Field;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr operand) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(operand.node_);
  return Expr(std::move(n));
}

Expr Expr::reduce(Op op, std::string field) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->name = std::move(field);
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs.node_);
  n->rhs = std::move(rhs.node_);
  return Expr(std::move(n));
}

std::string Expr::str() const {
  if (!node_) return {};
  std::string out;
  print_node(*node_, 0, out);
  return out;
}

ExprType Expr::typecheck(const ntf::Schema& schema) const {
  if (!node_) throw UserError("empty expression");
  return check_node(*node_, schema);
}

double Expr::eval(const ntf::EventView& row) const {
  if (!node_) throw UserError("empty expression");
  return eval_node(*node_, row);
}

std::vector<std::string> Expr::fields() const {
  std::set<std::string> s;
  if (node_) collect_fields(*node_, s);
  return {s.begin(), s.end()};
}

bool Expr::operator==(const Expr& other) const {
  if (!node_ || !other.node_) return !node_ && !other.node_;
  return node_equal(*node_, *other.node_);
}

}  // namespace ntuplex::expr
