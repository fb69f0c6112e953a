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

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ntuplex/ntf.hpp"

// Scalar expression language over event branches, used for predicates
// (skim/filter) and aggregation quantities. Grammar (loosest to tightest):
// || < && < comparisons < +- < */ < unary -,!. Array branches appear only
// under len()/sum()/max(). See README for the EBNF.

namespace ntuplex::expr {

enum class ExprType { Num, Bool };

class Expr {
public:
  struct Node;  // defined in expr.cpp

  enum class Op : uint8_t {
    Literal, Field, Neg, Not, Len, Sum, Max,
    Add, Sub, Mul, Div,
    Lt, Le, Gt, Ge, Eq, Ne,
    And, Or,
  };

  Expr() = default;

  /// Parses expression text; throws ParseError with a byte offset.
  static Expr parse(std::string_view text);

  // Programmatic constructors (tests, generated fixtures).
  static Expr literal(double v);
  static Expr field(std::string name);
  static Expr unary(Op op, Expr operand);           // Neg, Not
  static Expr reduce(Op op, std::string field);     // Len, Sum, Max
  static Expr binary(Op op, Expr lhs, Expr rhs);

  explicit operator bool() const { return node_ != nullptr; }

  /// Round-trippable text form: parse(str()) is structurally equal.
  std::string str() const;

  /// Validates against a schema; returns the result type. Throws UserError
  /// on unknown branches or type violations.
  ExprType typecheck(const ntf::Schema& schema) const;

  /// IEEE-754 double evaluation; booleans are 0.0/1.0. Precondition:
  /// typechecked. Throws UserError if the row is missing a field.
  double eval(const ntf::EventView& row) const;
  bool eval_bool(const ntf::EventView& row) const { return eval(row) != 0.0; }

  /// Branch names referenced, sorted and deduplicated.
  std::vector<std::string> fields() const;

  bool operator==(const Expr& other) const;  // structural, literals bit-equal

private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace ntuplex::expr
