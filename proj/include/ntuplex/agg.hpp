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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ntuplex/expr.hpp"
#include "ntuplex/ntf.hpp"

// Composable aggregation algebra: an aggregator is filled once per event
// with a weight and merged across partitions. merge is associative with
// zero(spec) as identity, so partial results from any partitioning of the
// event stream combine into the same answer (exactly for counts and integer
// sums, to rounding for means). Histogram plots are serializations of the
// filled tree.

namespace ntuplex::agg {

/// Immutable aggregator shape: what to accumulate and, for Bin, the axis
/// and the per-bin sub-aggregator. Quantities are expressions over event
/// branches so specs serialize and ship to workers.
class AggSpec {
public:
  enum class Kind : uint8_t { Count, Sum, Average, Deviate, Bin };

  AggSpec() = default;

  static AggSpec count();
  static AggSpec sum(expr::Expr quantity);
  static AggSpec average(expr::Expr quantity);
  static AggSpec deviate(expr::Expr quantity);
  /// num >= 1, low < high, both finite; throws UserError otherwise.
  static AggSpec bin(size_t num, double low, double high, expr::Expr quantity,
                     AggSpec value);

  explicit operator bool() const { return node_ != nullptr; }

  Kind kind() const;
  const expr::Expr& quantity() const;  // not Count
  size_t num() const;                  // Bin only
  double low() const;
  double high() const;
  const AggSpec& value() const;        // Bin only

  /// Branch names referenced by any quantity in the tree, sorted, unique.
  std::vector<std::string> fields() const;

  /// All quantities must be numeric over the schema; throws UserError.
  void typecheck(const ntf::Schema& schema) const;

  static AggSpec from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;

  bool operator==(const AggSpec& other) const;

private:
  struct Node;
  explicit AggSpec(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Where a quantity value lands on a Bin axis. Half-open bins: x == high
/// overflows; NaN goes to nanflow; the top in-range bin absorbs float
/// roundoff via clamping.
struct BinLocation {
  enum class Kind : uint8_t { Index, Underflow, Overflow, Nanflow };
  Kind kind;
  size_t index = 0;

  bool operator==(const BinLocation&) const = default;
};

BinLocation bin_index(size_t num, double low, double high, double x);

class Aggregator {
public:
  Aggregator() = default;
  /// The zero (monoid identity) of the spec.
  explicit Aggregator(AggSpec spec);

  const AggSpec& spec() const { return spec_; }

  double entries() const { return entries_; }
  double sum() const { return sum_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  double underflow() const { return underflow_; }
  double overflow() const { return overflow_; }
  double nanflow() const { return nanflow_; }
  const std::vector<Aggregator>& bins() const { return bins_; }

  /// weight must be finite and >= 0; weight 0 is a no-op. Weighted
  /// West/Welford updates for mean and m2.
  void fill(const ntf::EventView& event, double weight = 1.0);

  /// Requires structurally equal specs. Chan-style parallel combination for
  /// m2; zero is an exact two-sided identity.
  void merge_from(const Aggregator& other);

  nlohmann::ordered_json to_json() const;
  static Aggregator from_json(const nlohmann::json& j);
  std::string serialize() const;
  static Aggregator deserialize(std::string_view json_text);

  /// Bitwise equality of all floating state (and structure).
  bool state_equal(const Aggregator& other) const;

private:
  AggSpec spec_;
  double entries_ = 0;
  double sum_ = 0;
  double mean_ = 0;
  double m2_ = 0;
  double underflow_ = 0;
  double overflow_ = 0;
  double nanflow_ = 0;
  std::vector<Aggregator> bins_;
};

inline Aggregator merged(Aggregator a, const Aggregator& b) {
  a.merge_from(b);
  return a;
}

struct PlotRow {
  enum class Kind : uint8_t { Bin, Underflow, Overflow, Nanflow };
  Kind kind;
  double low, high, value, entries;
};

/// Root aggregator must be a Bin. One row per bin (value = sub-aggregator
/// summary: entries for Count, sum for Sum, mean for Average/Deviate),
/// then underflow/overflow/nanflow trailer rows flagged by out-of-range
/// edges (-inf / inf / nan).
std::vector<PlotRow> to_plot_table(const Aggregator& agg);

/// CSV with header bin_low,bin_high,value,entries.
std::string plot_csv(const Aggregator& agg);

}  // namespace ntuplex::agg
