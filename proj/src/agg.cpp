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

#include "ntuplex/agg.hpp"

#include <fmt/format.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <set>

#include "ntuplex/errors.hpp"

namespace ntuplex::agg {

using ordered_json = nlohmann::ordered_json;
using Kind = AggSpec::Kind;

struct AggSpec::Node {
  Kind kind;
  expr::Expr quantity;
  size_t num = 0;
  double low = 0, high = 0;
  AggSpec value;
};

namespace {

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Count: return "Count";
    case Kind::Sum: return "Sum";
    case Kind::Average: return "Average";
    case Kind::Deviate: return "Deviate";
    case Kind::Bin: return "Bin";
  }
  return "?";
}

Kind kind_from_name(std::string_view s) {
  if (s == "Count") return Kind::Count;
  if (s == "Sum") return Kind::Sum;
  if (s == "Average") return Kind::Average;
  if (s == "Deviate") return Kind::Deviate;
  if (s == "Bin") return Kind::Bin;
  throw UserError(fmt::format("unknown aggregator kind '{}'", s));
}

// JSON numbers cannot hold non-finite doubles; encode those as strings.
ordered_json num_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "NaN";
  return v > 0 ? "Infinity" : "-Infinity";
}

double num_from_json(const nlohmann::json& j, std::string_view key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw UserError(fmt::format("aggregator field '{}' is not a number", key));
}

void reject_unknown_keys(const nlohmann::json& j,
                         std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed)
      if (key == a) { ok = true; break; }
    if (!ok) throw UserError(fmt::format("unknown key '{}' in aggregator JSON", key));
  }
}

bool bits_equal(double a, double b) {
  return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

}  // namespace

AggSpec AggSpec::count() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Count;
  return AggSpec(std::move(n));
}

AggSpec AggSpec::sum(expr::Expr quantity) {
  if (!quantity) throw UserError("Sum requires a quantity");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sum;
  n->quantity = std::move(quantity);
  return AggSpec(std::move(n));
}

AggSpec AggSpec::average(expr::Expr quantity) {
  if (!quantity) throw UserError("Average requires a quantity");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Average;
  n->quantity = std::move(quantity);
  return AggSpec(std::move(n));
}

AggSpec AggSpec::deviate(expr::Expr quantity) {
  if (!quantity) throw UserError("Deviate requires a quantity");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Deviate;
  n->quantity = std::move(quantity);
  return AggSpec(std::move(n));
}

AggSpec AggSpec::bin(size_t num, double low, double high, expr::Expr quantity,
                     AggSpec value) {
  if (num < 1) throw UserError("Bin needs at least one bin");
  if (!std::isfinite(low) || !std::isfinite(high))
    throw UserError("Bin bounds must be finite");
  if (!(low < high)) throw UserError("Bin requires low < high");
  if (!quantity) throw UserError("Bin requires a quantity");
  if (!value) throw UserError("Bin requires a sub-aggregator spec");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Bin;
  n->quantity = std::move(quantity);
  n->num = num;
  n->low = low;
  n->high = high;
  n->value = std::move(value);
  return AggSpec(std::move(n));
}

Kind AggSpec::kind() const { return node_->kind; }
const expr::Expr& AggSpec::quantity() const { return node_->quantity; }
size_t AggSpec::num() const { return node_->num; }
double AggSpec::low() const { return node_->low; }
double AggSpec::high() const { return node_->high; }
const AggSpec& AggSpec::value() const { return node_->value; }

static void collect_spec_fields(const AggSpec& s, std::set<std::string>& out) {
  if (s.kind() != Kind::Count)
    for (auto& f : s.quantity().fields()) out.insert(f);
  if (s.kind() == Kind::Bin) collect_spec_fields(s.value(), out);
}

std::vector<std::string> AggSpec::fields() const {
  std::set<std::string> s;
  collect_spec_fields(*this, s);
  return {s.begin(), s.end()};
}

void AggSpec::typecheck(const ntf::Schema& schema) const {
  if (kind() != Kind::Count) {
    if (quantity().typecheck(schema) != expr::ExprType::Num)
      throw UserError(fmt::format("quantity '{}' must be numeric", quantity().str()));
  }
  if (kind() == Kind::Bin) value().typecheck(schema);
}

AggSpec AggSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UserError("aggregator spec must be a JSON object");
  Kind kind = kind_from_name(j.at("type").get<std::string>());
  switch (kind) {
    case Kind::Count:
      reject_unknown_keys(j, {"type"});
      return count();
    case Kind::Sum:
    case Kind::Average:
    case Kind::Deviate: {
      reject_unknown_keys(j, {"type", "quantity"});
      auto q = expr::Expr::parse(j.at("quantity").get<std::string>());
      if (kind == Kind::Sum) return sum(std::move(q));
      if (kind == Kind::Average) return average(std::move(q));
      return deviate(std::move(q));
    }
    case Kind::Bin: {
      reject_unknown_keys(j, {"type", "num", "low", "high", "quantity", "value"});
      return bin(j.at("num").get<size_t>(), num_from_json(j.at("low"), "low"),
                 num_from_json(j.at("high"), "high"),
                 expr::Expr::parse(j.at("quantity").get<std::string>()),
                 from_json(j.at("value")));
    }
  }
  throw UserError("unreachable aggregator kind");
}

ordered_json AggSpec::to_json() const {
  ordered_json j;
  j["type"] = std::string(kind_name(kind()));
  if (kind() == Kind::Bin) {
    j["num"] = num();
    j["low"] = low();
    j["high"] = high();
  }
  if (kind() != Kind::Count) j["quantity"] = quantity().str();
  if (kind() == Kind::Bin) j["value"] = value().to_json();
  return j;
}

bool AggSpec::operator==(const AggSpec& other) const {
  if (!node_ || !other.node_) return !node_ && !other.node_;
  if (kind() != other.kind()) return false;
  if (kind() != Kind::Count && !(quantity() == other.quantity())) return false;
  if (kind() == Kind::Bin) {
    if (num() != other.num() || !bits_equal(low(), other.low()) ||
        !bits_equal(high(), other.high()))
      return false;
    return value() == other.value();
  }
  return true;
}

BinLocation bin_index(size_t num, double low, double high, double x) {
  if (std::isnan(x)) return {BinLocation::Kind::Nanflow};
  if (x < low) return {BinLocation::Kind::Underflow};
  if (x >= high) return {BinLocation::Kind::Overflow};
  double scaled = static_cast<double>(num) * (x - low) / (high - low);
  size_t idx = static_cast<size_t>(scaled);
  if (idx >= num) idx = num - 1;  // guard float roundoff at the top edge
  return {BinLocation::Kind::Index, idx};
}

Aggregator::Aggregator(AggSpec spec) : spec_(std::move(spec)) {
  if (!spec_) throw UserError("empty aggregator spec");
  if (spec_.kind() == Kind::Bin) {
    bins_.reserve(spec_.num());
    for (size_t i = 0; i < spec_.num(); ++i) bins_.emplace_back(spec_.value());
  }
}

void Aggregator::fill(const ntf::EventView& event, double weight) {
  if (!std::isfinite(weight))
    throw UserError(fmt::format("weight must be finite, got {}", weight));
  if (weight < 0)
    throw UserError(fmt::format("weight must be non-negative, got {}", weight));
  if (weight == 0) return;

  switch (spec_.kind()) {
    case Kind::Count:
      entries_ += weight;
      return;
    case Kind::Sum: {
      double q = spec_.quantity().eval(event);
      entries_ += weight;
      sum_ += weight * q;
      return;
    }
    case Kind::Average: {
      double q = spec_.quantity().eval(event);
      entries_ += weight;
      mean_ += (q - mean_) * (weight / entries_);
      return;
    }
    case Kind::Deviate: {
      double q = spec_.quantity().eval(event);
      double new_entries = entries_ + weight;
      double delta = q - mean_;
      double shift = delta * (weight / new_entries);
      m2_ += entries_ * delta * shift;
      mean_ += shift;
      entries_ = new_entries;
      return;
    }
    case Kind::Bin: {
      double q = spec_.quantity().eval(event);
      entries_ += weight;
      BinLocation loc = bin_index(spec_.num(), spec_.low(), spec_.high(), q);
      switch (loc.kind) {
        case BinLocation::Kind::Index: bins_[loc.index].fill(event, weight); break;
        case BinLocation::Kind::Underflow: underflow_ += weight; break;
        case BinLocation::Kind::Overflow: overflow_ += weight; break;
        case BinLocation::Kind::Nanflow: nanflow_ += weight; break;
      }
      return;
    }
  }
}

void Aggregator::merge_from(const Aggregator& other) {
  if (!(spec_ == other.spec_))
    throw UserError(fmt::format(
        "cannot merge aggregators with different specs: {} vs {}",
        spec_.to_json().dump(), other.spec_.to_json().dump()));
  // Empty operands keep zero an exact (bitwise) two-sided identity.
  if (other.entries_ == 0) return;
  if (entries_ == 0) {
    *this = other;
    return;
  }
  switch (spec_.kind()) {
    case Kind::Count:
      entries_ += other.entries_;
      return;
    case Kind::Sum:
      entries_ += other.entries_;
      sum_ += other.sum_;
      return;
    case Kind::Average: {
      double n = entries_ + other.entries_;
      mean_ += (other.mean_ - mean_) * (other.entries_ / n);
      entries_ = n;
      return;
    }
    case Kind::Deviate: {
      // Chan et al. parallel combination.
      double n = entries_ + other.entries_;
      double delta = other.mean_ - mean_;
      m2_ += other.m2_ + delta * delta * (entries_ * other.entries_ / n);
      mean_ += delta * (other.entries_ / n);
      entries_ = n;
      return;
    }
    case Kind::Bin: {
      entries_ += other.entries_;
      underflow_ += other.underflow_;
      overflow_ += other.overflow_;
      nanflow_ += other.nanflow_;
      for (size_t i = 0; i < bins_.size(); ++i) bins_[i].merge_from(other.bins_[i]);
      return;
    }
  }
}

ordered_json Aggregator::to_json() const {
  ordered_json j;
  j["type"] = std::string(kind_name(spec_.kind()));
  switch (spec_.kind()) {
    case Kind::Count:
      j["entries"] = num_to_json(entries_);
      break;
    case Kind::Sum:
      j["quantity"] = spec_.quantity().str();
      j["entries"] = num_to_json(entries_);
      j["sum"] = num_to_json(sum_);
      break;
    case Kind::Average:
      j["quantity"] = spec_.quantity().str();
      j["entries"] = num_to_json(entries_);
      j["mean"] = num_to_json(mean_);
      break;
    case Kind::Deviate:
      j["quantity"] = spec_.quantity().str();
      j["entries"] = num_to_json(entries_);
      j["mean"] = num_to_json(mean_);
      j["m2"] = num_to_json(m2_);
      break;
    case Kind::Bin: {
      j["num"] = spec_.num();
      j["low"] = spec_.low();
      j["high"] = spec_.high();
      j["quantity"] = spec_.quantity().str();
      j["entries"] = num_to_json(entries_);
      j["underflow"] = num_to_json(underflow_);
      j["overflow"] = num_to_json(overflow_);
      j["nanflow"] = num_to_json(nanflow_);
      auto arr = ordered_json::array();
      for (const auto& b : bins_) arr.push_back(b.to_json());
      j["values"] = std::move(arr);
      break;
    }
  }
  return j;
}

Aggregator Aggregator::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UserError("aggregator JSON must be an object");
  Kind kind = kind_from_name(j.at("type").get<std::string>());
  switch (kind) {
    case Kind::Count: {
      reject_unknown_keys(j, {"type", "entries"});
      Aggregator a{AggSpec::count()};
      a.entries_ = num_from_json(j.at("entries"), "entries");
      return a;
    }
    case Kind::Sum: {
      reject_unknown_keys(j, {"type", "quantity", "entries", "sum"});
      Aggregator a{AggSpec::sum(expr::Expr::parse(j.at("quantity").get<std::string>()))};
      a.entries_ = num_from_json(j.at("entries"), "entries");
      a.sum_ = num_from_json(j.at("sum"), "sum");
      return a;
    }
    case Kind::Average: {
      reject_unknown_keys(j, {"type", "quantity", "entries", "mean"});
      Aggregator a{AggSpec::average(expr::Expr::parse(j.at("quantity").get<std::string>()))};
      a.entries_ = num_from_json(j.at("entries"), "entries");
      a.mean_ = num_from_json(j.at("mean"), "mean");
      return a;
    }
    case Kind::Deviate: {
      reject_unknown_keys(j, {"type", "quantity", "entries", "mean", "m2"});
      Aggregator a{AggSpec::deviate(expr::Expr::parse(j.at("quantity").get<std::string>()))};
      a.entries_ = num_from_json(j.at("entries"), "entries");
      a.mean_ = num_from_json(j.at("mean"), "mean");
      a.m2_ = num_from_json(j.at("m2"), "m2");
      return a;
    }
    case Kind::Bin: {
      reject_unknown_keys(j, {"type", "num", "low", "high", "quantity", "entries",
                              "underflow", "overflow", "nanflow", "values"});
      const auto& values = j.at("values");
      if (!values.is_array())
        throw UserError("Bin aggregator 'values' must be an array");
      size_t num = j.at("num").get<size_t>();
      if (values.size() != num)
        throw UserError(fmt::format("Bin aggregator has {} values, expected {}",
                                    values.size(), num));
      std::vector<Aggregator> bins;
      bins.reserve(num);
      for (const auto& v : values) bins.push_back(from_json(v));
      for (size_t i = 1; i < bins.size(); ++i)
        if (!(bins[i].spec_ == bins[0].spec_))
          throw UserError("Bin sub-aggregators disagree on spec");
      AggSpec spec = AggSpec::bin(
          num, num_from_json(j.at("low"), "low"), num_from_json(j.at("high"), "high"),
          expr::Expr::parse(j.at("quantity").get<std::string>()), bins[0].spec_);
      Aggregator a{spec};
      a.entries_ = num_from_json(j.at("entries"), "entries");
      a.underflow_ = num_from_json(j.at("underflow"), "underflow");
      a.overflow_ = num_from_json(j.at("overflow"), "overflow");
      a.nanflow_ = num_from_json(j.at("nanflow"), "nanflow");
      a.bins_ = std::move(bins);
      return a;
    }
  }
  throw UserError("unreachable aggregator kind");
}

std::string Aggregator::serialize() const { return to_json().dump(); }

Aggregator Aggregator::deserialize(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw UserError(fmt::format("malformed aggregator JSON: {}", e.what()));
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw UserError(fmt::format("invalid aggregator JSON: {}", e.what()));
  }
}

bool Aggregator::state_equal(const Aggregator& other) const {
  if (!(spec_ == other.spec_)) return false;
  if (!bits_equal(entries_, other.entries_) || !bits_equal(sum_, other.sum_) ||
      !bits_equal(mean_, other.mean_) || !bits_equal(m2_, other.m2_) ||
      !bits_equal(underflow_, other.underflow_) ||
      !bits_equal(overflow_, other.overflow_) ||
      !bits_equal(nanflow_, other.nanflow_))
    return false;
  for (size_t i = 0; i < bins_.size(); ++i)
    if (!bins_[i].state_equal(other.bins_[i])) return false;
  return true;
}

namespace {

double summary_value(const Aggregator& a) {
  switch (a.spec().kind()) {
    case Kind::Count: return a.entries();
    case Kind::Sum: return a.sum();
    case Kind::Average: return a.mean();
    case Kind::Deviate: return a.mean();
    case Kind::Bin: return a.entries();
  }
  return 0;
}

std::string csv_num(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::vector<PlotRow> to_plot_table(const Aggregator& agg) {
  if (!agg.spec() || agg.spec().kind() != Kind::Bin)
    throw UserError("plot table requires a Bin aggregator at the root");
  const double low = agg.spec().low(), high = agg.spec().high();
  const size_t num = agg.spec().num();
  const double width = (high - low) / static_cast<double>(num);

  std::vector<PlotRow> rows;
  rows.reserve(num + 3);
  for (size_t i = 0; i < num; ++i) {
    const Aggregator& b = agg.bins()[i];
    double lo = low + static_cast<double>(i) * width;
    double hi = i + 1 == num ? high : low + static_cast<double>(i + 1) * width;
    rows.push_back({PlotRow::Kind::Bin, lo, hi, summary_value(b), b.entries()});
  }
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rows.push_back({PlotRow::Kind::Underflow, -inf, low, agg.underflow(), agg.underflow()});
  rows.push_back({PlotRow::Kind::Overflow, high, inf, agg.overflow(), agg.overflow()});
  rows.push_back({PlotRow::Kind::Nanflow, nan, nan, agg.nanflow(), agg.nanflow()});
  return rows;
}

std::string plot_csv(const Aggregator& agg) {
  std::string out = "bin_low,bin_high,value,entries\n";
  for (const auto& r : to_plot_table(agg)) {
    out += csv_num(r.low);
    out += ',';
    out += csv_num(r.high);
    out += ',';
    out += csv_num(r.value);
    out += ',';
    out += csv_num(r.entries);
    out += '\n';
  }
  return out;
}

}  // namespace ntuplex::agg
