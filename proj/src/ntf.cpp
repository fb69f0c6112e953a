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

#include "ntuplex/ntf.hpp"

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "ntuplex/errors.hpp"

namespace ntuplex::ntf {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(BranchType t) {
  switch (t) {
    case BranchType::F32: return "f32";
    case BranchType::F64: return "f64";
    case BranchType::I32: return "i32";
    case BranchType::I64: return "i64";
    case BranchType::VarF32: return "varf32";
  }
  return "?";
}

BranchType branch_type_from_string(std::string_view s) {
  if (s == "f32") return BranchType::F32;
  if (s == "f64") return BranchType::F64;
  if (s == "i32") return BranchType::I32;
  if (s == "i64") return BranchType::I64;
  if (s == "varf32") return BranchType::VarF32;
  throw UserError(fmt::format("unknown branch type '{}'", s));
}

uint64_t BranchDescriptor::data_bytes() const {
  uint64_t total = 0;
  for (const auto& b : baskets) total += b.record_bytes();
  return total;
}

const BranchDescriptor* Schema::find(std::string_view name) const {
  for (const auto& b : branches)
    if (b.name == name) return &b;
  return nullptr;
}

const BranchDescriptor& Schema::at(std::string_view name) const {
  const BranchDescriptor* b = find(name);
  if (!b) throw UserError(fmt::format("unknown branch '{}'", name));
  return *b;
}

std::vector<BranchDecl> Schema::decls() const {
  std::vector<BranchDecl> out;
  out.reserve(branches.size());
  for (const auto& b : branches) out.push_back({b.name, b.type});
  return out;
}

size_t Schema::row_groups() const {
  return branches.empty() ? 0 : branches.front().baskets.size();
}

void Schema::validate() const {
  std::map<std::string, int, std::less<>> seen;
  for (const auto& b : branches) {
    if (b.name.empty()) throw CorruptionError("schema has an empty branch name");
    if (++seen[b.name] > 1)
      throw CorruptionError(fmt::format("duplicate branch name '{}'", b.name));
  }
  for (const auto& b : branches) {
    uint64_t events = 0;
    for (const auto& k : b.baskets) events += k.event_count;
    if (events != event_count)
      throw CorruptionError(
          fmt::format("branch '{}' baskets cover {} events, file has {}",
                      b.name, events, event_count));
  }
  // Row alignment: same per-basket event counts on every branch.
  if (!branches.empty()) {
    const auto& first = branches.front().baskets;
    for (const auto& b : branches) {
      if (b.baskets.size() != first.size())
        throw CorruptionError(
            fmt::format("branch '{}' has {} baskets, expected {}", b.name,
                        b.baskets.size(), first.size()));
      for (size_t i = 0; i < first.size(); ++i)
        if (b.baskets[i].event_count != first[i].event_count)
          throw CorruptionError(fmt::format(
              "basket {} of branch '{}' is not row-aligned", i, b.name));
    }
  }
}

std::string schema_to_json(const Schema& s) {
  ordered_json doc;
  doc["version"] = kFormatVersion;
  doc["event_count"] = s.event_count;
  auto branches = ordered_json::array();
  for (const auto& b : s.branches) {
    ordered_json jb;
    jb["name"] = b.name;
    jb["type"] = to_string(b.type);
    auto baskets = ordered_json::array();
    for (const auto& k : b.baskets) {
      ordered_json jk;
      jk["offset"] = k.file_offset;
      jk["csize"] = k.compressed_size;
      jk["usize"] = k.uncompressed_size;
      jk["events"] = k.event_count;
      jk["crc32"] = k.crc32;
      baskets.push_back(std::move(jk));
    }
    jb["baskets"] = std::move(baskets);
    branches.push_back(std::move(jb));
  }
  doc["branches"] = std::move(branches);
  return doc.dump();
}

Schema schema_from_json(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(fmt::format("footer JSON malformed: {}", e.what()));
  }
  try {
    if (doc.at("version").get<uint32_t>() != kFormatVersion)
      throw CorruptionError(fmt::format("unsupported format version {}",
                                        doc.at("version").get<uint32_t>()));
    Schema s;
    s.event_count = doc.at("event_count").get<uint64_t>();
    for (const auto& jb : doc.at("branches")) {
      BranchDescriptor b;
      b.name = jb.at("name").get<std::string>();
      b.type = branch_type_from_string(jb.at("type").get<std::string>());
      for (const auto& jk : jb.at("baskets")) {
        BasketRef k;
        k.file_offset = jk.at("offset").get<uint64_t>();
        k.compressed_size = jk.at("csize").get<uint32_t>();
        k.uncompressed_size = jk.at("usize").get<uint32_t>();
        k.event_count = jk.at("events").get<uint64_t>();
        k.crc32 = jk.at("crc32").get<uint32_t>();
        b.baskets.push_back(k);
      }
      s.branches.push_back(std::move(b));
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(fmt::format("footer JSON invalid: {}", e.what()));
  }
}

size_t Column::rows() const {
  return std::visit(
      [](const auto& v) -> size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, VarColumn>)
          return v.rows();
        else
          return v.size();
      },
      data);
}

double Column::scalar_as_double(size_t row) const {
  switch (type) {
    case BranchType::F32: return f32()[row];
    case BranchType::F64: return f64()[row];
    case BranchType::I32: return i32()[row];
    case BranchType::I64: return static_cast<double>(i64()[row]);
    case BranchType::VarF32: break;
  }
  throw UserError(fmt::format("branch '{}' is an array, expected scalar", name));
}

Column make_empty_column(std::string name, BranchType type) {
  Column c;
  c.name = std::move(name);
  c.type = type;
  switch (type) {
    case BranchType::F32: c.data = std::vector<float>{}; break;
    case BranchType::F64: c.data = std::vector<double>{}; break;
    case BranchType::I32: c.data = std::vector<int32_t>{}; break;
    case BranchType::I64: c.data = std::vector<int64_t>{}; break;
    case BranchType::VarF32: c.data = VarColumn{}; break;
  }
  return c;
}

const Column* EventBatch::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &columns_[it->second];
}

const Column& EventBatch::at(std::string_view name) const {
  const Column* c = find(name);
  if (!c) throw UserError(fmt::format("unknown branch '{}'", name));
  return *c;
}

void EventBatch::add_column(Column col) {
  if ((rows_fixed_ || !columns_.empty()) && col.rows() != rows_)
    throw Error(fmt::format("column '{}' has {} rows, batch has {}", col.name,
                            col.rows(), rows_));
  if (index_.contains(col.name))
    throw Error(fmt::format("duplicate column '{}'", col.name));
  rows_ = col.rows();
  rows_fixed_ = true;
  index_.emplace(col.name, columns_.size());
  columns_.push_back(std::move(col));
}

void EventBatch::set_rows(size_t n) {
  if (rows_fixed_ && rows_ != n)
    throw Error(fmt::format("batch row count already fixed at {}", rows_));
  rows_ = n;
  rows_fixed_ = true;
}

double EventView::scalar(std::string_view name) const {
  return batch_->at(name).scalar_as_double(row_);
}

std::span<const float> EventView::array(std::string_view name) const {
  const Column& c = batch_->at(name);
  if (c.type != BranchType::VarF32)
    throw UserError(fmt::format("branch '{}' is a scalar, expected array", name));
  return c.var().row(row_);
}

}  // namespace ntuplex::ntf
