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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// NTF ("ntuple file") columnar container. Events are rows; branches are
// columns of primitive numbers or variable-length float arrays. Each branch
// is stored as a sequence of baskets: independently compressed, CRC-checked
// chunks covering a row range. Baskets are row-aligned across branches so a
// row group can be assembled from one basket per branch.
//
// On-disk layout (all integers little-endian):
//   header (24 bytes): "NTF1" | version u16 | flags u16
//                      | footer_offset u64 | footer_length u64
//   basket record:     codec u8 | usize u32 | csize u32 | crc32 u32 | payload
//   footer:            schema JSON | crc32 u32 of the JSON bytes
//
// The footer (not the header) carries the schema and basket index so files
// stream out in one pass; the header's footer fields are patched by a final
// seek. footer_length counts the JSON plus its 4-byte CRC.

namespace ntuplex::ntf {

inline constexpr char kMagic[4] = {'N', 'T', 'F', '1'};
inline constexpr uint16_t kFormatVersion = 1;
inline constexpr size_t kHeaderSize = 24;
inline constexpr size_t kBasketHeaderSize = 13;

enum class BranchType : uint8_t { F32, F64, I32, I64, VarF32 };

std::string_view to_string(BranchType t);
BranchType branch_type_from_string(std::string_view s);

inline bool is_scalar(BranchType t) { return t != BranchType::VarF32; }

/// Bytes per value for scalar branch types.
inline size_t scalar_width(BranchType t) {
  switch (t) {
    case BranchType::F32: return 4;
    case BranchType::F64: return 8;
    case BranchType::I32: return 4;
    case BranchType::I64: return 8;
    case BranchType::VarF32: break;
  }
  return 0;
}

enum class Codec : uint8_t { None = 0, Deflate = 1 };

/// One stored chunk of one branch. checksum covers the uncompressed payload
/// so corruption detection is independent of the codec.
struct BasketRef {
  uint64_t file_offset = 0;  // of the basket record (codec byte)
  uint32_t compressed_size = 0;
  uint32_t uncompressed_size = 0;
  uint64_t event_count = 0;
  uint32_t crc32 = 0;

  uint64_t record_bytes() const { return kBasketHeaderSize + compressed_size; }
  bool operator==(const BasketRef&) const = default;
};

struct BranchDecl {
  std::string name;
  BranchType type;
  bool operator==(const BranchDecl&) const = default;
};

struct BranchDescriptor {
  std::string name;
  BranchType type;
  std::vector<BasketRef> baskets;

  uint64_t data_bytes() const;  // sum of basket record bytes
  bool operator==(const BranchDescriptor&) const = default;
};

struct Schema {
  std::vector<BranchDescriptor> branches;
  uint64_t event_count = 0;

  const BranchDescriptor* find(std::string_view name) const;
  const BranchDescriptor& at(std::string_view name) const;  // throws UserError
  bool has(std::string_view name) const { return find(name) != nullptr; }
  std::vector<BranchDecl> decls() const;

  /// Baskets per branch; identical across branches (row alignment).
  size_t row_groups() const;

  /// Unique names, aligned baskets, event counts consistent. Throws
  /// CorruptionError on violation.
  void validate() const;
};

/// Footer JSON codec (schema + basket index).
std::string schema_to_json(const Schema& s);
Schema schema_from_json(std::string_view json_text);

/// Variable-length float column: offsets.size() == rows + 1, offsets[0] == 0,
/// monotone, offsets.back() == values.size().
struct VarColumn {
  std::vector<uint32_t> offsets{0};
  std::vector<float> values;

  size_t rows() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const float> row(size_t i) const {
    return {values.data() + offsets[i], values.data() + offsets[i + 1]};
  }
  void push_row(std::span<const float> vals) {
    values.insert(values.end(), vals.begin(), vals.end());
    offsets.push_back(static_cast<uint32_t>(values.size()));
  }
};

using ColumnData = std::variant<std::vector<float>, std::vector<double>,
                                std::vector<int32_t>, std::vector<int64_t>,
                                VarColumn>;

struct Column {
  std::string name;
  BranchType type = BranchType::F64;
  ColumnData data;

  size_t rows() const;

  std::span<const float> f32() const { return std::get<std::vector<float>>(data); }
  std::span<const double> f64() const { return std::get<std::vector<double>>(data); }
  std::span<const int32_t> i32() const { return std::get<std::vector<int32_t>>(data); }
  std::span<const int64_t> i64() const { return std::get<std::vector<int64_t>>(data); }
  const VarColumn& var() const { return std::get<VarColumn>(data); }
  VarColumn& var() { return std::get<VarColumn>(data); }

  /// Scalar value converted to double. Precondition: scalar type, row valid.
  double scalar_as_double(size_t row) const;
};

Column make_empty_column(std::string name, BranchType type);

/// Columnar slice of events: a subset of branches over a contiguous run of
/// (surviving) rows.
class EventBatch {
public:
  size_t rows() const { return rows_; }
  size_t column_count() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }

  const Column* find(std::string_view name) const;
  const Column& at(std::string_view name) const;  // throws UserError

  /// Appends a column; all columns must agree on row count.
  void add_column(Column col);

  /// Fixes the row count of a column-less batch (pure row counting under
  /// maximal pruning). Columns added later must match.
  void set_rows(size_t n);

  void clear() {
    columns_.clear();
    index_.clear();
    rows_ = 0;
    rows_fixed_ = false;
  }

private:
  std::vector<Column> columns_;
  std::map<std::string, size_t, std::less<>> index_;
  size_t rows_ = 0;
  bool rows_fixed_ = false;
};

/// One event row of a batch: name -> scalar or array access.
class EventView {
public:
  EventView(const EventBatch& batch, size_t row) : batch_(&batch), row_(row) {}

  double scalar(std::string_view name) const;
  std::span<const float> array(std::string_view name) const;
  bool has(std::string_view name) const { return batch_->find(name) != nullptr; }
  size_t row() const { return row_; }

private:
  const EventBatch* batch_;
  size_t row_;
};

}  // namespace ntuplex::ntf
