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

#include "ntuplex/ntf_reader.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <set>

#include "ntuplex/compress.hpp"
#include "ntuplex/errors.hpp"
#include "ntuplex/wire.hpp"

namespace ntuplex::ntf {

namespace {

template <typename T>
std::vector<T> decode_scalars(std::span<const std::byte> payload) {
  std::vector<T> out(payload.size() / sizeof(T));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), payload.data(), payload.size());
  } else {
    for (size_t i = 0; i < out.size(); ++i)
      out[i] = wire::load_le<T>(payload.data() + i * sizeof(T));
  }
  return out;
}

Column decode_payload(std::span<const std::byte> payload,
                      const BranchDescriptor& branch, size_t basket_index,
                      uint64_t events, const std::string& file) {
  Column col = make_empty_column(branch.name, branch.type);
  if (is_scalar(branch.type)) {
    if (payload.size() != events * scalar_width(branch.type))
      throw CorruptionError(fmt::format(
          "basket {} of branch '{}' in '{}': payload is {} bytes, expected {}",
          basket_index, branch.name, file, payload.size(),
          events * scalar_width(branch.type)));
    switch (branch.type) {
      case BranchType::F32: col.data = decode_scalars<float>(payload); break;
      case BranchType::F64: col.data = decode_scalars<double>(payload); break;
      case BranchType::I32: col.data = decode_scalars<int32_t>(payload); break;
      case BranchType::I64: col.data = decode_scalars<int64_t>(payload); break;
      case BranchType::VarF32: break;
    }
    return col;
  }

  auto corrupt = [&](std::string_view why) {
    return CorruptionError(
        fmt::format("basket {} of branch '{}' in '{}': {}", basket_index,
                    branch.name, file, why));
  };
  wire::Cursor cur(payload);
  if (!cur.fits(4)) throw corrupt("payload too short for value count");
  uint32_t value_count = cur.get<uint32_t>();
  if (!cur.fits(4 * (events + 1) + 4ull * value_count))
    throw corrupt("payload too short for offsets+values");
  if (cur.remaining() != 4 * (events + 1) + 4ull * value_count)
    throw corrupt("payload size mismatch");

  VarColumn var;
  var.offsets.clear();
  var.offsets.reserve(events + 1);
  for (uint64_t i = 0; i <= events; ++i) var.offsets.push_back(cur.get<uint32_t>());
  if (var.offsets.front() != 0) throw corrupt("offsets must start at 0");
  for (size_t i = 1; i < var.offsets.size(); ++i)
    if (var.offsets[i] < var.offsets[i - 1]) throw corrupt("offsets not monotone");
  if (var.offsets.back() != value_count) throw corrupt("offsets do not cover values");
  var.values = decode_scalars<float>(cur.take(4 * value_count));
  col.data = std::move(var);
  return col;
}

}  // namespace

Schema read_schema(ByteSource& src) {
  std::vector<std::byte> header(kHeaderSize);
  size_t n = src.read_at(0, header);
  if (n < kHeaderSize)
    throw CorruptionError(
        fmt::format("'{}' is too short ({} bytes) to be an NTF file", src.name(), n));
  if (std::memcmp(header.data(), kMagic, 4) != 0)
    throw CorruptionError(fmt::format("'{}' has bad magic, not an NTF file", src.name()));
  uint16_t version = wire::load_le<uint16_t>(header.data() + 4);
  if (version != kFormatVersion)
    throw CorruptionError(
        fmt::format("'{}' has unsupported format version {}", src.name(), version));
  uint64_t footer_offset = wire::load_le<uint64_t>(header.data() + 8);
  uint64_t footer_length = wire::load_le<uint64_t>(header.data() + 16);
  if (footer_length < 4 || footer_offset < kHeaderSize ||
      footer_offset + footer_length > src.size())
    throw CorruptionError(
        fmt::format("'{}' has an invalid footer location", src.name()));

  std::vector<std::byte> footer(footer_length);
  read_exact(src, footer_offset, footer);
  size_t json_len = footer.size() - 4;
  uint32_t stored = wire::load_le<uint32_t>(footer.data() + json_len);
  uint32_t actual = crc32_ieee({footer.data(), json_len});
  if (stored != actual)
    throw CorruptionError(fmt::format(
        "footer checksum mismatch in '{}': stored {:08x}, computed {:08x}",
        src.name(), stored, actual));
  return schema_from_json(
      {reinterpret_cast<const char*>(footer.data()), json_len});
}

Column read_basket(ByteSource& src, const BranchDescriptor& branch,
                   size_t basket_index, CpuClock* cpu) {
  if (basket_index >= branch.baskets.size())
    throw UserError(fmt::format("basket index {} out of range for branch '{}' ({} baskets)",
                                basket_index, branch.name, branch.baskets.size()));
  const BasketRef& ref = branch.baskets[basket_index];

  std::vector<std::byte> record(ref.record_bytes());
  read_exact(src, ref.file_offset, record);

  CpuScope timer(cpu);  // decompress+decode below count as compute

  uint8_t codec_byte = static_cast<uint8_t>(record[0]);
  uint32_t usize = wire::load_le<uint32_t>(record.data() + 1);
  uint32_t csize = wire::load_le<uint32_t>(record.data() + 5);
  uint32_t crc = wire::load_le<uint32_t>(record.data() + 9);
  auto corrupt = [&](std::string_view why) {
    return CorruptionError(
        fmt::format("basket {} of branch '{}' in '{}': {}", basket_index,
                    branch.name, src.name(), why));
  };
  if (usize != ref.uncompressed_size || csize != ref.compressed_size ||
      crc != ref.crc32)
    throw corrupt("record header disagrees with footer index");
  if (codec_byte > static_cast<uint8_t>(Codec::Deflate))
    throw corrupt(fmt::format("unknown codec {}", codec_byte));

  std::span<const std::byte> body(record.data() + kBasketHeaderSize, csize);
  std::vector<std::byte> inflated;
  std::span<const std::byte> payload = body;
  if (static_cast<Codec>(codec_byte) == Codec::Deflate) {
    inflated = deflate_decompress(body, usize);
    payload = inflated;
  } else if (csize != usize) {
    throw corrupt("stored size mismatch for uncompressed basket");
  }

  uint32_t actual_crc = crc32_ieee(payload);
  if (actual_crc != ref.crc32)
    throw CorruptionError(fmt::format(
        "checksum mismatch in basket {} of branch '{}' in '{}': stored {:08x}, "
        "computed {:08x}",
        basket_index, branch.name, src.name(), ref.crc32, actual_crc));

  return decode_payload(payload, branch, basket_index, ref.event_count, src.name());
}

EventReader::EventReader(ByteSource& src, ReadOptions options)
    : src_(src), schema_(read_schema(src)), options_(std::move(options)) {
  init();
}

EventReader::EventReader(ByteSource& src, Schema schema, ReadOptions options)
    : src_(src), schema_(std::move(schema)), options_(std::move(options)) {
  init();
}

void EventReader::init() {
  std::set<std::string_view> seen;
  for (const auto& name : options_.selection) {
    if (!seen.insert(name).second)
      throw UserError(fmt::format("branch '{}' selected twice", name));
    selected_.push_back(&schema_.at(name));
  }
  if (options_.predicate) {
    if (options_.predicate.typecheck(schema_) != expr::ExprType::Bool)
      throw UserError(fmt::format("predicate '{}' is not boolean",
                                  options_.predicate.str()));
    for (const auto& name : options_.predicate.fields())
      predicate_fields_.push_back(&schema_.at(name));
  }
  for (const auto* b : selected_) builders_.push_back(make_empty_column(b->name, b->type));
}

void EventReader::load_group(size_t g) {
  uint64_t group_rows = schema_.branches.empty()
                            ? 0
                            : schema_.branches.front().baskets[g].event_count;

  // Baskets needed by the predicate, each read exactly once; selected ones
  // are reused below instead of being read twice.
  std::map<std::string_view, Column> cache;
  for (const auto* b : predicate_fields_)
    if (!cache.contains(b->name))
      cache.emplace(b->name, read_basket(src_, *b, g, options_.cpu));

  std::vector<char> mask;
  size_t pass = group_rows;
  if (options_.predicate) {
    EventBatch pred_batch;
    for (auto& [name, col] : cache) pred_batch.add_column(col);  // copies
    if (cache.empty()) pred_batch.set_rows(group_rows);
    CpuScope timer(options_.cpu);
    mask.assign(group_rows, 0);
    pass = 0;
    for (size_t r = 0; r < group_rows; ++r) {
      if (options_.predicate.eval_bool(EventView(pred_batch, r))) {
        mask[r] = 1;
        ++pass;
      }
    }
  }
  if (pass == 0) return;

  bool keep_all = mask.empty() || pass == group_rows;
  for (size_t i = 0; i < selected_.size(); ++i) {
    const BranchDescriptor* b = selected_[i];
    auto it = cache.find(b->name);
    Column col = it != cache.end() ? std::move(it->second)
                                   : read_basket(src_, *b, g, options_.cpu);
    CpuScope timer(options_.cpu);
    Column& dst = builders_[i];
    std::visit(
        [&](auto& src_vec) {
          using T = std::decay_t<decltype(src_vec)>;
          if constexpr (std::is_same_v<T, VarColumn>) {
            VarColumn& d = dst.var();
            for (size_t r = 0; r < col.rows(); ++r)
              if (keep_all || mask[r]) d.push_row(src_vec.row(r));
          } else {
            auto& d = std::get<T>(dst.data);
            if (keep_all) {
              d.insert(d.end(), src_vec.begin(), src_vec.end());
            } else {
              for (size_t r = 0; r < src_vec.size(); ++r)
                if (mask[r]) d.push_back(src_vec[r]);
            }
          }
        },
        col.data);
  }
  builder_rows_ += pass;
}

std::optional<EventBatch> EventReader::next() {
  size_t n_groups = schema_.row_groups();
  while (builder_rows_ < options_.batch_rows && group_ < n_groups) {
    load_group(group_);
    ++group_;
  }
  if (builder_rows_ == 0) return std::nullopt;

  EventBatch batch;
  batch.set_rows(builder_rows_);
  for (auto& col : builders_) {
    batch.add_column(std::move(col));
  }
  builders_.clear();
  for (const auto* b : selected_) builders_.push_back(make_empty_column(b->name, b->type));
  builder_rows_ = 0;
  return batch;
}

EventBatch read_all_events(ByteSource& src, ReadOptions options) {
  auto selection = options.selection;
  options.batch_rows = std::numeric_limits<size_t>::max();
  EventReader reader(src, std::move(options));
  if (auto batch = reader.next()) return std::move(*batch);
  // No surviving rows: empty columns for the selection.
  EventBatch empty;
  empty.set_rows(0);
  for (const auto& name : selection) {
    const auto& b = reader.schema().at(name);
    empty.add_column(make_empty_column(b.name, b.type));
  }
  return empty;
}

}  // namespace ntuplex::ntf
