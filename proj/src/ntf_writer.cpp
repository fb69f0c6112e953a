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

#include "ntuplex/ntf_writer.hpp"

#include <fmt/format.h>

#include <limits>
#include <set>

#include "ntuplex/compress.hpp"
#include "ntuplex/errors.hpp"
#include "ntuplex/wire.hpp"

namespace ntuplex::ntf {

namespace {

void write_header(FileSink& sink, uint64_t footer_offset, uint64_t footer_length) {
  std::vector<std::byte> h(kHeaderSize);
  std::memcpy(h.data(), kMagic, 4);
  wire::store_le<uint16_t>(h.data() + 4, kFormatVersion);
  wire::store_le<uint16_t>(h.data() + 6, 0);  // flags
  wire::store_le<uint64_t>(h.data() + 8, footer_offset);
  wire::store_le<uint64_t>(h.data() + 16, footer_length);
  sink.write_at(0, h);
}

}  // namespace

size_t DatasetWriter::Pending::payload_size() const {
  if (is_scalar(decl.type)) return scalar_bytes.size();
  // value_count u32 + (events+1) offsets + values
  return 4 + 4 * (var_lens.size() + 1) + 4 * var_values.size();
}

void DatasetWriter::Pending::clear() {
  scalar_bytes.clear();
  var_values.clear();
  var_lens.clear();
}

DatasetWriter::DatasetWriter(const std::string& path,
                             std::vector<BranchDecl> branches,
                             WriteOptions options)
    : sink_(path), options_(options) {
  if (branches.empty()) throw UserError("schema has no branches");
  std::set<std::string, std::less<>> names;
  for (const auto& d : branches) {
    if (d.name.empty()) throw UserError("branch name must be non-empty");
    if (!names.insert(d.name).second)
      throw UserError(fmt::format("duplicate branch name '{}'", d.name));
  }
  for (auto& d : branches) {
    pending_.push_back(Pending{.decl = d, .scalar_bytes = {}, .var_values = {}, .var_lens = {}});
    branches_.push_back(BranchDescriptor{.name = d.name, .type = d.type, .baskets = {}});
  }
  // Placeholder header; footer fields patched in finish().
  std::vector<std::byte> zeros(kHeaderSize, std::byte{0});
  sink_.write(zeros);
  write_header(sink_, 0, 0);
}

void DatasetWriter::check_fixed_cut() {
  if (pending_events_ == 0) return;
  for (const auto& p : pending_) {
    if (!is_scalar(p.decl.type)) continue;
    if (p.scalar_bytes.size() + scalar_width(p.decl.type) > options_.basket_target_bytes) {
      flush_row_group();
      return;
    }
  }
}

void DatasetWriter::check_var_cut() {
  for (const auto& p : pending_) {
    if (is_scalar(p.decl.type)) continue;
    if (p.payload_size() > options_.basket_target_bytes) {
      flush_row_group();
      return;
    }
  }
}

void DatasetWriter::append(const Row& row) {
  if (finished_) throw UserError("append after finish");
  if (row.size() != pending_.size())
    throw UserError(fmt::format("row has {} values, schema has {} branches",
                                row.size(), pending_.size()));
  check_fixed_cut();
  for (size_t i = 0; i < row.size(); ++i) {
    Pending& p = pending_[i];
    const Cell& cell = row[i];
    auto bad_type = [&]() -> UserError {
      return UserError(fmt::format("value for branch '{}' does not match type {}",
                                   p.decl.name, to_string(p.decl.type)));
    };
    switch (p.decl.type) {
      case BranchType::F32:
        if (!std::holds_alternative<float>(cell)) throw bad_type();
        wire::append_le(p.scalar_bytes, std::get<float>(cell));
        break;
      case BranchType::F64:
        if (!std::holds_alternative<double>(cell)) throw bad_type();
        wire::append_le(p.scalar_bytes, std::get<double>(cell));
        break;
      case BranchType::I32:
        if (!std::holds_alternative<int32_t>(cell)) throw bad_type();
        wire::append_le(p.scalar_bytes, std::get<int32_t>(cell));
        break;
      case BranchType::I64:
        if (!std::holds_alternative<int64_t>(cell)) throw bad_type();
        wire::append_le(p.scalar_bytes, std::get<int64_t>(cell));
        break;
      case BranchType::VarF32: {
        if (!std::holds_alternative<std::vector<float>>(cell)) throw bad_type();
        const auto& vals = std::get<std::vector<float>>(cell);
        p.var_values.insert(p.var_values.end(), vals.begin(), vals.end());
        p.var_lens.push_back(static_cast<uint32_t>(vals.size()));
        break;
      }
    }
  }
  ++pending_events_;
  ++event_count_;
  check_var_cut();
}

void DatasetWriter::append(const EventBatch& batch) {
  if (finished_) throw UserError("append after finish");
  if (batch.column_count() != pending_.size())
    throw UserError(fmt::format("batch has {} columns, schema has {} branches",
                                batch.column_count(), pending_.size()));
  std::vector<const Column*> cols;
  cols.reserve(pending_.size());
  for (const auto& p : pending_) {
    const Column* c = batch.find(p.decl.name);
    if (!c) throw UserError(fmt::format("batch is missing branch '{}'", p.decl.name));
    if (c->type != p.decl.type)
      throw UserError(fmt::format("batch branch '{}' is {}, schema says {}",
                                  p.decl.name, to_string(c->type),
                                  to_string(p.decl.type)));
    cols.push_back(c);
  }
  for (size_t row = 0; row < batch.rows(); ++row) {
    check_fixed_cut();
    for (size_t i = 0; i < pending_.size(); ++i) {
      Pending& p = pending_[i];
      const Column& c = *cols[i];
      switch (p.decl.type) {
        case BranchType::F32: wire::append_le(p.scalar_bytes, c.f32()[row]); break;
        case BranchType::F64: wire::append_le(p.scalar_bytes, c.f64()[row]); break;
        case BranchType::I32: wire::append_le(p.scalar_bytes, c.i32()[row]); break;
        case BranchType::I64: wire::append_le(p.scalar_bytes, c.i64()[row]); break;
        case BranchType::VarF32: {
          auto vals = c.var().row(row);
          p.var_values.insert(p.var_values.end(), vals.begin(), vals.end());
          p.var_lens.push_back(static_cast<uint32_t>(vals.size()));
          break;
        }
      }
    }
    ++pending_events_;
    ++event_count_;
    check_var_cut();
  }
}

void DatasetWriter::flush_row_group() {
  if (pending_events_ == 0) return;
  for (size_t i = 0; i < pending_.size(); ++i) {
    Pending& p = pending_[i];

    std::vector<std::byte> payload;
    if (is_scalar(p.decl.type)) {
      payload = std::move(p.scalar_bytes);
    } else {
      payload.reserve(p.payload_size());
      wire::append_le<uint32_t>(payload, static_cast<uint32_t>(p.var_values.size()));
      uint32_t off = 0;
      wire::append_le<uint32_t>(payload, off);
      for (uint32_t len : p.var_lens) {
        off += len;
        wire::append_le<uint32_t>(payload, off);
      }
      for (float v : p.var_values) wire::append_le(payload, v);
    }
    if (payload.size() > std::numeric_limits<uint32_t>::max())
      throw UserError(fmt::format("basket of branch '{}' exceeds 4 GiB", p.decl.name));

    uint32_t usize = static_cast<uint32_t>(payload.size());
    uint32_t crc = crc32_ieee(payload);

    Codec codec = Codec::None;
    std::vector<std::byte> stored;
    if (options_.compression == Codec::Deflate) {
      stored = deflate_compress(payload, options_.deflate_level);
      if (stored.size() < payload.size()) {
        codec = Codec::Deflate;
      } else {
        stored.clear();  // no gain; store raw
      }
    }
    const std::vector<std::byte>& body = codec == Codec::None ? payload : stored;

    BasketRef ref;
    ref.file_offset = sink_.tell();
    ref.uncompressed_size = usize;
    ref.compressed_size = static_cast<uint32_t>(body.size());
    ref.event_count = pending_events_;
    ref.crc32 = crc;

    std::vector<std::byte> head(kBasketHeaderSize);
    head[0] = static_cast<std::byte>(codec);
    wire::store_le<uint32_t>(head.data() + 1, ref.uncompressed_size);
    wire::store_le<uint32_t>(head.data() + 5, ref.compressed_size);
    wire::store_le<uint32_t>(head.data() + 9, ref.crc32);
    sink_.write(head);
    sink_.write(body);

    branches_[i].baskets.push_back(ref);
    p.clear();
  }
  pending_events_ = 0;
}

Schema DatasetWriter::finish() {
  if (finished_) throw UserError("finish called twice");
  finished_ = true;
  flush_row_group();

  Schema schema{.branches = branches_, .event_count = event_count_};
  schema.validate();

  std::string json = schema_to_json(schema);
  uint64_t footer_offset = sink_.tell();
  std::vector<std::byte> footer(json.size() + 4);
  std::memcpy(footer.data(), json.data(), json.size());
  wire::store_le<uint32_t>(
      footer.data() + json.size(),
      crc32_ieee({reinterpret_cast<const std::byte*>(json.data()), json.size()}));
  sink_.write(footer);

  write_header(sink_, footer_offset, footer.size());
  sink_.close();
  return schema;
}

Schema write_dataset(const std::string& path, std::vector<BranchDecl> branches,
                     const std::vector<Row>& rows, WriteOptions options) {
  DatasetWriter w(path, std::move(branches), options);
  for (const auto& r : rows) w.append(r);
  return w.finish();
}

}  // namespace ntuplex::ntf
