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

#include <string>
#include <variant>
#include <vector>

#include "ntuplex/bytes.hpp"
#include "ntuplex/ntf.hpp"

namespace ntuplex::ntf {

struct WriteOptions {
  Codec compression = Codec::None;
  size_t basket_target_bytes = 65536;
  int deflate_level = -1;  // zlib default
};

/// One value of one branch in one event.
using Cell = std::variant<float, double, int32_t, int64_t, std::vector<float>>;
/// One event, cells aligned with the declared branch order.
using Row = std::vector<Cell>;

/// Streaming single-pass writer. Rows go into per-branch buffers; when any
/// branch's pending payload reaches the basket target, all branches flush
/// together so baskets stay row-aligned. Fixed-width branches cut before the
/// event that would cross the target; a variable-length event that crosses
/// stays in the current basket (events never split). The footer with the
/// schema and basket index is written last and the header patched to point
/// at it.
class DatasetWriter {
public:
  DatasetWriter(const std::string& path, std::vector<BranchDecl> branches,
                WriteOptions options = {});

  void append(const Row& row);

  /// Appends every row of the batch. The batch must carry exactly the
  /// declared branches (any column order).
  void append(const EventBatch& batch);

  /// Flushes the last basket, writes the footer, patches the header and
  /// closes the file. Must be called exactly once.
  Schema finish();

  uint64_t events_written() const { return event_count_; }

private:
  struct Pending {
    BranchDecl decl;
    std::vector<std::byte> scalar_bytes;  // scalar branches, LE-encoded
    std::vector<float> var_values;        // VarF32 branches
    std::vector<uint32_t> var_lens;
    size_t payload_size() const;
    void clear();
  };

  void check_fixed_cut();
  void check_var_cut();
  void flush_row_group();

  FileSink sink_;
  WriteOptions options_;
  std::vector<Pending> pending_;
  std::vector<BranchDescriptor> branches_;
  uint64_t event_count_ = 0;
  uint64_t pending_events_ = 0;
  bool finished_ = false;
};

/// Convenience one-shot writer.
Schema write_dataset(const std::string& path, std::vector<BranchDecl> branches,
                     const std::vector<Row>& rows, WriteOptions options = {});

}  // namespace ntuplex::ntf
