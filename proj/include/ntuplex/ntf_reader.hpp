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

#include <optional>
#include <string>
#include <vector>

#include "ntuplex/bytes.hpp"
#include "ntuplex/expr.hpp"
#include "ntuplex/ntf.hpp"
#include "ntuplex/timing.hpp"

namespace ntuplex::ntf {

/// Reads the schema and basket index, touching only the header and footer —
/// never the baskets. The schema always comes from the file itself.
Schema read_schema(ByteSource& src);

/// Reads, verifies (CRC-32 over the uncompressed payload) and decodes one
/// basket. `cpu` accounts decompress+decode time when provided.
Column read_basket(ByteSource& src, const BranchDescriptor& branch,
                   size_t basket_index, CpuClock* cpu = nullptr);

struct ReadOptions {
  /// Branches to materialize. May be empty (rows are still counted, e.g.
  /// for bare event counting with maximal pruning).
  std::vector<std::string> selection;
  /// Boolean expression filtering rows; empty = keep all.
  expr::Expr predicate;
  size_t batch_rows = 65536;
  CpuClock* cpu = nullptr;
};

/// Streaming filtered/pruned scan. Predicate evaluation is basket-granular:
/// per row group the predicate branches' baskets are read and the row mask
/// computed; baskets of selected branches are then read only if any row
/// survives. Baskets of branches that are neither selected nor referenced by
/// the predicate are never read.
class EventReader {
public:
  EventReader(ByteSource& src, ReadOptions options);
  EventReader(ByteSource& src, Schema schema, ReadOptions options);

  const Schema& schema() const { return schema_; }

  /// Next batch of surviving rows (selection columns only), or nullopt at
  /// end of file. Row order is preserved.
  std::optional<EventBatch> next();

private:
  void init();
  void load_group(size_t g);

  ByteSource& src_;
  Schema schema_;
  ReadOptions options_;
  std::vector<const BranchDescriptor*> selected_;
  std::vector<const BranchDescriptor*> predicate_fields_;
  size_t group_ = 0;
  std::vector<Column> builders_;
  size_t builder_rows_ = 0;
};

/// Whole-file scan into one batch (tests, small files).
EventBatch read_all_events(ByteSource& src, ReadOptions options = {});

}  // namespace ntuplex::ntf
