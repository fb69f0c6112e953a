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

#include <span>
#include <string>

#include "ntuplex/bytes.hpp"
#include "ntuplex/expr.hpp"
#include "ntuplex/ntf_writer.hpp"

// Disk-to-disk reduction steps. Skimming drops events; slimming drops
// branches. Both stream batch by batch and never materialize the input.
// Their in-memory counterparts (filtering events, pruning branches) are the
// predicate/selection arguments of EventReader.

namespace ntuplex::pipeline {

struct SkimCounts {
  uint64_t in = 0;
  uint64_t out = 0;
};

/// Copies events passing `predicate` into a new file with the same branch
/// layout, preserving order. The predicate is type-checked before any
/// output is created.
SkimCounts skim(ByteSource& input, const expr::Expr& predicate,
                const std::string& output_path, ntf::WriteOptions options = {});

/// Copies only the `keep` branches (in the given order) into a new file
/// with the same events. Baskets of dropped branches are never read.
ntf::Schema slim(ByteSource& input, std::span<const std::string> keep,
                 const std::string& output_path, ntf::WriteOptions options = {});

}  // namespace ntuplex::pipeline
