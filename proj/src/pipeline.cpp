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

#include "ntuplex/pipeline.hpp"

#include <fmt/format.h>

#include "ntuplex/errors.hpp"
#include "ntuplex/ntf_reader.hpp"

namespace ntuplex::pipeline {

SkimCounts skim(ByteSource& input, const expr::Expr& predicate,
                const std::string& output_path, ntf::WriteOptions options) {
  ntf::Schema schema = ntf::read_schema(input);

  ntf::ReadOptions read;
  for (const auto& b : schema.branches) read.selection.push_back(b.name);
  read.predicate = predicate;
  // Validates the predicate before the output file exists.
  ntf::EventReader reader(input, schema, std::move(read));

  ntf::DatasetWriter writer(output_path, schema.decls(), options);
  while (auto batch = reader.next()) writer.append(*batch);
  ntf::Schema out = writer.finish();
  return {.in = schema.event_count, .out = out.event_count};
}

ntf::Schema slim(ByteSource& input, std::span<const std::string> keep,
                 const std::string& output_path, ntf::WriteOptions options) {
  if (keep.empty()) throw UserError("slim requires a non-empty branch list");
  ntf::Schema schema = ntf::read_schema(input);

  ntf::ReadOptions read;
  std::vector<ntf::BranchDecl> decls;
  for (const auto& name : keep) {
    const auto& b = schema.at(name);
    read.selection.push_back(b.name);
    decls.push_back({b.name, b.type});
  }
  ntf::EventReader reader(input, schema, std::move(read));

  ntf::DatasetWriter writer(output_path, std::move(decls), options);
  while (auto batch = reader.next()) writer.append(*batch);
  return writer.finish();
}

}  // namespace ntuplex::pipeline
