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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ntuplex {

/// CRC-32, IEEE 802.3 polynomial (the zlib/PNG one).
uint32_t crc32_ieee(std::span<const std::byte> data);

/// Raw DEFLATE (RFC 1951, no zlib/gzip wrapper). level -1 = zlib default.
std::vector<std::byte> deflate_compress(std::span<const std::byte> data,
                                        int level = -1);

/// Inflates a raw DEFLATE stream; `expected_size` must match exactly or
/// CorruptionError is thrown.
std::vector<std::byte> deflate_decompress(std::span<const std::byte> data,
                                          size_t expected_size);

}  // namespace ntuplex
