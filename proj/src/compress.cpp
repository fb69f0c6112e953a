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

#include "ntuplex/compress.hpp"

#include <zlib.h>

#include <fmt/format.h>

#include "ntuplex/errors.hpp"

namespace ntuplex {

uint32_t crc32_ieee(std::span<const std::byte> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // crc32() takes uInt lengths; feed large buffers in chunks.
  const auto* p = reinterpret_cast<const Bytef*>(data.data());
  size_t left = data.size();
  while (left > 0) {
    uInt chunk = static_cast<uInt>(std::min<size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

// windowBits = -15 selects a raw RFC 1951 stream (no zlib header/trailer).
std::vector<std::byte> deflate_compress(std::span<const std::byte> data, int level) {
  z_stream strm{};
  if (deflateInit2(&strm, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("deflateInit2 failed");

  std::vector<std::byte> out(deflateBound(&strm, static_cast<uLong>(data.size())));
  strm.next_in = const_cast<Bytef*>(reinterpret_cast<const Bytef*>(data.data()));
  strm.avail_in = static_cast<uInt>(data.size());
  strm.next_out = reinterpret_cast<Bytef*>(out.data());
  strm.avail_out = static_cast<uInt>(out.size());

  int rc = deflate(&strm, Z_FINISH);
  if (rc != Z_STREAM_END) {
    deflateEnd(&strm);
    throw Error(fmt::format("deflate failed: {}", rc));
  }
  out.resize(strm.total_out);
  deflateEnd(&strm);
  return out;
}

std::vector<std::byte> deflate_decompress(std::span<const std::byte> data,
                                          size_t expected_size) {
  z_stream strm{};
  if (inflateInit2(&strm, -15) != Z_OK) throw Error("inflateInit2 failed");

  std::vector<std::byte> out(expected_size);
  strm.next_in = const_cast<Bytef*>(reinterpret_cast<const Bytef*>(data.data()));
  strm.avail_in = static_cast<uInt>(data.size());
  strm.next_out = reinterpret_cast<Bytef*>(out.data());
  strm.avail_out = static_cast<uInt>(out.size());

  int rc = inflate(&strm, Z_FINISH);
  bool complete = rc == Z_STREAM_END && strm.total_out == expected_size;
  inflateEnd(&strm);
  if (!complete)
    throw CorruptionError(fmt::format(
        "deflate stream corrupt: rc={} produced={} expected={}", rc,
        static_cast<size_t>(strm.total_out), expected_size));
  return out;
}

}  // namespace ntuplex
