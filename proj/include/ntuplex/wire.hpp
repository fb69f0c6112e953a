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

#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

// Little-endian encode/decode helpers shared by the file format and the
// wire protocol.

namespace ntuplex::wire {

template <typename T>
concept Codable = std::integral<T> || std::floating_point<T>;

template <Codable T>
inline T load_le(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    if constexpr (sizeof(T) > 1) {
      auto bits = std::bit_cast<std::array<std::byte, sizeof(T)>>(v);
      std::reverse(bits.begin(), bits.end());
      v = std::bit_cast<T>(bits);
    }
  }
  return v;
}

template <Codable T>
inline void store_le(std::byte* p, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    if constexpr (sizeof(T) > 1) {
      auto bits = std::bit_cast<std::array<std::byte, sizeof(T)>>(v);
      std::reverse(bits.begin(), bits.end());
      v = std::bit_cast<T>(bits);
    }
  }
  std::memcpy(p, &v, sizeof(T));
}

template <Codable T>
inline void append_le(std::vector<std::byte>& buf, T v) {
  size_t n = buf.size();
  buf.resize(n + sizeof(T));
  store_le(buf.data() + n, v);
}

inline void append_bytes(std::vector<std::byte>& buf,
                         std::span<const std::byte> bytes) {
  buf.insert(buf.end(), bytes.begin(), bytes.end());
}

/// Sequential reader over a byte span; bounds-checked by the caller's
/// contract (ok() / remaining()).
class Cursor {
public:
  explicit Cursor(std::span<const std::byte> data) : data_(data) {}

  template <Codable T>
  T get() {
    T v = load_le<T>(data_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::byte> take(size_t n) {
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  size_t remaining() const { return data_.size() - pos_; }
  size_t pos() const { return pos_; }
  bool fits(size_t n) const { return pos_ + n <= data_.size(); }

private:
  std::span<const std::byte> data_;
  size_t pos_ = 0;
};

}  // namespace ntuplex::wire
