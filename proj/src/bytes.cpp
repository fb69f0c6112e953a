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

#include "ntuplex/bytes.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <fmt/format.h>

#include "ntuplex/errors.hpp"

namespace ntuplex {

FileSource::FileSource(const std::string& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_RDONLY);
  if (fd_ < 0)
    throw IoError(fmt::format("cannot open '{}': {}", path, std::strerror(errno)));
  struct stat st{};
  if (::fstat(fd_, &st) != 0) {
    int err = errno;
    ::close(fd_);
    fd_ = -1;
    throw IoError(fmt::format("cannot stat '{}': {}", path, std::strerror(err)));
  }
  size_ = static_cast<uint64_t>(st.st_size);
}

FileSource::~FileSource() {
  if (fd_ >= 0) ::close(fd_);
}

size_t FileSource::read_at(uint64_t offset, std::span<std::byte> out) {
  size_t total = 0;
  while (total < out.size()) {
    ssize_t n = ::pread(fd_, out.data() + total, out.size() - total,
                        static_cast<off_t>(offset + total));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(fmt::format("read failed on '{}': {}", path_, std::strerror(errno)));
    }
    if (n == 0) break;  // EOF
    total += static_cast<size_t>(n);
  }
  counter_.add(total);
  return total;
}

size_t MemorySource::read_at(uint64_t offset, std::span<std::byte> out) {
  if (offset >= data_.size()) {
    counter_.add(0);
    return 0;
  }
  size_t n = std::min(out.size(), data_.size() - static_cast<size_t>(offset));
  std::memcpy(out.data(), data_.data() + offset, n);
  counter_.add(n);
  return n;
}

void read_exact(ByteSource& src, uint64_t offset, std::span<std::byte> out) {
  size_t n = src.read_at(offset, out);
  if (n != out.size())
    throw CorruptionError(fmt::format(
        "truncated file '{}': wanted {} bytes at offset {}, got {}", src.name(),
        out.size(), offset, n));
}

FileSink::FileSink(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_)
    throw IoError(fmt::format("cannot create '{}': {}", path, std::strerror(errno)));
}

FileSink::~FileSink() {
  if (file_) std::fclose(file_);
}

void FileSink::write(std::span<const std::byte> data) {
  if (!file_) throw IoError(fmt::format("write to closed sink '{}'", path_));
  if (std::fwrite(data.data(), 1, data.size(), file_) != data.size())
    throw IoError(fmt::format("write failed on '{}': {}", path_, std::strerror(errno)));
  pos_ += data.size();
}

void FileSink::write_at(uint64_t offset, std::span<const std::byte> data) {
  if (!file_) throw IoError(fmt::format("write to closed sink '{}'", path_));
  if (std::fseek(file_, static_cast<long>(offset), SEEK_SET) != 0)
    throw IoError(fmt::format("seek failed on '{}': {}", path_, std::strerror(errno)));
  if (std::fwrite(data.data(), 1, data.size(), file_) != data.size())
    throw IoError(fmt::format("write failed on '{}': {}", path_, std::strerror(errno)));
  if (std::fseek(file_, static_cast<long>(pos_), SEEK_SET) != 0)
    throw IoError(fmt::format("seek failed on '{}': {}", path_, std::strerror(errno)));
}

void FileSink::close() {
  if (!file_) return;
  int rc = std::fclose(file_);
  file_ = nullptr;
  if (rc != 0)
    throw IoError(fmt::format("close failed on '{}': {}", path_, std::strerror(errno)));
}

}  // namespace ntuplex
