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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ntuplex {

/// Running tally of bytes transferred through a byte source. Exact, never
/// estimated; atomic so concurrent basket reads may share one source.
class ReadCounter {
public:
  void add(uint64_t n) {
    bytes_.fetch_add(n, std::memory_order_relaxed);
    reads_.fetch_add(1, std::memory_order_relaxed);
  }
  uint64_t bytes() const { return bytes_.load(std::memory_order_relaxed); }
  uint64_t reads() const { return reads_.load(std::memory_order_relaxed); }
  void reset() { bytes_ = 0; reads_ = 0; }

private:
  std::atomic<uint64_t> bytes_{0};
  std::atomic<uint64_t> reads_{0};
};

/// Random-access byte source. Readers are positional and stateless, so one
/// source supports concurrent reads of distinct ranges. Every read is
/// accounted in counter().
class ByteSource {
public:
  virtual ~ByteSource() = default;

  /// Reads up to out.size() bytes at absolute offset. Returns the number of
  /// bytes read; short only at end of file (offset past EOF reads 0).
  virtual size_t read_at(uint64_t offset, std::span<std::byte> out) = 0;

  virtual uint64_t size() const = 0;

  /// Identifier used in error messages (path or URL).
  virtual const std::string& name() const = 0;

  ReadCounter& counter() { return counter_; }
  const ReadCounter& counter() const { return counter_; }

protected:
  ReadCounter counter_;
};

/// Local file source backed by pread(2).
class FileSource : public ByteSource {
public:
  explicit FileSource(const std::string& path);
  ~FileSource() override;

  FileSource(const FileSource&) = delete;
  FileSource& operator=(const FileSource&) = delete;

  size_t read_at(uint64_t offset, std::span<std::byte> out) override;
  uint64_t size() const override { return size_; }
  const std::string& name() const override { return path_; }

private:
  std::string path_;
  int fd_ = -1;
  uint64_t size_ = 0;
};

/// In-memory source, used by tests and zero-read-time experiments.
class MemorySource : public ByteSource {
public:
  explicit MemorySource(std::vector<std::byte> data, std::string name = "<memory>")
      : data_(std::move(data)), name_(std::move(name)) {}

  size_t read_at(uint64_t offset, std::span<std::byte> out) override;
  uint64_t size() const override { return data_.size(); }
  const std::string& name() const override { return name_; }

private:
  std::vector<std::byte> data_;
  std::string name_;
};

/// Reads exactly out.size() bytes or throws CorruptionError (truncated file).
void read_exact(ByteSource& src, uint64_t offset, std::span<std::byte> out);

/// Buffered sequential file writer with seek-back support for patching the
/// header after the footer lands. Single-threaded per file.
class FileSink {
public:
  explicit FileSink(const std::string& path);
  ~FileSink();

  FileSink(const FileSink&) = delete;
  FileSink& operator=(const FileSink&) = delete;

  void write(std::span<const std::byte> data);
  void write_at(uint64_t offset, std::span<const std::byte> data);
  uint64_t tell() const { return pos_; }
  void close();
  const std::string& path() const { return path_; }

private:
  std::string path_;
  std::FILE* file_ = nullptr;
  uint64_t pos_ = 0;
};

}  // namespace ntuplex
