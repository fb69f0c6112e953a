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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ntuplex/bytes.hpp"

// Minimal byte-range file access protocol over TCP. A server exports a
// directory tree read-only; the client exposes remote files through the
// same ByteSource interface as local ones, so readers and analyses run
// unmodified against remote data.
//
// Wire format (little-endian). Request and response frames share the shape
//   length u32 | code u8 | request_id u32 | payload
// where length counts code+request_id+payload (5 + payload bytes) and the
// payload is capped at 16 MiB. Request codes are opcodes (OPEN=1 READ=2
// STAT=3 CLOSE=4 LIST=5); response codes are status (0 = OK).
//
// Payloads:
//   OPEN  req: u16 path_len | path          ok: handle u32 | size u64
//   READ  req: handle u32 | offset u64 | len u32   ok: data (short at EOF)
//   STAT  req: u16 path_len | path          ok: size u64
//   CLOSE req: handle u32                   ok: empty
//   LIST  req: u16 path_len | path          ok: u32 count | entries,
//         entry = u16 name_len | name | u64 size | u8 is_dir
// Error responses carry a UTF-8 message as payload.

namespace ntuplex::remote {

inline constexpr uint32_t kMaxPayload = 16u * 1024 * 1024;
inline constexpr size_t kFrameOverhead = 5;  // code + request_id

enum class Opcode : uint8_t { Open = 1, Read = 2, Stat = 3, Close = 4, List = 5 };

enum class Status : uint8_t {
  Ok = 0,
  NotFound = 1,
  AccessDenied = 2,
  BadHandle = 3,
  ProtocolError = 4,
  IoError = 5,
};

std::string_view status_name(Status s);

struct Frame {
  uint8_t code = 0;  // opcode or status
  uint32_t request_id = 0;
  std::vector<std::byte> payload;

  bool operator==(const Frame&) const = default;
};

/// Length-prefixed encoding of a frame.
std::vector<std::byte> encode_frame(const Frame& f);

/// Decodes a full frame (including the length prefix); throws RemoteError
/// on malformed input.
Frame decode_frame(std::span<const std::byte> bytes);

struct ServerOptions {
  /// Artificial per-READ latency, for storage-backend experiments.
  std::chrono::milliseconds read_delay{0};
};

/// Serves a directory tree. Connections are handled concurrently, requests
/// within one connection in order. Paths are confined to the root; any
/// ".." or absolute path is rejected with ACCESS_DENIED. Request-level
/// errors produce error frames, never connection teardown.
class Server {
public:
  Server(std::filesystem::path root, std::string host, uint16_t port,
         ServerOptions options = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting; throws RemoteError on bind failure.
  void start();
  void stop();

  /// The bound port (useful with port 0).
  uint16_t port() const { return port_; }

private:
  struct Connection;
  void accept_loop();
  void serve_connection(int fd);

  std::filesystem::path root_;
  std::string host_;
  uint16_t port_;
  ServerOptions options_;
  int listen_fd_ = -1;
  std::thread accept_thread_;
  std::mutex mu_;
  bool stopping_ = false;
  std::vector<int> live_fds_;
  std::vector<std::thread> conn_threads_;
};

struct RemoteHandle {
  uint32_t id = 0;
  uint64_t size = 0;
  std::string path;
};

struct DirEntry {
  std::string name;
  uint64_t size = 0;
  bool is_dir = false;
};

struct ClientStats {
  uint64_t requests = 0;
  uint64_t reads_issued = 0;
  uint64_t read_payload_bytes = 0;
};

/// One connection. Issues one request at a time (serialized internally);
/// share across threads only if serialized access is acceptable — for
/// concurrency use independent connections.
class Client {
public:
  Client(std::string host, uint16_t port);  // connects; throws RemoteError
  ~Client();

  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  RemoteHandle open(const std::string& path);
  /// Returns min(out.size(), file_size - offset) bytes; offsets past EOF
  /// read 0 bytes. Never an error.
  size_t read_at(const RemoteHandle& handle, uint64_t offset,
                 std::span<std::byte> out);
  uint64_t stat(const std::string& path);
  void close_handle(const RemoteHandle& handle);
  std::vector<DirEntry> list(const std::string& path);

  ClientStats stats() const;

private:
  std::pair<Status, std::vector<std::byte>> request(
      Opcode op, std::span<const std::byte> payload, const std::string& context);

  std::string host_;
  uint16_t port_;
  int fd_ = -1;
  uint32_t next_id_ = 1;
  mutable std::mutex mu_;
  ClientStats stats_;
};

struct RemoteUrl {
  std::string host;
  uint16_t port = 0;
  std::string path;
};

/// Parses ntfp://host:port/path; nullopt if the scheme does not match.
std::optional<RemoteUrl> parse_url(std::string_view url);

/// ByteSource over a remote file, one connection per source. With
/// readahead_bytes > 0 each fetch grabs at least that much and nearby reads
/// are served from the cached window (off by default: deterministic
/// round-trip counts).
class RemoteSource : public ByteSource {
public:
  RemoteSource(const RemoteUrl& url, size_t readahead_bytes = 0);
  ~RemoteSource() override;

  size_t read_at(uint64_t offset, std::span<std::byte> out) override;
  uint64_t size() const override { return handle_.size; }
  const std::string& name() const override { return name_; }

  const Client& client() const { return *client_; }

private:
  std::unique_ptr<Client> client_;
  RemoteHandle handle_;
  std::string name_;
  size_t readahead_;
  std::mutex cache_mu_;
  uint64_t cache_offset_ = 0;
  std::vector<std::byte> cache_;
};

}  // namespace ntuplex::remote
