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

#include <fcntl.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>

#include <fmt/format.h>

#include "ntuplex/errors.hpp"
#include "ntuplex/log.hpp"
#include "ntuplex/wire.hpp"
#include "remote_internal.hpp"

namespace ntuplex::remote {

namespace {

struct OpenFile {
  int fd = -1;
  uint64_t size = 0;
  std::string path;
};

struct ConnState {
  std::map<uint32_t, OpenFile> handles;
  uint32_t next_handle = 1;

  ~ConnState() {
    for (auto& [id, f] : handles)
      if (f.fd >= 0) ::close(f.fd);
  }
};

Frame error_frame(uint32_t request_id, Status status, std::string_view message) {
  Frame f;
  f.code = static_cast<uint8_t>(status);
  f.request_id = request_id;
  f.payload.resize(message.size());
  std::memcpy(f.payload.data(), message.data(), message.size());
  return f;
}

Frame ok_frame(uint32_t request_id, std::vector<std::byte> payload = {}) {
  Frame f;
  f.code = static_cast<uint8_t>(Status::Ok);
  f.request_id = request_id;
  f.payload = std::move(payload);
  return f;
}

/// Confines a request path to the export root: relative, no empty, "." or
/// ".." components. Returns false if the path escapes.
bool safe_path(std::string_view path, bool allow_empty) {
  if (path.empty()) return allow_empty;
  if (path.front() == '/') return false;
  size_t pos = 0;
  while (pos <= path.size()) {
    size_t next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    std::string_view part = path.substr(pos, next - pos);
    if (part.empty() || part == "." || part == "..") return false;
    pos = next + 1;
  }
  return true;
}

std::optional<std::string> parse_path_payload(std::span<const std::byte> payload) {
  if (payload.size() < 2) return std::nullopt;
  wire::Cursor cur(payload);
  uint16_t len = cur.get<uint16_t>();
  if (cur.remaining() != len) return std::nullopt;
  auto bytes = cur.take(len);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace

Server::Server(std::filesystem::path root, std::string host, uint16_t port,
               ServerOptions options)
    : root_(std::move(root)), host_(std::move(host)), port_(port), options_(options) {}

Server::~Server() { stop(); }

void Server::start() {
  if (!std::filesystem::is_directory(root_))
    throw IoError(fmt::format("export root '{}' is not a directory", root_.string()));
  listen_fd_ = detail::listen_socket(host_, port_, &port_);
  log::info("serving '{}' on {}:{}", root_.string(), host_, port_);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
    if (listen_fd_ >= 0) {
      ::shutdown(listen_fd_, SHUT_RDWR);
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    threads.swap(conn_threads_);
  }
  for (auto& t : threads)
    if (t.joinable()) t.join();
}

void Server::accept_loop() {
  for (;;) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;  // listen socket closed by stop()
    }
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    live_fds_.push_back(fd);
    conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Server::serve_connection(int fd) {
  ConnState state;
  const std::string peer = "client";
  try {
    for (;;) {
      auto req = detail::recv_frame(fd, peer);
      if (!req) break;

      Frame resp;
      const uint32_t id = req->request_id;
      switch (static_cast<Opcode>(req->code)) {
        case Opcode::Open: {
          auto path = parse_path_payload(req->payload);
          if (!path) {
            resp = error_frame(id, Status::ProtocolError, "malformed OPEN payload");
            break;
          }
          if (!safe_path(*path, false)) {
            resp = error_frame(id, Status::AccessDenied,
                               fmt::format("path '{}' escapes the export root", *path));
            break;
          }
          std::filesystem::path full = root_ / *path;
          struct stat st{};
          if (::stat(full.c_str(), &st) != 0 || !S_ISREG(st.st_mode)) {
            resp = error_frame(id, Status::NotFound,
                               fmt::format("no such file '{}'", *path));
            break;
          }
          int file_fd = ::open(full.c_str(), O_RDONLY);
          if (file_fd < 0) {
            resp = error_frame(id, Status::IoError,
                               fmt::format("cannot open '{}': {}", *path,
                                           std::strerror(errno)));
            break;
          }
          uint32_t handle = state.next_handle++;
          state.handles[handle] =
              OpenFile{file_fd, static_cast<uint64_t>(st.st_size), *path};
          std::vector<std::byte> payload;
          wire::append_le<uint32_t>(payload, handle);
          wire::append_le<uint64_t>(payload, static_cast<uint64_t>(st.st_size));
          resp = ok_frame(id, std::move(payload));
          break;
        }
        case Opcode::Read: {
          if (req->payload.size() != 16) {
            resp = error_frame(id, Status::ProtocolError, "malformed READ payload");
            break;
          }
          wire::Cursor cur(req->payload);
          uint32_t handle = cur.get<uint32_t>();
          uint64_t offset = cur.get<uint64_t>();
          uint32_t len = cur.get<uint32_t>();
          auto it = state.handles.find(handle);
          if (it == state.handles.end()) {
            resp = error_frame(id, Status::BadHandle,
                               fmt::format("unknown handle {}", handle));
            break;
          }
          if (len > kMaxPayload) {
            resp = error_frame(id, Status::ProtocolError,
                               fmt::format("read of {} bytes exceeds frame cap", len));
            break;
          }
          if (options_.read_delay.count() > 0)
            std::this_thread::sleep_for(options_.read_delay);
          const OpenFile& file = it->second;
          uint64_t avail = offset >= file.size ? 0 : file.size - offset;
          size_t want = static_cast<size_t>(std::min<uint64_t>(len, avail));
          std::vector<std::byte> data(want);
          size_t got = 0;
          bool failed = false;
          while (got < want) {
            ssize_t n = ::pread(file.fd, data.data() + got, want - got,
                                static_cast<off_t>(offset + got));
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) {
              failed = true;
              break;
            }
            got += static_cast<size_t>(n);
          }
          if (failed) {
            resp = error_frame(id, Status::IoError,
                               fmt::format("read failed on '{}'", file.path));
            break;
          }
          data.resize(got);
          resp = ok_frame(id, std::move(data));
          break;
        }
        case Opcode::Stat: {
          auto path = parse_path_payload(req->payload);
          if (!path) {
            resp = error_frame(id, Status::ProtocolError, "malformed STAT payload");
            break;
          }
          if (!safe_path(*path, false)) {
            resp = error_frame(id, Status::AccessDenied,
                               fmt::format("path '{}' escapes the export root", *path));
            break;
          }
          struct stat st{};
          if (::stat((root_ / *path).c_str(), &st) != 0 || !S_ISREG(st.st_mode)) {
            resp = error_frame(id, Status::NotFound,
                               fmt::format("no such file '{}'", *path));
            break;
          }
          std::vector<std::byte> payload;
          wire::append_le<uint64_t>(payload, static_cast<uint64_t>(st.st_size));
          resp = ok_frame(id, std::move(payload));
          break;
        }
        case Opcode::Close: {
          if (req->payload.size() != 4) {
            resp = error_frame(id, Status::ProtocolError, "malformed CLOSE payload");
            break;
          }
          uint32_t handle = wire::load_le<uint32_t>(req->payload.data());
          auto it = state.handles.find(handle);
          if (it == state.handles.end()) {
            resp = error_frame(id, Status::BadHandle,
                               fmt::format("unknown handle {}", handle));
            break;
          }
          ::close(it->second.fd);
          state.handles.erase(it);
          resp = ok_frame(id);
          break;
        }
        case Opcode::List: {
          auto path = parse_path_payload(req->payload);
          if (!path) {
            resp = error_frame(id, Status::ProtocolError, "malformed LIST payload");
            break;
          }
          if (!safe_path(*path, true)) {
            resp = error_frame(id, Status::AccessDenied,
                               fmt::format("path '{}' escapes the export root", *path));
            break;
          }
          std::filesystem::path dir = path->empty() ? root_ : root_ / *path;
          std::error_code ec;
          if (!std::filesystem::is_directory(dir, ec)) {
            resp = error_frame(id, Status::NotFound,
                               fmt::format("no such directory '{}'", *path));
            break;
          }
          std::vector<DirEntry> entries;
          for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
            DirEntry d;
            d.name = e.path().filename().string();
            if (d.name.size() > 0xffff) continue;
            d.is_dir = e.is_directory(ec);
            d.size = d.is_dir ? 0 : e.file_size(ec);
            entries.push_back(std::move(d));
          }
          std::sort(entries.begin(), entries.end(),
                    [](const DirEntry& a, const DirEntry& b) { return a.name < b.name; });
          std::vector<std::byte> payload;
          wire::append_le<uint32_t>(payload, static_cast<uint32_t>(entries.size()));
          for (const auto& e : entries) {
            wire::append_le<uint16_t>(payload, static_cast<uint16_t>(e.name.size()));
            wire::append_bytes(payload,
                               {reinterpret_cast<const std::byte*>(e.name.data()),
                                e.name.size()});
            wire::append_le<uint64_t>(payload, e.size);
            payload.push_back(static_cast<std::byte>(e.is_dir ? 1 : 0));
          }
          resp = ok_frame(id, std::move(payload));
          break;
        }
        default:
          resp = error_frame(id, Status::ProtocolError,
                             fmt::format("unknown opcode {}", req->code));
          break;
      }
      detail::send_frame(fd, resp, peer);
    }
  } catch (const RemoteError& e) {
    log::debug("connection ended: {}", e.what());
  }
  ::close(fd);
  std::lock_guard lock(mu_);
  std::erase(live_fds_, fd);
}

}  // namespace ntuplex::remote
