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

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include <fmt/format.h>

#include "ntuplex/errors.hpp"
#include "ntuplex/wire.hpp"
#include "remote_internal.hpp"

namespace ntuplex::remote {

std::string_view status_name(Status s) {
  switch (s) {
    case Status::Ok: return "OK";
    case Status::NotFound: return "NOT_FOUND";
    case Status::AccessDenied: return "ACCESS_DENIED";
    case Status::BadHandle: return "BAD_HANDLE";
    case Status::ProtocolError: return "PROTOCOL_ERROR";
    case Status::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

std::vector<std::byte> encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxPayload)
    throw RemoteError(fmt::format("frame payload of {} bytes exceeds the {} MiB cap",
                                  f.payload.size(), kMaxPayload >> 20));
  std::vector<std::byte> out;
  out.reserve(4 + kFrameOverhead + f.payload.size());
  wire::append_le<uint32_t>(out, static_cast<uint32_t>(kFrameOverhead + f.payload.size()));
  out.push_back(static_cast<std::byte>(f.code));
  wire::append_le<uint32_t>(out, f.request_id);
  wire::append_bytes(out, f.payload);
  return out;
}

Frame decode_frame(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 + kFrameOverhead)
    throw RemoteError("frame shorter than the fixed header");
  uint32_t length = wire::load_le<uint32_t>(bytes.data());
  if (length < kFrameOverhead || length > kFrameOverhead + kMaxPayload)
    throw RemoteError(fmt::format("frame length {} out of range", length));
  if (bytes.size() != 4 + static_cast<size_t>(length))
    throw RemoteError(fmt::format("frame length {} does not match buffer of {} bytes",
                                  length, bytes.size()));
  Frame f;
  f.code = static_cast<uint8_t>(bytes[4]);
  f.request_id = wire::load_le<uint32_t>(bytes.data() + 5);
  f.payload.assign(bytes.begin() + 9, bytes.end());
  return f;
}

std::optional<RemoteUrl> parse_url(std::string_view url) {
  constexpr std::string_view scheme = "ntfp://";
  if (!url.starts_with(scheme)) return std::nullopt;
  std::string_view rest = url.substr(scheme.size());
  size_t slash = rest.find('/');
  std::string_view hostport = slash == std::string_view::npos ? rest : rest.substr(0, slash);
  std::string_view path = slash == std::string_view::npos ? "" : rest.substr(slash + 1);
  size_t colon = hostport.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw UserError(fmt::format("remote URL '{}' needs host:port", url));
  uint16_t port = 0;
  auto ps = hostport.substr(colon + 1);
  auto rc = std::from_chars(ps.data(), ps.data() + ps.size(), port);
  if (rc.ec != std::errc{} || rc.ptr != ps.data() + ps.size() || port == 0)
    throw UserError(fmt::format("remote URL '{}' has a bad port", url));
  return RemoteUrl{std::string(hostport.substr(0, colon)), port, std::string(path)};
}

namespace detail {

void send_all(int fd, std::span<const std::byte> data, const std::string& peer) {
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw RemoteError(fmt::format("connection to {} lost: {}", peer, std::strerror(errno)));
    }
    sent += static_cast<size_t>(n);
  }
}

bool recv_all(int fd, std::span<std::byte> out, const std::string& peer) {
  size_t got = 0;
  while (got < out.size()) {
    ssize_t n = ::recv(fd, out.data() + got, out.size() - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw RemoteError(fmt::format("connection to {} lost: {}", peer, std::strerror(errno)));
    }
    if (n == 0) {
      if (got == 0) return false;
      throw RemoteError(fmt::format("connection to {} closed mid-frame", peer));
    }
    got += static_cast<size_t>(n);
  }
  return true;
}

std::optional<Frame> recv_frame(int fd, const std::string& peer) {
  std::byte len_bytes[4];
  if (!recv_all(fd, len_bytes, peer)) return std::nullopt;
  uint32_t length = wire::load_le<uint32_t>(len_bytes);
  if (length < kFrameOverhead || length > kFrameOverhead + kMaxPayload)
    throw RemoteError(fmt::format("peer {} sent frame length {} out of range", peer, length));
  std::vector<std::byte> rest(length);
  if (!recv_all(fd, rest, peer))
    throw RemoteError(fmt::format("connection to {} closed mid-frame", peer));
  Frame f;
  f.code = static_cast<uint8_t>(rest[0]);
  f.request_id = wire::load_le<uint32_t>(rest.data() + 1);
  f.payload.assign(rest.begin() + kFrameOverhead, rest.end());
  return f;
}

void send_frame(int fd, const Frame& f, const std::string& peer) {
  send_all(fd, encode_frame(f), peer);
}

namespace {

struct AddrInfo {
  addrinfo* list = nullptr;
  ~AddrInfo() {
    if (list) ::freeaddrinfo(list);
  }
};

AddrInfo resolve(const std::string& host, uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  AddrInfo result;
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(),
                         std::to_string(port).c_str(), &hints, &result.list);
  if (rc != 0)
    throw RemoteError(fmt::format("cannot resolve {}:{}: {}", host, port, gai_strerror(rc)));
  return result;
}

}  // namespace

int connect_socket(const std::string& host, uint16_t port) {
  AddrInfo addr = resolve(host, port, false);
  int fd = ::socket(addr.list->ai_family, addr.list->ai_socktype, 0);
  if (fd < 0) throw RemoteError(fmt::format("socket: {}", std::strerror(errno)));
  if (::connect(fd, addr.list->ai_addr, addr.list->ai_addrlen) != 0) {
    int err = errno;
    ::close(fd);
    throw RemoteError(fmt::format("cannot connect to {}:{}: {}", host, port,
                                  std::strerror(err)));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

int listen_socket(const std::string& host, uint16_t port, uint16_t* bound_port) {
  AddrInfo addr = resolve(host, port, true);
  int fd = ::socket(addr.list->ai_family, addr.list->ai_socktype, 0);
  if (fd < 0) throw RemoteError(fmt::format("socket: {}", std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, addr.list->ai_addr, addr.list->ai_addrlen) != 0 ||
      ::listen(fd, 64) != 0) {
    int err = errno;
    ::close(fd);
    throw RemoteError(fmt::format("cannot listen on {}:{}: {}", host, port,
                                  std::strerror(err)));
  }
  if (bound_port) {
    sockaddr_in sin{};
    socklen_t slen = sizeof(sin);
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&sin), &slen) == 0)
      *bound_port = ntohs(sin.sin_port);
  }
  return fd;
}

}  // namespace detail

}  // namespace ntuplex::remote
