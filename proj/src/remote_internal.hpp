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

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "ntuplex/remote.hpp"

// Shared socket plumbing for the client and server translation units.

namespace ntuplex::remote::detail {

/// Writes the whole buffer; throws RemoteError on failure.
void send_all(int fd, std::span<const std::byte> data, const std::string& peer);

/// Reads exactly out.size() bytes. Returns false on clean EOF at the first
/// byte; throws RemoteError on mid-read EOF or socket error.
bool recv_all(int fd, std::span<std::byte> out, const std::string& peer);

/// Receives one frame; nullopt on clean EOF between frames.
std::optional<Frame> recv_frame(int fd, const std::string& peer);

void send_frame(int fd, const Frame& f, const std::string& peer);

/// Resolves host:port and connects (client) or binds+listens (server).
int connect_socket(const std::string& host, uint16_t port);
int listen_socket(const std::string& host, uint16_t port, uint16_t* bound_port);

}  // namespace ntuplex::remote::detail
