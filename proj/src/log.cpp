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

#include "ntuplex/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace ntuplex::log {

namespace {

Level parse_level(const char* s) {
  if (!s) return Level::Warn;
  std::string v(s);
  if (v == "debug") return Level::Debug;
  if (v == "info") return Level::Info;
  if (v == "warn") return Level::Warn;
  if (v == "error") return Level::Error;
  return Level::Warn;
}

std::atomic<Level>& level_ref() {
  static std::atomic<Level> lvl{parse_level(std::getenv("NTUPLEX_LOG"))};
  return lvl;
}

const char* tag(Level lvl) {
  switch (lvl) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
  }
  return "?";
}

}  // namespace

Level level() { return level_ref().load(std::memory_order_relaxed); }
void set_level(Level lvl) { level_ref().store(lvl, std::memory_order_relaxed); }
bool enabled(Level lvl) { return static_cast<int>(lvl) >= static_cast<int>(level()); }

void write(Level lvl, std::string_view msg) {
  std::fprintf(stderr, "ntuplex [%s] %.*s\n", tag(lvl),
               static_cast<int>(msg.size()), msg.data());
}

}  // namespace ntuplex::log
