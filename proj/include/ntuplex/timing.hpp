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

namespace ntuplex {

/// Accumulates time spent in compute sections (decompress, decode, eval,
/// fill). One instance per task; not thread-safe by design — a task runs on
/// exactly one worker thread.
struct CpuClock {
  uint64_t ns = 0;
  double seconds() const { return static_cast<double>(ns) * 1e-9; }
};

/// RAII scope adding its lifetime to a CpuClock. A null clock is a no-op,
/// so library read paths can be instrumented unconditionally.
class CpuScope {
public:
  explicit CpuScope(CpuClock* clock) : clock_(clock) {
    if (clock_) start_ = std::chrono::steady_clock::now();
  }
  ~CpuScope() {
    if (clock_)
      clock_->ns += std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start_)
                        .count();
  }
  CpuScope(const CpuScope&) = delete;
  CpuScope& operator=(const CpuScope&) = delete;

private:
  CpuClock* clock_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ntuplex
