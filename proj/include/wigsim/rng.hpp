// Copyright 2026 The wigsim Authors
//
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

namespace wigsim {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream. A stream is keyed by (seed, stream_id) and
/// advances by the golden-ratio increment with a SplitMix64 finalizer, so
/// draws depend only on the key and the draw counter, never on scheduling.
/// Uniform doubles are produced from the top 53 bits to keep the sequence
/// bit-identical across platforms.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream_id)
        : state_(mix64(seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1)) ^ 0x5851F42D4C957F2DULL)
    {
    }

    std::uint64_t next_u64()
    {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

} // namespace wigsim
