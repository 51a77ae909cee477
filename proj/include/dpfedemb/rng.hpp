// Copyright 2026 The dpfedemb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPFEDEMB_RNG_HPP_
#define DPFEDEMB_RNG_HPP_

#include <cstdint>
#include <vector>

namespace dpfedemb {

// Purpose tags for deriving independent substreams from one master seed.
// Streams are keyed by (seed, purpose, a, b) so that the draws consumed by
// one part of a round can never shift the draws seen by another, no matter
// how work is scheduled across threads.
enum class StreamPurpose : std::uint64_t {
  kModelInit = 1,
  kHeadInit = 2,
  kUserSampling = 3,
  kVcGrouping = 4,
  kExampleCap = 5,
  kAggregateNoise = 6,
  kTreeNode = 7,
  kSyntheticData = 8,
  kEvalSampling = 9,
  kTest = 10,
};

// Deterministic splittable RNG stream. Same (seed, stream_id) gives the same
// sequence on every run; distinct stream_ids give statistically independent
// sequences regardless of interleaving.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  // Uniform in [0, 1), 53 random bits.
  double next_unit();
  // Standard normal via the polar method; pairs are cached.
  double next_gaussian();
  // Uniform integer in [0, bound), rejection sampled (bound > 0).
  std::uint64_t next_below(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

RngStream derive_stream(std::uint64_t seed, StreamPurpose purpose,
                        std::uint64_t a = 0, std::uint64_t b = 0);

// Fisher-Yates using the given stream.
template <typename T>
void shuffle_in_place(std::vector<T>& items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace dpfedemb

#endif  // DPFEDEMB_RNG_HPP_
