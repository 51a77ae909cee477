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

#ifndef DPFEDEMB_DP_MECHANISMS_HPP_
#define DPFEDEMB_DP_MECHANISMS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "dpfedemb/param_vector.hpp"
#include "dpfedemb/rng.hpp"

namespace dpfedemb {

enum class Mechanism { kGaussian, kTree };

struct NoiseConfig {
  double noise_multiplier = 0.0;  // sigma >= 0
  double clip_norm = 1.0;         // gamma > 0 (may be +infinity)
  Mechanism mechanism = Mechanism::kGaussian;
};

// (sum of updates + N(0, (sigma*gamma)^2 I)) / |updates|. Updates are summed
// in list order, so the result is independent of how they were produced.
ParamVector gaussian_aggregate(const std::vector<ParamVector>& updates,
                               const NoiseConfig& cfg, RngStream& rng);

// Binary-tree correlated noise for private prefix sums. The prefix [1..t]
// decomposes into popcount(t) complete dyadic blocks; each block's node
// carries one N(0, node_stddev^2 I) vector, sampled once and reused by every
// prefix that covers it. Node (level, index) covers steps
// [index*2^level + 1, (index+1)*2^level].
class TreeAggregator {
 public:
  TreeAggregator(std::size_t total_steps, std::size_t len, double node_stddev,
                 std::uint64_t seed);

  // Noise attached to the cumulative sum through step t (1 <= t <= T).
  ParamVector prefix_noise(std::size_t t);

  // Consumes the round's summed update and returns the noised per-round
  // average: (noisy_prefix(t) - noisy_prefix(t-1)) / num_clients. Must be
  // called with consecutive steps t = 1..T.
  ParamVector next_delta(const ParamVector& round_sum, std::size_t num_clients);

  std::size_t current_step() const { return step_; }
  std::size_t total_steps() const { return total_steps_; }
  const ParamVector& true_prefix() const { return true_prefix_; }

  // Restores mid-run state (for checkpoint resume). Node noise is
  // regenerated deterministically from the seed, so only the true prefix sum
  // and the step counter are needed.
  void restore(std::size_t step, ParamVector true_prefix);

 private:
  const ParamVector& node_noise(unsigned level, std::size_t index);

  std::size_t total_steps_;
  std::size_t len_;
  double node_stddev_;
  std::uint64_t seed_;
  std::size_t step_ = 0;  // last completed step
  ParamVector true_prefix_;
  ParamVector prev_noisy_prefix_;
  std::map<std::pair<unsigned, std::size_t>, ParamVector> nodes_;
};

// Online clip-norm estimate driven toward a target quantile of update norms:
// C <- C * exp(-lr * (clipped_fraction - quantile)).
struct AdaptiveClipState {
  double clip_norm = 1.0;
  double target_quantile = 0.5;
  double learning_rate = 0.2;
};

AdaptiveClipState adaptive_clip_step(const AdaptiveClipState& state,
                                     double clipped_fraction);

}  // namespace dpfedemb

#endif  // DPFEDEMB_DP_MECHANISMS_HPP_
