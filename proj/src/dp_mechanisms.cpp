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

#include "dpfedemb/dp_mechanisms.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpfedemb {

ParamVector gaussian_aggregate(const std::vector<ParamVector>& updates,
                               const NoiseConfig& cfg, RngStream& rng) {
  if (updates.empty()) {
    throw std::invalid_argument("gaussian_aggregate: no updates");
  }
  if (cfg.noise_multiplier < 0.0) {
    throw std::invalid_argument("gaussian_aggregate: noise_multiplier must be >= 0");
  }
  if (!(cfg.clip_norm > 0.0)) {
    throw std::invalid_argument("gaussian_aggregate: clip_norm must be > 0");
  }
  ParamVector sum(updates.front().size());
  for (const ParamVector& u : updates) add_scaled_in_place(sum, u, 1.0);

  const double noise_stddev =
      cfg.noise_multiplier == 0.0 ? 0.0 : cfg.noise_multiplier * cfg.clip_norm;
  if (noise_stddev > 0.0) {
    if (!std::isfinite(noise_stddev)) {
      throw std::invalid_argument("gaussian_aggregate: noise scale must be finite");
    }
    ParamVector noise = sample_gaussian_vector(sum.size(), noise_stddev, rng);
    add_scaled_in_place(sum, noise, 1.0);
  }
  scale_in_place(sum, 1.0 / static_cast<double>(updates.size()));
  return sum;
}

TreeAggregator::TreeAggregator(std::size_t total_steps, std::size_t len,
                               double node_stddev, std::uint64_t seed)
    : total_steps_(total_steps),
      len_(len),
      node_stddev_(node_stddev),
      seed_(seed),
      true_prefix_(len),
      prev_noisy_prefix_(len) {
  if (total_steps < 1) {
    throw std::invalid_argument("TreeAggregator: total_steps must be >= 1");
  }
  if (node_stddev < 0.0) {
    throw std::invalid_argument("TreeAggregator: node_stddev must be >= 0");
  }
}

const ParamVector& TreeAggregator::node_noise(unsigned level,
                                              std::size_t index) {
  const auto key = std::make_pair(level, index);
  auto it = nodes_.find(key);
  if (it == nodes_.end()) {
    RngStream rng = derive_stream(seed_, StreamPurpose::kTreeNode, level, index);
    it = nodes_.emplace(key, sample_gaussian_vector(len_, node_stddev_, rng))
             .first;
  }
  return it->second;
}

ParamVector TreeAggregator::prefix_noise(std::size_t t) {
  if (t < 1 || t > total_steps_) {
    throw std::invalid_argument("TreeAggregator: step " + std::to_string(t) +
                                " outside [1, " +
                                std::to_string(total_steps_) + "]");
  }
  ParamVector noise(len_);
  // Walk the set bits of t from high to low; each contributes one complete
  // dyadic block starting where the previous one ended.
  std::size_t start = 0;
  for (int level = 63; level >= 0; --level) {
    const std::size_t block = std::size_t{1} << level;
    if (t & block) {
      add_scaled_in_place(
          noise, node_noise(static_cast<unsigned>(level), start >> level), 1.0);
      start += block;
    }
  }
  return noise;
}

ParamVector TreeAggregator::next_delta(const ParamVector& round_sum,
                                       std::size_t num_clients) {
  if (step_ >= total_steps_) {
    throw std::logic_error("TreeAggregator: all steps already consumed");
  }
  if (round_sum.size() != len_) {
    throw std::invalid_argument("TreeAggregator: round_sum length mismatch");
  }
  if (num_clients == 0) {
    throw std::invalid_argument("TreeAggregator: num_clients must be >= 1");
  }
  const std::size_t t = step_ + 1;
  add_scaled_in_place(true_prefix_, round_sum, 1.0);

  ParamVector noisy = true_prefix_;
  if (node_stddev_ > 0.0) {
    add_scaled_in_place(noisy, prefix_noise(t), 1.0);
  }
  ParamVector delta = noisy;
  add_scaled_in_place(delta, prev_noisy_prefix_, -1.0);
  scale_in_place(delta, 1.0 / static_cast<double>(num_clients));

  prev_noisy_prefix_ = std::move(noisy);
  step_ = t;
  return delta;
}

void TreeAggregator::restore(std::size_t step, ParamVector true_prefix) {
  if (step > total_steps_) {
    throw std::invalid_argument("TreeAggregator: restore step out of range");
  }
  if (true_prefix.size() != len_) {
    throw std::invalid_argument("TreeAggregator: restore prefix length mismatch");
  }
  step_ = step;
  true_prefix_ = std::move(true_prefix);
  prev_noisy_prefix_ = true_prefix_;
  if (step_ > 0 && node_stddev_ > 0.0) {
    add_scaled_in_place(prev_noisy_prefix_, prefix_noise(step_), 1.0);
  }
}

AdaptiveClipState adaptive_clip_step(const AdaptiveClipState& state,
                                     double clipped_fraction) {
  if (clipped_fraction < 0.0 || clipped_fraction > 1.0) {
    throw std::invalid_argument("adaptive_clip_step: fraction outside [0, 1]");
  }
  AdaptiveClipState next = state;
  next.clip_norm = state.clip_norm *
                   std::exp(-state.learning_rate *
                            (clipped_fraction - state.target_quantile));
  return next;
}

}  // namespace dpfedemb
