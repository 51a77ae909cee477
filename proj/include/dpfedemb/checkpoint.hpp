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

#ifndef DPFEDEMB_CHECKPOINT_HPP_
#define DPFEDEMB_CHECKPOINT_HPP_

#include <cstdint>
#include <string>

#include "dpfedemb/model.hpp"
#include "dpfedemb/param_vector.hpp"

namespace dpfedemb {

// Parameter checkpoint: "DPFE" magic, u32 version, u64 config digest,
// u64 parameter count, then raw little-endian 64-bit reals. Used for warm
// starts and resume.
struct Checkpoint {
  std::uint64_t config_digest = 0;
  ParamVector params;
};

// Digest of the architecture a parameter vector belongs to (backbone dims
// plus class space), for refusing incompatible loads.
std::uint64_t model_config_digest(const MlpConfig& cfg,
                                  std::size_t num_classes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Mid-run trainer state stored next to a checkpoint: "DPFS" magic,
// u32 version, u64 round, f64 clip norm, server velocity, and (tree
// mechanism only) the running true prefix sum.
struct TrainerState {
  std::uint64_t round = 0;
  double clip_norm = 0.0;
  ParamVector velocity;
  bool has_tree_prefix = false;
  ParamVector tree_prefix;
};

void save_trainer_state(const std::string& path, const TrainerState& state);
TrainerState load_trainer_state(const std::string& path);

}  // namespace dpfedemb

#endif  // DPFEDEMB_CHECKPOINT_HPP_
