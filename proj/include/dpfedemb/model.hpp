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

#ifndef DPFEDEMB_MODEL_HPP_
#define DPFEDEMB_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "dpfedemb/matrix.hpp"
#include "dpfedemb/param_vector.hpp"
#include "dpfedemb/rng.hpp"

namespace dpfedemb {

enum class Activation { kRelu, kTanh };

// Backbone architecture: input -> hidden layers (affine + activation) ->
// embedding (affine, linear). A network with no hidden layers degenerates to
// a single bias-free linear projection; otherwise every layer carries a bias.
// The classifier head is always bias-free and lives outside the backbone.
struct MlpConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t embed_dim = 32;
  Activation activation = Activation::kRelu;
  bool l2_normalize_embedding = false;
};

void validate(const MlpConfig& cfg);

// Partition of the full parameter vector into backbone (privatized) and
// head (num_classes x embed_dim proxy matrix, no biases).
struct ModelSplit {
  std::size_t backbone_len = 0;
  std::size_t num_classes = 0;
  std::size_t embed_dim = 0;

  std::size_t head_len() const { return num_classes * embed_dim; }
  std::size_t total_len() const { return backbone_len + head_len(); }
};

struct Batch {
  Matrix inputs;                    // batch x input_dim
  std::vector<std::int64_t> labels;  // class ids in [0, num_classes)
};

std::size_t backbone_param_count(const MlpConfig& cfg);

// Scaled uniform fan-in initialization: weights U(-1/sqrt(fan_in),
// +1/sqrt(fan_in)), biases zero.
std::pair<ParamVector, ModelSplit> build_model(const MlpConfig& cfg,
                                               std::size_t num_classes,
                                               RngStream& rng);

// Head proxies are N(0, 1/embed_dim), one row per class.
ParamVector init_head(std::size_t num_classes, std::size_t embed_dim,
                      RngStream& rng);

// Forward pass of the backbone: one embedding row per input row. A zero
// embedding stays zero under L2 normalization.
Matrix embed(const ParamVector& theta, const MlpConfig& cfg,
             const Matrix& inputs);

struct LossAndGrads {
  double loss = 0.0;
  ParamVector g_theta;
  ParamVector g_omega;
};

// Mean softmax cross-entropy of <omega, f(theta, x)> over the batch, with
// exact gradients for both theta and omega. Log-sum-exp stabilized.
LossAndGrads forward_loss_and_grads(const ParamVector& theta,
                                    const ParamVector& omega,
                                    const MlpConfig& cfg,
                                    const ModelSplit& split,
                                    const Batch& batch);

}  // namespace dpfedemb

#endif  // DPFEDEMB_MODEL_HPP_
