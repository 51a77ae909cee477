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

#ifndef DPFEDEMB_CONFIG_HPP_
#define DPFEDEMB_CONFIG_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpfedemb/data.hpp"
#include "dpfedemb/eval.hpp"
#include "dpfedemb/model.hpp"
#include "dpfedemb/trainer.hpp"

namespace dpfedemb {

// Invalid or malformed experiment configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parsed experiment file. Defaults mirror the fixed federated setting:
// 32 users per virtual client, 64 virtual clients per round, examples capped
// at 2048, head LR scale 100, local batch size 32, momentum 0.9 on both
// optimizers, adaptive clipping at quantile 0.5.
struct ExperimentConfig {
  // [run]
  std::uint64_t seed = 1;
  std::size_t rounds = 200;
  TrainMode mode = TrainMode::kFedEmb;
  std::string output_dir = "runs/default";
  std::size_t threads = 1;
  std::size_t eval_every = 0;
  std::size_t checkpoint_every = 0;
  double far_target = 1e-2;
  SimilarityMetric eval_metric = SimilarityMetric::kCosine;
  std::size_t eval_examples_per_class = 4;

  // [data]
  std::string data_source = "synthetic";  // "synthetic" | "csv"
  std::string csv_path;
  SyntheticSpec synthetic{512, 1, 20, 32, 0.1};
  std::uint64_t data_seed = 12345;  // synthetic data is fixed across run seeds

  // [model]
  std::vector<std::size_t> hidden_dims;
  std::size_t embed_dim = 32;
  Activation activation = Activation::kRelu;
  bool l2_normalize_embedding = false;
  std::string warm_start_path;

  // [federation]
  std::size_t users_per_vc = 32;
  std::size_t vcs_per_round = 64;
  std::size_t examples_cap = 2048;
  std::size_t local_steps = 10;
  std::size_t batch_size = 32;
  double lr_backbone = 0.002;
  double head_lr_scale = 100.0;
  double client_momentum = 0.9;
  double server_lr = 0.5;
  double server_momentum = 0.9;
  std::vector<std::pair<std::size_t, std::size_t>> frozen_ranges;

  // [privacy]
  Mechanism mechanism = Mechanism::kGaussian;
  double noise_multiplier = 0.0;
  double clip_norm = 0.6;  // "inf" disables clipping
  bool adaptive_clip = false;
  double clip_quantile = 0.5;
  double clip_lr = 0.2;
  double dp_delta = 1e-7;

  std::size_t users_per_round() const { return users_per_vc * vcs_per_round; }
};

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source_name);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical one-line-per-field rendering; hashed for the run manifest.
std::string canonical_config_string(const ExperimentConfig& config);
std::uint64_t config_digest(const ExperimentConfig& config);

// Builds the dataset named by [data]; synthetic data uses data_seed.
std::vector<UserDataset> build_dataset(const ExperimentConfig& config);

// Maps the experiment file onto trainer options. input_dim comes from the
// dataset; the trainable mask needs the privatized length, so it is built
// here from frozen_ranges.
TrainerOptions make_trainer_options(const ExperimentConfig& config,
                                    std::size_t privatized_len);
MlpConfig make_model_config(const ExperimentConfig& config,
                            std::size_t input_dim);

}  // namespace dpfedemb

#endif  // DPFEDEMB_CONFIG_HPP_
