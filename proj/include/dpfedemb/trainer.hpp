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

#ifndef DPFEDEMB_TRAINER_HPP_
#define DPFEDEMB_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "dpfedemb/accounting.hpp"
#include "dpfedemb/checkpoint.hpp"
#include "dpfedemb/data.hpp"
#include "dpfedemb/dp_mechanisms.hpp"
#include "dpfedemb/eval.hpp"
#include "dpfedemb/model.hpp"
#include "dpfedemb/param_vector.hpp"

namespace dpfedemb {

// fedavg: the head is part of the privatized vector and trained jointly.
// fedemb: each virtual client trains a fresh local head covering only its
// own classes; only the backbone delta is clipped, noised, and released.
enum class TrainMode { kFedAvg, kFedEmb };

struct ClientOptConfig {
  TrainMode mode = TrainMode::kFedEmb;
  std::size_t local_steps = 10;  // K
  std::size_t batch_size = 32;
  double lr_backbone = 0.002;  // beta_1
  double lr_head = 0.2;        // beta_2 (ignored in fedavg mode)
  double momentum = 0.9;
  TrainableMask mask;  // over the privatized vector; empty = all trainable
};

struct ServerOptState {
  double lr = 1.0;
  double momentum = 0.9;
  ParamVector velocity;
};

// velocity <- momentum * velocity + delta; params <- params + lr * velocity.
// Deltas follow the new-minus-old convention, so the server ascends them.
void server_step(ServerOptState& state, ParamVector& params,
                 const ParamVector& delta);

struct ClientUpdateResult {
  ParamVector delta;  // clipped, privatized coordinates only
  double pre_clip_norm = 0.0;
  double mean_loss = 0.0;
};

// Runs K minibatch steps of momentum SGD from the global parameters and
// returns the clipped model delta. Minibatches are consecutive slices of the
// client's (already shuffled) merged examples, wrapping at epoch boundaries
// with a final partial batch; a batch size >= the data size means full-batch
// steps. In fedemb mode global_omega may be null (a fresh local head is
// drawn from head_rng); initial_head_override substitutes a caller-provided
// local head, mainly for tests.
ClientUpdateResult client_update(const ParamVector& global_theta,
                                 const ParamVector* global_omega,
                                 const MlpConfig& cfg, std::size_t num_classes,
                                 const VirtualClient& vc,
                                 const ClientOptConfig& opt, double clip_norm,
                                 RngStream& head_rng,
                                 const ParamVector* initial_head_override =
                                     nullptr);

struct RoundLog {
  std::size_t round = 0;  // 1-based, after the round completes
  double loss_mean = 0.0;
  double clip_fraction = 0.0;  // fraction of client updates within the clip
  double sigma = 0.0;
  double gamma = 0.0;
  std::optional<double> recall_at_far;
  double eps_add_remove = 0.0;
  std::optional<double> rho;  // tree mechanism only
  double wall_ms = 0.0;       // not part of any persisted output
};

struct PrivacyReport {
  double sampling_rate = 0.0;
  double sigma = 0.0;
  std::size_t rounds = 0;
  double delta = 0.0;
  Mechanism mechanism = Mechanism::kGaussian;
  double eps_add_remove = 0.0;
  double eps_substitute = 0.0;
  std::optional<double> rho;       // tree only
  std::optional<double> eps_zcdp;  // tree only
};

struct TrainerOptions {
  TrainMode mode = TrainMode::kFedEmb;
  std::size_t rounds = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  std::size_t users_per_round = 2048;
  std::size_t users_per_vc = 32;
  std::size_t examples_cap = 2048;
  ClientOptConfig client;
  double server_lr = 0.5;
  double server_momentum = 0.9;

  Mechanism mechanism = Mechanism::kGaussian;
  double noise_multiplier = 0.0;
  double clip_norm = 0.6;     // may be +infinity (clipping disabled)
  bool adaptive_clip = false;  // active only while noise_multiplier == 0
  double clip_quantile = 0.5;
  double clip_lr = 0.2;
  double dp_delta = 1e-7;

  std::size_t eval_every = 0;  // 0 disables periodic evaluation
  double far_target = 1e-2;
  SimilarityMetric eval_metric = SimilarityMetric::kCosine;
  std::size_t eval_examples_per_class = 4;  // 0 = use everything
};

// Owns the model and round loop for one training run. Client updates within
// a round run on a worker pool; every random draw is keyed by (seed, round,
// client index, purpose), so results do not depend on the thread count.
class Trainer {
 public:
  Trainer(TrainerOptions options, std::vector<UserDataset> dataset,
          MlpConfig model_cfg,
          const ParamVector* warm_start_backbone = nullptr);

  RoundLog run_round();
  std::vector<RoundLog> run_training(
      const std::function<void(const RoundLog&)>& on_round = nullptr);

  std::size_t rounds_completed() const { return round_; }
  std::size_t num_classes() const { return split_.num_classes; }
  const ModelSplit& split() const { return split_; }
  const MlpConfig& model_config() const { return model_cfg_; }
  const TrainerOptions& options() const { return options_; }
  double current_clip_norm() const { return clip_norm_; }

  // The privatized parameter vector: backbone in fedemb mode, backbone
  // followed by the global head in fedavg mode.
  const ParamVector& params() const { return params_; }
  ParamVector backbone() const;

  double evaluate_recall() const;
  PrivacyReport privacy_report() const;

  TrainerState state_snapshot() const;
  void restore(const TrainerState& state, ParamVector params);

 private:
  ParamVector aggregate(std::vector<ParamVector> deltas);
  void build_eval_subset();

  TrainerOptions options_;
  std::vector<UserDataset> dataset_;
  MlpConfig model_cfg_;
  ModelSplit split_;
  ParamVector params_;
  ServerOptState server_;
  double clip_norm_;
  std::unique_ptr<TreeAggregator> tree_;
  std::size_t round_ = 0;

  Matrix eval_inputs_;
  std::vector<std::int64_t> eval_labels_;

  std::vector<double> rdp_orders_;
  std::vector<double> rdp_step_add_remove_;
  std::vector<double> rdp_step_substitute_;
};

}  // namespace dpfedemb

#endif  // DPFEDEMB_TRAINER_HPP_
