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

#include "dpfedemb/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

namespace dpfedemb {
namespace {

constexpr std::uint64_t kGlobalHeadTag = 0;  // per-round heads use round + 1

// Runs fn(0..n-1) on up to num_threads workers. Tasks write only their own
// slots, so the result is schedule-independent.
void parallel_for(std::size_t n, std::size_t num_threads,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  num_threads = std::max<std::size_t>(1, std::min(num_threads, n));
  if (num_threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(num_threads);
  for (std::size_t t = 0; t < num_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(error);
}

Batch make_batch(const std::vector<Example>& examples, std::size_t start,
                 std::size_t count,
                 const std::map<std::int64_t, std::int64_t>* remap) {
  Batch batch;
  batch.inputs = Matrix(count, examples[start].input.size());
  batch.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Example& ex = examples[start + i];
    if (ex.input.size() != batch.inputs.cols) {
      throw std::invalid_argument("client_update: ragged example inputs");
    }
    for (std::size_t c = 0; c < batch.inputs.cols; ++c) {
      batch.inputs.at(i, c) = ex.input[c];
    }
    batch.labels[i] = remap ? remap->at(ex.label) : ex.label;
  }
  return batch;
}

}  // namespace

void server_step(ServerOptState& state, ParamVector& params,
                 const ParamVector& delta) {
  if (state.velocity.size() != params.size() ||
      delta.size() != params.size()) {
    throw std::invalid_argument("server_step: length mismatch");
  }
  scale_in_place(state.velocity, state.momentum);
  add_scaled_in_place(state.velocity, delta, 1.0);
  add_scaled_in_place(params, state.velocity, state.lr);
}

ClientUpdateResult client_update(const ParamVector& global_theta,
                                 const ParamVector* global_omega,
                                 const MlpConfig& cfg, std::size_t num_classes,
                                 const VirtualClient& vc,
                                 const ClientOptConfig& opt, double clip_norm,
                                 RngStream& head_rng,
                                 const ParamVector* initial_head_override) {
  if (vc.merged.empty()) {
    throw std::invalid_argument("client_update: empty virtual client");
  }
  if (opt.local_steps < 1) {
    throw std::invalid_argument("client_update: local_steps must be >= 1");
  }
  if (opt.batch_size < 1) {
    throw std::invalid_argument("client_update: batch_size must be >= 1");
  }

  const std::size_t n = vc.merged.size();
  const bool fedavg = opt.mode == TrainMode::kFedAvg;

  // fedemb trains a head over only the classes present on this client,
  // remapped to a dense local index space.
  std::map<std::int64_t, std::int64_t> remap;
  ModelSplit local_split;
  local_split.backbone_len = global_theta.size();
  local_split.embed_dim = cfg.embed_dim;
  ParamVector omega;
  if (fedavg) {
    if (global_omega == nullptr) {
      throw std::invalid_argument("client_update: fedavg needs the global head");
    }
    local_split.num_classes = num_classes;
    omega = *global_omega;
  } else {
    for (const Example& ex : vc.merged) remap.emplace(ex.label, 0);
    std::int64_t next_local = 0;
    for (auto& [global_label, local_label] : remap) local_label = next_local++;
    local_split.num_classes = remap.size();
    omega = initial_head_override != nullptr
                ? *initial_head_override
                : init_head(local_split.num_classes, cfg.embed_dim, head_rng);
  }
  if (omega.size() != local_split.head_len()) {
    throw std::invalid_argument("client_update: head length mismatch");
  }

  ParamVector theta = global_theta;
  ParamVector v_theta(theta.size());
  ParamVector v_omega(omega.size());

  // Masks: fedavg mode masks the joint vector, fedemb just the backbone.
  TrainableMask theta_mask, omega_mask;
  if (!opt.mask.empty()) {
    const std::size_t expected =
        fedavg ? theta.size() + omega.size() : theta.size();
    if (opt.mask.size() != expected) {
      throw std::invalid_argument("client_update: mask length mismatch");
    }
    theta_mask.frozen.assign(opt.mask.frozen.begin(),
                             opt.mask.frozen.begin() + theta.size());
    if (fedavg) {
      omega_mask.frozen.assign(opt.mask.frozen.begin() + theta.size(),
                               opt.mask.frozen.end());
    }
  }

  double loss_sum = 0.0;
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < opt.local_steps; ++k) {
    std::size_t start, count;
    if (opt.batch_size >= n) {
      start = 0;
      count = n;
    } else {
      start = cursor;
      count = std::min(opt.batch_size, n - cursor);
      cursor += count;
      if (cursor >= n) cursor = 0;
    }
    const Batch batch =
        make_batch(vc.merged, start, count, fedavg ? nullptr : &remap);
    LossAndGrads grads =
        forward_loss_and_grads(theta, omega, cfg, local_split, batch);
    loss_sum += grads.loss;

    apply_mask_in_place(grads.g_theta, theta_mask);
    scale_in_place(v_theta, opt.momentum);
    add_scaled_in_place(v_theta, grads.g_theta, 1.0);
    add_scaled_in_place(theta, v_theta, -opt.lr_backbone);

    const double head_lr = fedavg ? opt.lr_backbone : opt.lr_head;
    apply_mask_in_place(grads.g_omega, omega_mask);
    scale_in_place(v_omega, opt.momentum);
    add_scaled_in_place(v_omega, grads.g_omega, 1.0);
    add_scaled_in_place(omega, v_omega, -head_lr);
  }

  ParamVector delta;
  if (fedavg) {
    std::vector<double> joint(theta.size() + omega.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      joint[i] = theta[i] - global_theta[i];
    }
    for (std::size_t i = 0; i < omega.size(); ++i) {
      joint[theta.size() + i] = omega[i] - (*global_omega)[i];
    }
    delta = ParamVector(std::move(joint));
    apply_mask_in_place(delta, opt.mask);
  } else {
    delta = theta;
    add_scaled_in_place(delta, global_theta, -1.0);
    apply_mask_in_place(delta, theta_mask);
  }

  ClientUpdateResult result;
  result.pre_clip_norm = l2_norm(delta);
  result.delta = clip_to_norm(delta, clip_norm);
  result.mean_loss = loss_sum / static_cast<double>(opt.local_steps);
  return result;
}

Trainer::Trainer(TrainerOptions options, std::vector<UserDataset> dataset,
                 MlpConfig model_cfg, const ParamVector* warm_start_backbone)
    : options_(std::move(options)),
      dataset_(std::move(dataset)),
      model_cfg_(std::move(model_cfg)),
      clip_norm_(options_.clip_norm) {
  validate(model_cfg_);
  if (dataset_.empty()) {
    throw std::invalid_argument("Trainer: dataset is empty");
  }
  for (const UserDataset& u : dataset_) {
    if (u.examples.empty()) {
      throw std::invalid_argument("Trainer: user " + u.user_id +
                                  " has no examples");
    }
  }
  if (options_.users_per_round > dataset_.size()) {
    throw std::invalid_argument("Trainer: users_per_round exceeds dataset size");
  }
  if (!(clip_norm_ > 0.0)) {
    throw std::invalid_argument("Trainer: clip_norm must be > 0");
  }
  if (options_.noise_multiplier < 0.0) {
    throw std::invalid_argument("Trainer: noise_multiplier must be >= 0");
  }
  if (options_.noise_multiplier > 0.0 && !std::isfinite(clip_norm_)) {
    throw std::invalid_argument(
        "Trainer: noise requires a finite clip norm");
  }
  options_.client.mode = options_.mode;

  const std::size_t classes = class_count(dataset_);
  RngStream model_rng = derive_stream(options_.seed, StreamPurpose::kModelInit);
  auto [theta, split] = build_model(model_cfg_, classes, model_rng);
  split_ = split;
  if (warm_start_backbone != nullptr) {
    if (warm_start_backbone->size() != split_.backbone_len) {
      throw std::invalid_argument(
          "Trainer: warm start length " +
          std::to_string(warm_start_backbone->size()) +
          " does not match backbone length " +
          std::to_string(split_.backbone_len));
    }
    theta = *warm_start_backbone;
  }

  if (options_.mode == TrainMode::kFedAvg) {
    RngStream head_rng = derive_stream(options_.seed, StreamPurpose::kHeadInit,
                                       kGlobalHeadTag, 0);
    ParamVector head = init_head(classes, model_cfg_.embed_dim, head_rng);
    std::vector<double> joint(split_.total_len());
    for (std::size_t i = 0; i < theta.size(); ++i) joint[i] = theta[i];
    for (std::size_t i = 0; i < head.size(); ++i) {
      joint[theta.size() + i] = head[i];
    }
    params_ = ParamVector(std::move(joint));
  } else {
    params_ = std::move(theta);
  }

  server_.lr = options_.server_lr;
  server_.momentum = options_.server_momentum;
  server_.velocity = ParamVector(params_.size());

  if (options_.mechanism == Mechanism::kTree && options_.rounds >= 1) {
    tree_ = std::make_unique<TreeAggregator>(
        options_.rounds, params_.size(),
        options_.noise_multiplier * clip_norm_, options_.seed);
  }

  build_eval_subset();

  rdp_orders_ = default_rdp_orders();
  const double q = static_cast<double>(options_.users_per_round) /
                   static_cast<double>(dataset_.size());
  if (options_.noise_multiplier > 0.0) {
    rdp_step_add_remove_ = rdp_subsampled_gaussian_step(
        q, options_.noise_multiplier, rdp_orders_,
        Neighboring::kAddRemovePoisson);
    rdp_step_substitute_ = rdp_subsampled_gaussian_step(
        q, options_.noise_multiplier, rdp_orders_,
        Neighboring::kSubstituteConservative);
  }
}

void Trainer::build_eval_subset() {
  const std::size_t per_class = options_.eval_examples_per_class;
  std::map<std::int64_t, std::size_t> taken;
  std::vector<const Example*> chosen;
  for (const UserDataset& u : dataset_) {
    for (const Example& ex : u.examples) {
      std::size_t& count = taken[ex.label];
      if (per_class == 0 || count < per_class) {
        chosen.push_back(&ex);
        ++count;
      }
    }
  }
  eval_inputs_ = Matrix(chosen.size(), model_cfg_.input_dim);
  eval_labels_.resize(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (chosen[i]->input.size() != model_cfg_.input_dim) {
      throw std::invalid_argument("Trainer: example input_dim " +
                                  std::to_string(chosen[i]->input.size()) +
                                  " does not match model input_dim " +
                                  std::to_string(model_cfg_.input_dim));
    }
    for (std::size_t c = 0; c < model_cfg_.input_dim; ++c) {
      eval_inputs_.at(i, c) = chosen[i]->input[c];
    }
    eval_labels_[i] = chosen[i]->label;
  }
}

ParamVector Trainer::backbone() const {
  if (options_.mode == TrainMode::kFedEmb) return params_;
  std::vector<double> theta(split_.backbone_len);
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = params_[i];
  return ParamVector(std::move(theta));
}

double Trainer::evaluate_recall() const {
  EmbeddingSet set;
  set.embeddings = embed(backbone(), model_cfg_, eval_inputs_);
  set.labels = eval_labels_;
  return recall_at_far(set, options_.far_target, options_.eval_metric);
}

ParamVector Trainer::aggregate(std::vector<ParamVector> deltas) {
  if (options_.mechanism == Mechanism::kTree) {
    ParamVector round_sum(params_.size());
    for (const ParamVector& d : deltas) add_scaled_in_place(round_sum, d, 1.0);
    return tree_->next_delta(round_sum, deltas.size());
  }
  NoiseConfig cfg;
  cfg.noise_multiplier = options_.noise_multiplier;
  cfg.clip_norm = clip_norm_;
  cfg.mechanism = Mechanism::kGaussian;
  RngStream noise_rng =
      derive_stream(options_.seed, StreamPurpose::kAggregateNoise, round_);
  return gaussian_aggregate(deltas, cfg, noise_rng);
}

RoundLog Trainer::run_round() {
  const auto start_time = std::chrono::steady_clock::now();
  if (round_ >= options_.rounds) {
    throw std::logic_error("run_round: all rounds already completed");
  }
  const std::size_t t = round_;

  RoundLog log;
  log.sigma = options_.noise_multiplier;
  log.gamma = clip_norm_;

  RngStream sample_rng =
      derive_stream(options_.seed, StreamPurpose::kUserSampling, t);
  const std::vector<std::size_t> sampled =
      sample_round_users(dataset_.size(), options_.users_per_round, sample_rng);

  RngStream group_rng =
      derive_stream(options_.seed, StreamPurpose::kVcGrouping, t);
  std::vector<VirtualClient> clients = form_virtual_clients(
      dataset_, sampled, options_.users_per_vc, group_rng);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    RngStream cap_rng =
        derive_stream(options_.seed, StreamPurpose::kExampleCap, t, i);
    clients[i] = cap_examples(std::move(clients[i]), options_.examples_cap,
                              cap_rng);
  }

  if (clients.empty()) {
    // Degenerate no-op round: zero delta by convention.
    ParamVector zero(params_.size());
    server_step(server_, params_, zero);
    round_ = t + 1;
  } else {
    std::vector<ClientUpdateResult> results(clients.size());
    const ParamVector* omega_ptr = nullptr;
    ParamVector global_head;
    if (options_.mode == TrainMode::kFedAvg) {
      // The head occupies the tail of the privatized vector.
      std::vector<double> head(split_.head_len());
      for (std::size_t i = 0; i < head.size(); ++i) {
        head[i] = params_[split_.backbone_len + i];
      }
      global_head = ParamVector(std::move(head));
      omega_ptr = &global_head;
    }
    const ParamVector theta = backbone();
    parallel_for(clients.size(), options_.threads, [&](std::size_t i) {
      RngStream head_rng =
          derive_stream(options_.seed, StreamPurpose::kHeadInit, t + 1, i);
      results[i] = client_update(theta, omega_ptr, model_cfg_,
                                 split_.num_classes, clients[i],
                                 options_.client, clip_norm_, head_rng);
    });

    std::vector<ParamVector> deltas;
    deltas.reserve(results.size());
    std::size_t within_clip = 0;
    for (ClientUpdateResult& r : results) {
      log.loss_mean += r.mean_loss;
      if (r.pre_clip_norm <= clip_norm_) ++within_clip;
      deltas.push_back(std::move(r.delta));
    }
    log.loss_mean /= static_cast<double>(results.size());
    log.clip_fraction = static_cast<double>(within_clip) /
                        static_cast<double>(results.size());

    const ParamVector noised_delta = aggregate(std::move(deltas));
    server_step(server_, params_, noised_delta);
    round_ = t + 1;

    // Adaptive clipping runs only in the noiseless tuning regime; with
    // noise the estimated norm stays frozen.
    if (options_.adaptive_clip && options_.noise_multiplier == 0.0) {
      AdaptiveClipState state{clip_norm_, options_.clip_quantile,
                              options_.clip_lr};
      clip_norm_ = adaptive_clip_step(state, log.clip_fraction).clip_norm;
    }
  }

  log.round = round_;
  if (options_.eval_every > 0 && round_ % options_.eval_every == 0) {
    log.recall_at_far = evaluate_recall();
  }
  const PrivacyReport report = privacy_report();
  log.eps_add_remove = report.eps_add_remove;
  log.rho = report.rho;
  log.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start_time)
                    .count();
  return log;
}

std::vector<RoundLog> Trainer::run_training(
    const std::function<void(const RoundLog&)>& on_round) {
  std::vector<RoundLog> logs;
  logs.reserve(options_.rounds - round_);
  while (round_ < options_.rounds) {
    logs.push_back(run_round());
    if (on_round) on_round(logs.back());
  }
  return logs;
}

PrivacyReport Trainer::privacy_report() const {
  PrivacyReport report;
  report.sampling_rate = static_cast<double>(options_.users_per_round) /
                         static_cast<double>(dataset_.size());
  report.sigma = options_.noise_multiplier;
  report.rounds = round_;
  report.delta = options_.dp_delta;
  report.mechanism = options_.mechanism;

  if (round_ == 0 || options_.users_per_round == 0) {
    return report;  // nothing released yet
  }
  if (options_.noise_multiplier == 0.0) {
    report.eps_add_remove = std::numeric_limits<double>::infinity();
    report.eps_substitute = std::numeric_limits<double>::infinity();
    if (options_.mechanism == Mechanism::kTree) {
      report.rho = std::numeric_limits<double>::infinity();
      report.eps_zcdp = std::numeric_limits<double>::infinity();
    }
    return report;
  }

  if (options_.mechanism == Mechanism::kTree) {
    // Single-participation bound over the full tree as built.
    const double rho =
        zcdp_tree_single_participation(options_.rounds,
                                       options_.noise_multiplier)
            .rho;
    report.rho = rho;
    report.eps_zcdp = zcdp_to_dp(rho, options_.dp_delta).epsilon;
    report.eps_add_remove = report.eps_zcdp.value();
    report.eps_substitute = report.eps_zcdp.value();
    return report;
  }

  RdpAccountant add_remove =
      RdpAccountant::with_default_orders(Neighboring::kAddRemovePoisson);
  compose(add_remove, rdp_step_add_remove_, round_);
  report.eps_add_remove = rdp_to_dp(add_remove, options_.dp_delta).epsilon;

  RdpAccountant substitute =
      RdpAccountant::with_default_orders(Neighboring::kSubstituteConservative);
  compose(substitute, rdp_step_substitute_, round_);
  report.eps_substitute = rdp_to_dp(substitute, options_.dp_delta).epsilon;
  return report;
}

TrainerState Trainer::state_snapshot() const {
  TrainerState state;
  state.round = round_;
  state.clip_norm = clip_norm_;
  state.velocity = server_.velocity;
  if (tree_) {
    state.has_tree_prefix = true;
    state.tree_prefix = tree_->true_prefix();
  }
  return state;
}

void Trainer::restore(const TrainerState& state, ParamVector params) {
  if (params.size() != params_.size()) {
    throw std::invalid_argument("Trainer::restore: parameter length mismatch");
  }
  if (state.velocity.size() != params_.size()) {
    throw std::invalid_argument("Trainer::restore: velocity length mismatch");
  }
  if (state.round > options_.rounds) {
    throw std::invalid_argument("Trainer::restore: round beyond total rounds");
  }
  params_ = std::move(params);
  server_.velocity = state.velocity;
  clip_norm_ = state.clip_norm;
  round_ = state.round;
  if (tree_) {
    if (!state.has_tree_prefix) {
      throw std::invalid_argument(
          "Trainer::restore: tree mechanism needs the prefix sum");
    }
    tree_->restore(state.round, state.tree_prefix);
  }
}

}  // namespace dpfedemb
