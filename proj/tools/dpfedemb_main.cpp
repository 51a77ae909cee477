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

// Experiment runner: train / account / extrapolate / eval / synth.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error,
// 4 unresolvable FAR target.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpfedemb/accounting.hpp"
#include "dpfedemb/checkpoint.hpp"
#include "dpfedemb/config.hpp"
#include "dpfedemb/data.hpp"
#include "dpfedemb/eval.hpp"
#include "dpfedemb/io_util.hpp"
#include "dpfedemb/model.hpp"
#include "dpfedemb/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpfedemb;

namespace {

constexpr const char* kVersion = "dpfedemb 0.1.0";
constexpr const char* kOutputRootEnv = "DPFEDEMB_OUTPUT_ROOT";

// Relative output paths can be rerooted through the environment.
fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root) {
      return fs::path(root) / p;
    }
  }
  return p;
}

json json_number(double v) {
  if (std::isfinite(v)) return v;
  return std::string(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan"));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::vector<double> parse_double_list(const std::string& text,
                                      const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      values.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": malformed number '" + item + "'");
    }
  }
  if (values.empty()) {
    throw ConfigError(std::string(what) + ": empty list");
  }
  return values;
}

std::string csv_cell(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : "";
}

constexpr const char* kMetricsHeader =
    "round,loss,clip_fraction,sigma,gamma,recall_at_far,eps_add_remove,rho\n";

std::string metrics_row(const RoundLog& log) {
  std::ostringstream row;
  row << log.round << ',' << format_double(log.loss_mean) << ','
      << format_double(log.clip_fraction) << ',' << format_double(log.sigma)
      << ',' << format_double(log.gamma) << ',' << csv_cell(log.recall_at_far)
      << ',' << format_double(log.eps_add_remove) << ',' << csv_cell(log.rho)
      << '\n';
  return row.str();
}

json privacy_json(const PrivacyReport& report) {
  json j;
  j["sampling_rate"] = json_number(report.sampling_rate);
  j["sigma"] = json_number(report.sigma);
  j["rounds"] = report.rounds;
  j["delta"] = json_number(report.delta);
  j["mechanism"] = report.mechanism == Mechanism::kTree ? "tree" : "gaussian";
  j["epsilon_add_remove_poisson"] = json_number(report.eps_add_remove);
  j["epsilon_substitute_conservative"] = json_number(report.eps_substitute);
  if (report.rho.has_value()) {
    j["rho_single_participation"] = json_number(*report.rho);
    j["epsilon_zcdp"] = json_number(*report.eps_zcdp);
  }
  return j;
}

std::string checkpoint_name(std::size_t round) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_round_%06zu.bin", round);
  return buf;
}

void write_run_checkpoint(const fs::path& dir, const std::string& name,
                          std::uint64_t digest, const Trainer& trainer) {
  Checkpoint ckpt;
  ckpt.config_digest = digest;
  ckpt.params = trainer.params();
  save_checkpoint((dir / name).string(), ckpt);
  TrainerState state = trainer.state_snapshot();
  save_trainer_state((dir / (name + ".state")).string(), state);
}

int cmd_train(const std::string& config_path, const std::string& output_override,
              std::optional<std::size_t> threads_override, bool force,
              bool resume, std::size_t stop_after) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (!output_override.empty()) config.output_dir = output_override;
  if (threads_override.has_value()) config.threads = *threads_override;

  const fs::path outdir = resolve_output(config.output_dir);
  const fs::path manifest_path = outdir / "manifest.json";
  if (fs::exists(manifest_path) && !force) {
    throw ConfigError("manifest already exists at " + manifest_path.string() +
                      " (finished run); pass --force to overwrite");
  }

  const std::string started = utc_timestamp();
  const std::uint64_t digest = config_digest(config);

  std::vector<UserDataset> dataset = build_dataset(config);
  if (dataset.empty()) throw ConfigError("dataset is empty");
  if (config.users_per_round() > dataset.size()) {
    throw ConfigError("users_per_round (" +
                      std::to_string(config.users_per_round()) +
                      ") exceeds the dataset population (" +
                      std::to_string(dataset.size()) + ")");
  }
  const std::size_t input_dim = dataset.front().examples.front().input.size();
  const MlpConfig model_cfg = make_model_config(config, input_dim);
  const std::size_t classes = class_count(dataset);
  const std::uint64_t model_digest = model_config_digest(model_cfg, classes);

  const std::size_t backbone_len = backbone_param_count(model_cfg);
  const std::size_t privatized_len =
      config.mode == TrainMode::kFedAvg
          ? backbone_len + classes * model_cfg.embed_dim
          : backbone_len;
  TrainerOptions options = make_trainer_options(config, privatized_len);

  ParamVector warm_start;
  const ParamVector* warm_ptr = nullptr;
  if (!config.warm_start_path.empty()) {
    const Checkpoint ckpt = load_checkpoint(config.warm_start_path);
    if (ckpt.params.size() < backbone_len) {
      throw ConfigError("warm start checkpoint holds " +
                        std::to_string(ckpt.params.size()) +
                        " parameters, backbone needs " +
                        std::to_string(backbone_len));
    }
    warm_start = ParamVector(std::vector<double>(
        ckpt.params.data(), ckpt.params.data() + backbone_len));
    warm_ptr = &warm_start;
  }

  Trainer trainer(options, std::move(dataset), model_cfg, warm_ptr);

  fs::create_directories(outdir);
  const fs::path metrics_path = outdir / "metrics.csv";
  bool append = false;
  if (resume) {
    // Find the newest checkpoint written by a previous (interrupted) run.
    std::size_t best_round = 0;
    for (std::size_t r = 1; r <= config.rounds; ++r) {
      if (fs::exists(outdir / checkpoint_name(r))) best_round = r;
    }
    if (best_round == 0) {
      throw ConfigError("--resume: no checkpoint found under " +
                        outdir.string());
    }
    const Checkpoint ckpt =
        load_checkpoint((outdir / checkpoint_name(best_round)).string());
    if (ckpt.config_digest != digest) {
      throw ConfigError("--resume: checkpoint was written by a different "
                        "configuration (digest mismatch)");
    }
    const TrainerState state = load_trainer_state(
        (outdir / (checkpoint_name(best_round) + ".state")).string());
    trainer.restore(state, ckpt.params);
    append = true;
    std::cerr << "resuming from round " << best_round << "\n";
  }

  std::ofstream metrics(metrics_path,
                        append ? std::ios::app : std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot open " + metrics_path.string());
  if (!append) metrics << kMetricsHeader;

  const std::size_t stop_round =
      stop_after == 0 ? config.rounds : std::min(stop_after, config.rounds);
  RoundLog last_log;
  while (trainer.rounds_completed() < stop_round) {
    const RoundLog log = trainer.run_round();
    last_log = log;
    metrics << metrics_row(log);
    metrics.flush();
    if (config.checkpoint_every > 0 &&
        log.round % config.checkpoint_every == 0) {
      write_run_checkpoint(outdir, checkpoint_name(log.round), digest, trainer);
    }
    if (log.recall_at_far.has_value()) {
      std::cerr << "round " << log.round << " loss "
                << format_double(log.loss_mean) << " recall@"
                << format_double(config.far_target) << " "
                << format_double(*log.recall_at_far) << "\n";
    }
  }
  metrics.close();

  if (stop_round < config.rounds) {
    // Interrupted on purpose; leave a checkpoint for --resume, no manifest.
    write_run_checkpoint(outdir, checkpoint_name(stop_round), digest, trainer);
    std::cerr << "stopped after round " << stop_round << " (resume to finish)\n";
    return 0;
  }

  Checkpoint final_ckpt;
  final_ckpt.config_digest = digest;
  final_ckpt.params = trainer.params();
  save_checkpoint((outdir / "ckpt_final.bin").string(), final_ckpt);

  const PrivacyReport report = trainer.privacy_report();
  json manifest;
  manifest["version"] = kVersion;
  manifest["config_digest"] = hex64(digest);
  manifest["model_digest"] = hex64(model_digest);
  manifest["seed"] = config.seed;
  manifest["mode"] = config.mode == TrainMode::kFedAvg ? "fedavg" : "fedemb";
  manifest["rounds"] = config.rounds;
  manifest["num_classes"] = classes;
  manifest["backbone_len"] = backbone_len;
  manifest["privatized_len"] = privatized_len;
  manifest["started_utc"] = started;
  manifest["finished_utc"] = utc_timestamp();
  manifest["checkpoint"] = "ckpt_final.bin";
  json final_metrics;
  final_metrics["loss"] = json_number(last_log.loss_mean);
  final_metrics["clip_fraction"] = json_number(last_log.clip_fraction);
  if (last_log.recall_at_far.has_value()) {
    final_metrics["recall_at_far"] = json_number(*last_log.recall_at_far);
    final_metrics["far_target"] = json_number(config.far_target);
  }
  manifest["final_metrics"] = final_metrics;
  manifest["privacy"] = privacy_json(report);
  write_text_file(manifest_path.string(), manifest.dump(2) + "\n");

  std::cout << privacy_json(report).dump() << "\n";
  return 0;
}

int cmd_account(double q, double sigma, std::size_t rounds, double delta,
                const std::string& mechanism) {
  if (q < 0.0 || q > 1.0) {
    throw ConfigError("account: q must be in [0, 1]");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("account: delta must be in (0, 1)");
  }
  if (sigma < 0.0) throw ConfigError("account: sigma must be >= 0");
  if (mechanism != "gaussian" && mechanism != "tree") {
    throw ConfigError("account: mechanism must be gaussian or tree");
  }

  json out;
  out["q"] = json_number(q);
  out["sigma"] = json_number(sigma);
  out["rounds"] = rounds;
  out["delta"] = json_number(delta);
  out["mechanism"] = mechanism;
  if (mechanism == "gaussian") {
    const auto orders = default_rdp_orders();
    for (const auto& [mode, key] :
         {std::pair{Neighboring::kAddRemovePoisson,
                    "epsilon_add_remove_poisson"},
          std::pair{Neighboring::kSubstituteConservative,
                    "epsilon_substitute_conservative"}}) {
      if (rounds > 0 && sigma == 0.0) {
        out[key] = json_number(std::numeric_limits<double>::infinity());
        continue;
      }
      RdpAccountant acc = RdpAccountant::with_default_orders(mode);
      if (rounds > 0) {
        compose(acc, rdp_subsampled_gaussian_step(q, sigma, orders, mode),
                rounds);
      }
      out[key] = json_number(rdp_to_dp(acc, delta).epsilon);
    }
  } else {
    const double rho =
        rounds == 0
            ? 0.0
            : (sigma == 0.0 ? std::numeric_limits<double>::infinity()
                            : zcdp_tree_single_participation(rounds, sigma).rho);
    out["rho_single_participation"] = json_number(rho);
    out["epsilon_zcdp"] = json_number(zcdp_to_dp(rho, delta).epsilon);
  }
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_extrapolate(const std::string& config_path, double sigma0,
                    std::size_t vcs_per_round, std::size_t users_per_vc,
                    std::size_t rounds, std::size_t total_users, double delta,
                    const std::string& k_list, const std::string& out_path) {
  if (!config_path.empty()) {
    const ExperimentConfig config = load_experiment_config(config_path);
    if (sigma0 < 0.0) sigma0 = config.noise_multiplier;
    if (vcs_per_round == 0) vcs_per_round = config.vcs_per_round;
    if (users_per_vc == 0) users_per_vc = config.users_per_vc;
    if (rounds == 0) rounds = config.rounds;
    if (delta <= 0.0) delta = config.dp_delta;
  }
  if (sigma0 < 0.0) throw ConfigError("extrapolate: --sigma0 required");
  if (vcs_per_round == 0 || users_per_vc == 0 || rounds == 0) {
    throw ConfigError(
        "extrapolate: --vcs-per-round, --users-per-vc, --rounds required");
  }
  if (total_users == 0) throw ConfigError("extrapolate: --total-users required");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("extrapolate: delta must be in (0, 1)");
  }
  const std::vector<double> ks = parse_double_list(k_list, "extrapolate --k");

  const auto rows = extrapolate_sweep(sigma0, vcs_per_round, users_per_vc,
                                      rounds, total_users, delta, ks);
  std::ostringstream csv;
  csv << "k,users_per_round,q,sigma,rounds,delta,epsilon_add_remove,"
         "epsilon_substitute,rho,epsilon_zcdp\n";
  for (const SweepRow& row : rows) {
    csv << format_double(row.scale) << ',' << row.users_per_round << ','
        << format_double(row.sampling_rate) << ',' << format_double(row.sigma)
        << ',' << row.rounds << ',' << format_double(row.delta) << ','
        << format_double(row.eps_add_remove) << ','
        << format_double(row.eps_substitute) << ',' << format_double(row.rho)
        << ',' << format_double(row.eps_zcdp) << '\n';
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    const fs::path out = resolve_output(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_text_file(out.string(), csv.str());
    std::cerr << "wrote " << rows.size() << " rows to " << out.string() << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             const std::string& far_list, const std::string& out_dir,
             std::size_t per_class, std::size_t roc_points_count) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const std::vector<double> fars = parse_double_list(far_list, "eval --far");
  for (double far : fars) {
    if (!(far > 0.0 && far < 1.0)) {
      throw ConfigError("eval: FAR targets must be in (0, 1), got " +
                        format_double(far));
    }
  }

  std::vector<UserDataset> dataset = build_dataset(config);
  if (dataset.empty()) throw ConfigError("eval: dataset is empty");
  const std::size_t input_dim = dataset.front().examples.front().input.size();
  const MlpConfig model_cfg = make_model_config(config, input_dim);
  const std::size_t classes = class_count(dataset);
  const std::size_t backbone_len = backbone_param_count(model_cfg);

  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const std::size_t with_head = backbone_len + classes * model_cfg.embed_dim;
  if (ckpt.params.size() != backbone_len && ckpt.params.size() != with_head) {
    throw ConfigError(
        "eval: checkpoint holds " + std::to_string(ckpt.params.size()) +
        " parameters; expected backbone " + std::to_string(backbone_len) +
        " or backbone+head " + std::to_string(with_head) + " for input_dim " +
        std::to_string(input_dim) + ", embed_dim " +
        std::to_string(model_cfg.embed_dim) + ", classes " +
        std::to_string(classes));
  }
  const ParamVector theta(std::vector<double>(
      ckpt.params.data(), ckpt.params.data() + backbone_len));

  // Collect up to per_class examples per class (0 = all).
  std::vector<const Example*> chosen;
  {
    std::map<std::int64_t, std::size_t> taken;
    for (const UserDataset& u : dataset) {
      for (const Example& ex : u.examples) {
        std::size_t& count = taken[ex.label];
        if (per_class == 0 || count < per_class) {
          chosen.push_back(&ex);
          ++count;
        }
      }
    }
  }
  EmbeddingSet set;
  Matrix inputs(chosen.size(), input_dim);
  set.labels.resize(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    for (std::size_t c = 0; c < input_dim; ++c) {
      inputs.at(i, c) = chosen[i]->input[c];
    }
    set.labels[i] = chosen[i]->label;
  }
  set.embeddings = embed(theta, model_cfg, inputs);

  const fs::path outdir = resolve_output(out_dir);
  fs::create_directories(outdir);

  const RocCurve curve = roc_points(set, config.eval_metric, roc_points_count);
  std::ostringstream roc_csv;
  roc_csv << "far,recall,threshold\n";
  for (const RocPoint& p : curve.points) {
    roc_csv << format_double(p.far) << ',' << format_double(p.recall) << ','
            << format_double(p.threshold) << '\n';
  }
  write_text_file((outdir / "roc.csv").string(), roc_csv.str());

  json summary;
  summary["checkpoint"] = checkpoint_path;
  summary["num_embeddings"] = set.embeddings.rows;
  summary["metric"] =
      config.eval_metric == SimilarityMetric::kCosine ? "cosine" : "inner";
  json recalls = json::object();
  for (double far : fars) {
    recalls[format_double(far)] =
        json_number(recall_at_far(set, far, config.eval_metric));
  }
  summary["recall_at_far"] = recalls;
  write_text_file((outdir / "summary.json").string(), summary.dump(2) + "\n");
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_synth(std::size_t users, std::size_t classes_per_user,
              std::size_t examples_per_class, std::size_t input_dim,
              double noise_std, std::uint64_t seed,
              const std::string& out_path) {
  SyntheticSpec spec{users, classes_per_user, examples_per_class, input_dim,
                     noise_std};
  RngStream rng = derive_stream(seed, StreamPurpose::kSyntheticData);
  const auto dataset = generate_synthetic_identities(spec, rng);
  const fs::path out = resolve_output(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_dataset_csv(out.string(), dataset);

  std::size_t examples = 0;
  for (const auto& u : dataset) examples += u.examples.size();
  json info;
  info["users"] = dataset.size();
  info["classes"] = class_count(dataset);
  info["examples"] = examples;
  info["path"] = out.string();
  std::cout << info.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"User-level DP federated embedding trainer"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Run federated DP training");
  std::string train_config, train_output;
  std::size_t train_threads = 0, stop_after = 0;
  bool force = false, resume = false;
  train->add_option("--config", train_config, "experiment config file")
      ->required();
  train->add_option("--output", train_output, "override [run] output_dir");
  train->add_option("--threads", train_threads, "worker pool size override");
  train->add_option("--stop-after", stop_after,
                    "stop after this round, leaving a resumable checkpoint");
  train->add_flag("--force", force, "overwrite an existing finished run");
  train->add_flag("--resume", resume, "continue from the newest checkpoint");

  // account
  auto* account = app.add_subcommand("account", "Privacy accounting");
  double acc_q = 0.0, acc_sigma = 0.0, acc_delta = 1e-7;
  std::size_t acc_rounds = 0;
  std::string acc_mechanism = "gaussian";
  account->add_option("--q", acc_q, "per-round user sampling rate")->required();
  account->add_option("--sigma", acc_sigma, "noise multiplier")->required();
  account->add_option("--rounds", acc_rounds, "number of rounds")->required();
  account->add_option("--delta", acc_delta, "target delta");
  account->add_option("--mechanism", acc_mechanism, "gaussian | tree");

  // extrapolate
  auto* extrapolate =
      app.add_subcommand("extrapolate", "Privacy-computation sweep");
  std::string ex_config, ex_k = "1,2,4,8,16,32,64", ex_out;
  double ex_sigma0 = -1.0, ex_delta = 0.0;
  std::size_t ex_vcs = 0, ex_upv = 0, ex_rounds = 0, ex_total = 0;
  extrapolate->add_option("--config", ex_config, "base experiment config");
  extrapolate->add_option("--sigma0", ex_sigma0, "base noise multiplier");
  extrapolate->add_option("--vcs-per-round", ex_vcs, "base clients per round");
  extrapolate->add_option("--users-per-vc", ex_upv, "users per virtual client");
  extrapolate->add_option("--rounds", ex_rounds, "training rounds");
  extrapolate->add_option("--total-users", ex_total, "population size")
      ->required();
  extrapolate->add_option("--delta", ex_delta, "target delta");
  extrapolate->add_option("--k", ex_k, "comma-separated scale factors");
  extrapolate->add_option("--out", ex_out, "output CSV (stdout when omitted)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Embed a dataset and score it");
  std::string ev_ckpt, ev_config, ev_far = "0.001,0.01,0.1", ev_out = "eval_out";
  std::size_t ev_per_class = 0, ev_points = 50;
  eval_cmd->add_option("--checkpoint", ev_ckpt, "parameter checkpoint")
      ->required();
  eval_cmd->add_option("--config", ev_config, "experiment config (model+data)")
      ->required();
  eval_cmd->add_option("--far", ev_far, "comma-separated FAR targets");
  eval_cmd->add_option("--out", ev_out, "output directory");
  eval_cmd->add_option("--per-class", ev_per_class,
                       "max examples per class (0 = all)");
  eval_cmd->add_option("--roc-points", ev_points, "points on the ROC curve");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset CSV");
  std::size_t sy_users = 512, sy_cpu = 1, sy_epc = 20, sy_dim = 32;
  double sy_noise = 0.1;
  std::uint64_t sy_seed = 12345;
  std::string sy_out;
  synth->add_option("--users", sy_users, "number of users");
  synth->add_option("--classes-per-user", sy_cpu, "classes per user");
  synth->add_option("--examples-per-class", sy_epc, "examples per class");
  synth->add_option("--input-dim", sy_dim, "input dimension");
  synth->add_option("--noise-std", sy_noise, "per-coordinate noise stddev");
  synth->add_option("--seed", sy_seed, "generator seed");
  synth->add_option("--out", sy_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      return cmd_train(train_config, train_output,
                       train->count("--threads") > 0
                           ? std::optional<std::size_t>(train_threads)
                           : std::nullopt,
                       force, resume, stop_after);
    }
    if (*account) {
      return cmd_account(acc_q, acc_sigma, acc_rounds, acc_delta, acc_mechanism);
    }
    if (*extrapolate) {
      return cmd_extrapolate(ex_config, ex_sigma0, ex_vcs, ex_upv, ex_rounds,
                             ex_total, ex_delta, ex_k, ex_out);
    }
    if (*eval_cmd) {
      return cmd_eval(ev_ckpt, ev_config, ev_far, ev_out, ev_per_class,
                      ev_points);
    }
    if (*synth) {
      return cmd_synth(sy_users, sy_cpu, sy_epc, sy_dim, sy_noise, sy_seed,
                       sy_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UnresolvableFarError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
