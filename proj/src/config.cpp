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

#include "dpfedemb/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "dpfedemb/io_util.hpp"

namespace dpfedemb {
namespace {

// Minimal TOML-style reader: [section] headers, key = value lines, # comments.
// Values: "string", number (inf allowed), true/false, [v0, v1, ...].
struct ConfigValue {
  enum class Kind { kString, kNumber, kBool, kArray } kind = Kind::kString;
  std::string str;
  double number = 0.0;
  bool boolean = false;
  std::vector<double> array;
  std::size_t line = 0;
};

using Section = std::map<std::string, ConfigValue>;
using Document = std::map<std::string, Section>;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(const std::string& source, std::size_t line,
                       const std::string& message) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + message);
}

double parse_number(const std::string& source, std::size_t line,
                    const std::string& token) {
  if (token == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(token, &pos);
    if (pos != token.size()) fail(source, line, "malformed number '" + token + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(source, line, "malformed number '" + token + "'");
  }
}

ConfigValue parse_value(const std::string& source, std::size_t line,
                        const std::string& raw) {
  ConfigValue value;
  value.line = line;
  if (raw.empty()) fail(source, line, "missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') {
      fail(source, line, "unterminated string");
    }
    value.kind = ConfigValue::Kind::kString;
    value.str = raw.substr(1, raw.size() - 2);
    return value;
  }
  if (raw == "true" || raw == "false") {
    value.kind = ConfigValue::Kind::kBool;
    value.boolean = raw == "true";
    return value;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') fail(source, line, "unterminated array");
    value.kind = ConfigValue::Kind::kArray;
    const std::string body = trim(raw.substr(1, raw.size() - 2));
    if (body.empty()) return value;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      value.array.push_back(parse_number(source, line, trim(item)));
    }
    return value;
  }
  value.kind = ConfigValue::Kind::kNumber;
  value.number = parse_number(source, line, raw);
  return value;
}

Document parse_document(const std::string& text, const std::string& source) {
  Document doc;
  std::string current_section;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    // Strip comments outside of strings.
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line = line.substr(0, i);
        break;
      }
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']') fail(source, line_no, "malformed section header");
      current_section = trim(stripped.substr(1, stripped.size() - 2));
      if (current_section.empty()) fail(source, line_no, "empty section name");
      doc[current_section];
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) fail(source, line_no, "expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) fail(source, line_no, "empty key");
    if (current_section.empty()) {
      fail(source, line_no, "key '" + key + "' outside any [section]");
    }
    Section& section = doc[current_section];
    if (section.count(key) != 0) {
      fail(source, line_no, "duplicate key '" + key + "'");
    }
    section[key] = parse_value(source, line_no, trim(stripped.substr(eq + 1)));
  }
  return doc;
}

// Typed access with consumption tracking so unknown keys can be reported.
class SectionReader {
 public:
  SectionReader(const std::string& source, const std::string& name,
                const Section* section)
      : source_(source), name_(name), section_(section) {}

  bool has(const std::string& key) const {
    return section_ != nullptr && section_->count(key) != 0;
  }

  const ConfigValue* take(const std::string& key) {
    if (!has(key)) return nullptr;
    consumed_.push_back(key);
    return &section_->at(key);
  }

  double number(const std::string& key, double fallback) {
    const ConfigValue* v = take(key);
    if (v == nullptr) return fallback;
    if (v->kind != ConfigValue::Kind::kNumber) {
      fail(source_, v->line, "[" + name_ + "] " + key + " must be a number");
    }
    return v->number;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const ConfigValue* v = take(key);
    if (v == nullptr) return fallback;
    if (v->kind != ConfigValue::Kind::kNumber || v->number < 0 ||
        v->number != std::floor(v->number) || !std::isfinite(v->number)) {
      fail(source_, v->line,
           "[" + name_ + "] " + key + " must be a nonnegative integer");
    }
    return static_cast<std::size_t>(v->number);
  }

  bool flag(const std::string& key, bool fallback) {
    const ConfigValue* v = take(key);
    if (v == nullptr) return fallback;
    if (v->kind != ConfigValue::Kind::kBool) {
      fail(source_, v->line, "[" + name_ + "] " + key + " must be true/false");
    }
    return v->boolean;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const ConfigValue* v = take(key);
    if (v == nullptr) return fallback;
    if (v->kind != ConfigValue::Kind::kString) {
      fail(source_, v->line, "[" + name_ + "] " + key + " must be a string");
    }
    return v->str;
  }

  std::vector<double> array(const std::string& key) {
    const ConfigValue* v = take(key);
    if (v == nullptr) return {};
    if (v->kind != ConfigValue::Kind::kArray) {
      fail(source_, v->line, "[" + name_ + "] " + key + " must be an array");
    }
    return v->array;
  }

  void finish() {
    if (section_ == nullptr) return;
    for (const auto& [key, value] : *section_) {
      bool used = false;
      for (const std::string& c : consumed_) {
        if (c == key) {
          used = true;
          break;
        }
      }
      if (!used) {
        fail(source_, value.line, "unknown key '" + key + "' in [" + name_ + "]");
      }
    }
  }

 private:
  std::string source_;
  std::string name_;
  const Section* section_;
  std::vector<std::string> consumed_;
};

std::vector<std::pair<std::size_t, std::size_t>> parse_ranges(
    const std::string& source, const std::string& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  if (spec.empty()) return ranges;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(source + ": frozen range '" + item +
                        "' must look like start:end");
    }
    try {
      const std::size_t lo = std::stoull(trim(item.substr(0, colon)));
      const std::size_t hi = std::stoull(trim(item.substr(colon + 1)));
      if (hi < lo) throw std::invalid_argument("reversed");
      ranges.emplace_back(lo, hi);
    } catch (const std::exception&) {
      throw ConfigError(source + ": malformed frozen range '" + item + "'");
    }
  }
  return ranges;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source_name) {
  const Document doc = parse_document(text, source_name);
  for (const auto& [name, _] : doc) {
    if (name != "run" && name != "data" && name != "model" &&
        name != "federation" && name != "privacy") {
      throw ConfigError(source_name + ": unknown section [" + name + "]");
    }
  }
  auto section = [&](const char* name) -> const Section* {
    auto it = doc.find(name);
    return it == doc.end() ? nullptr : &it->second;
  };

  ExperimentConfig config;

  SectionReader run(source_name, "run", section("run"));
  config.seed = run.count("seed", config.seed);
  config.rounds = run.count("rounds", config.rounds);
  {
    const std::string mode = run.text("mode", "fedemb");
    if (mode == "fedemb") {
      config.mode = TrainMode::kFedEmb;
    } else if (mode == "fedavg") {
      config.mode = TrainMode::kFedAvg;
    } else {
      throw ConfigError(source_name + ": [run] mode must be fedemb or fedavg");
    }
  }
  config.output_dir = run.text("output_dir", config.output_dir);
  config.threads = run.count("threads", config.threads);
  config.eval_every = run.count("eval_every", config.eval_every);
  config.checkpoint_every = run.count("checkpoint_every", config.checkpoint_every);
  config.far_target = run.number("far_target", config.far_target);
  {
    const std::string metric = run.text("eval_metric", "cosine");
    if (metric == "cosine") {
      config.eval_metric = SimilarityMetric::kCosine;
    } else if (metric == "inner") {
      config.eval_metric = SimilarityMetric::kInnerProduct;
    } else {
      throw ConfigError(source_name + ": [run] eval_metric must be cosine or inner");
    }
  }
  config.eval_examples_per_class =
      run.count("eval_examples_per_class", config.eval_examples_per_class);
  run.finish();

  SectionReader data(source_name, "data", section("data"));
  config.data_source = data.text("source", config.data_source);
  if (config.data_source != "synthetic" && config.data_source != "csv") {
    throw ConfigError(source_name + ": [data] source must be synthetic or csv");
  }
  config.csv_path = data.text("csv_path", config.csv_path);
  config.synthetic.num_users = data.count("num_users", config.synthetic.num_users);
  config.synthetic.classes_per_user =
      data.count("classes_per_user", config.synthetic.classes_per_user);
  config.synthetic.examples_per_class =
      data.count("examples_per_class", config.synthetic.examples_per_class);
  config.synthetic.input_dim = data.count("input_dim", config.synthetic.input_dim);
  config.synthetic.noise_std = data.number("noise_std", config.synthetic.noise_std);
  config.data_seed = data.count("seed", config.data_seed);
  data.finish();
  if (config.data_source == "csv" && config.csv_path.empty()) {
    throw ConfigError(source_name + ": [data] csv_path required when source = csv");
  }

  SectionReader model(source_name, "model", section("model"));
  {
    const std::vector<double> dims = model.array("hidden_dims");
    config.hidden_dims.clear();
    for (double d : dims) {
      if (d < 1 || d != std::floor(d)) {
        throw ConfigError(source_name + ": [model] hidden_dims must be positive integers");
      }
      config.hidden_dims.push_back(static_cast<std::size_t>(d));
    }
  }
  config.embed_dim = model.count("embed_dim", config.embed_dim);
  {
    const std::string act = model.text("activation", "relu");
    if (act == "relu") {
      config.activation = Activation::kRelu;
    } else if (act == "tanh") {
      config.activation = Activation::kTanh;
    } else {
      throw ConfigError(source_name + ": [model] activation must be relu or tanh");
    }
  }
  config.l2_normalize_embedding =
      model.flag("l2_normalize", config.l2_normalize_embedding);
  config.warm_start_path = model.text("warm_start", config.warm_start_path);
  model.finish();

  SectionReader fed(source_name, "federation", section("federation"));
  config.users_per_vc = fed.count("users_per_vc", config.users_per_vc);
  config.vcs_per_round = fed.count("vcs_per_round", config.vcs_per_round);
  if (fed.has("users_per_round")) {
    const std::size_t upr = fed.count("users_per_round", 0);
    if (config.users_per_vc == 0 || upr % config.users_per_vc != 0) {
      throw ConfigError(source_name +
                        ": [federation] users_per_round must be a multiple of users_per_vc");
    }
    config.vcs_per_round = upr / config.users_per_vc;
  }
  config.examples_cap = fed.count("examples_cap", config.examples_cap);
  config.local_steps = fed.count("local_steps", config.local_steps);
  config.batch_size = fed.count("batch_size", config.batch_size);
  config.lr_backbone = fed.number("lr_backbone", config.lr_backbone);
  config.head_lr_scale = fed.number("head_lr_scale", config.head_lr_scale);
  config.client_momentum = fed.number("client_momentum", config.client_momentum);
  config.server_lr = fed.number("server_lr", config.server_lr);
  config.server_momentum = fed.number("server_momentum", config.server_momentum);
  config.frozen_ranges = parse_ranges(source_name, fed.text("frozen_ranges", ""));
  fed.finish();

  SectionReader privacy(source_name, "privacy", section("privacy"));
  {
    const std::string mech = privacy.text("mechanism", "gaussian");
    if (mech == "gaussian") {
      config.mechanism = Mechanism::kGaussian;
    } else if (mech == "tree") {
      config.mechanism = Mechanism::kTree;
    } else {
      throw ConfigError(source_name + ": [privacy] mechanism must be gaussian or tree");
    }
  }
  config.noise_multiplier = privacy.number("noise_multiplier", config.noise_multiplier);
  config.clip_norm = privacy.number("clip_norm", config.clip_norm);
  config.adaptive_clip = privacy.flag("adaptive_clip", config.adaptive_clip);
  config.clip_quantile = privacy.number("clip_quantile", config.clip_quantile);
  config.clip_lr = privacy.number("clip_lr", config.clip_lr);
  config.dp_delta = privacy.number("delta", config.dp_delta);
  privacy.finish();

  // Field-level validation before any side effect.
  if (config.rounds == 0) {
    // T = 0 is allowed: training returns the initial parameters.
  }
  if (config.embed_dim < 1) throw ConfigError(source_name + ": embed_dim must be >= 1");
  if (config.users_per_vc < 1) {
    throw ConfigError(source_name + ": users_per_vc must be >= 1");
  }
  if (config.examples_cap < 1) {
    throw ConfigError(source_name + ": examples_cap must be >= 1");
  }
  if (config.local_steps < 1) {
    throw ConfigError(source_name + ": local_steps must be >= 1");
  }
  if (config.batch_size < 1) {
    throw ConfigError(source_name + ": batch_size must be >= 1");
  }
  if (!(config.far_target > 0.0 && config.far_target < 1.0)) {
    throw ConfigError(source_name + ": far_target must be in (0, 1)");
  }
  if (!(config.clip_norm > 0.0)) {
    throw ConfigError(source_name + ": clip_norm must be > 0 (or inf)");
  }
  if (config.noise_multiplier < 0.0) {
    throw ConfigError(source_name + ": noise_multiplier must be >= 0");
  }
  if (config.noise_multiplier > 0.0 && std::isinf(config.clip_norm)) {
    throw ConfigError(source_name + ": noise requires a finite clip_norm");
  }
  if (!(config.dp_delta > 0.0 && config.dp_delta < 1.0)) {
    throw ConfigError(source_name + ": delta must be in (0, 1)");
  }
  if (!(config.clip_quantile > 0.0 && config.clip_quantile < 1.0)) {
    throw ConfigError(source_name + ": clip_quantile must be in (0, 1)");
  }
  if (config.lr_backbone < 0.0 || config.head_lr_scale < 0.0 ||
      config.server_lr < 0.0) {
    throw ConfigError(source_name + ": learning rates must be >= 0");
  }
  if (config.data_source == "synthetic") {
    const SyntheticSpec& s = config.synthetic;
    if (s.num_users < 1 || s.classes_per_user < 1 || s.examples_per_class < 1 ||
        s.input_dim < 1) {
      throw ConfigError(source_name + ": [data] synthetic counts must be >= 1");
    }
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment_config(text, path);
}

std::string canonical_config_string(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "seed=" << c.seed << "\nrounds=" << c.rounds << "\nmode="
      << (c.mode == TrainMode::kFedEmb ? "fedemb" : "fedavg")
      << "\nfar_target=" << format_double(c.far_target) << "\neval_metric="
      << (c.eval_metric == SimilarityMetric::kCosine ? "cosine" : "inner")
      << "\neval_every=" << c.eval_every
      << "\neval_examples_per_class=" << c.eval_examples_per_class
      << "\ndata_source=" << c.data_source << "\ncsv_path=" << c.csv_path
      << "\nnum_users=" << c.synthetic.num_users
      << "\nclasses_per_user=" << c.synthetic.classes_per_user
      << "\nexamples_per_class=" << c.synthetic.examples_per_class
      << "\ninput_dim=" << c.synthetic.input_dim
      << "\nnoise_std=" << format_double(c.synthetic.noise_std)
      << "\ndata_seed=" << c.data_seed << "\nhidden_dims=";
  for (std::size_t i = 0; i < c.hidden_dims.size(); ++i) {
    out << (i > 0 ? "," : "") << c.hidden_dims[i];
  }
  out << "\nembed_dim=" << c.embed_dim << "\nactivation="
      << (c.activation == Activation::kRelu ? "relu" : "tanh")
      << "\nl2_normalize=" << (c.l2_normalize_embedding ? "true" : "false")
      << "\nwarm_start=" << c.warm_start_path
      << "\nusers_per_vc=" << c.users_per_vc
      << "\nvcs_per_round=" << c.vcs_per_round
      << "\nexamples_cap=" << c.examples_cap
      << "\nlocal_steps=" << c.local_steps << "\nbatch_size=" << c.batch_size
      << "\nlr_backbone=" << format_double(c.lr_backbone)
      << "\nhead_lr_scale=" << format_double(c.head_lr_scale)
      << "\nclient_momentum=" << format_double(c.client_momentum)
      << "\nserver_lr=" << format_double(c.server_lr)
      << "\nserver_momentum=" << format_double(c.server_momentum)
      << "\nfrozen_ranges=";
  for (std::size_t i = 0; i < c.frozen_ranges.size(); ++i) {
    out << (i > 0 ? "," : "") << c.frozen_ranges[i].first << ":"
        << c.frozen_ranges[i].second;
  }
  out << "\nmechanism="
      << (c.mechanism == Mechanism::kGaussian ? "gaussian" : "tree")
      << "\nnoise_multiplier=" << format_double(c.noise_multiplier)
      << "\nclip_norm=" << format_double(c.clip_norm)
      << "\nadaptive_clip=" << (c.adaptive_clip ? "true" : "false")
      << "\nclip_quantile=" << format_double(c.clip_quantile)
      << "\nclip_lr=" << format_double(c.clip_lr)
      << "\ndelta=" << format_double(c.dp_delta) << "\n";
  return out.str();
}

std::uint64_t config_digest(const ExperimentConfig& config) {
  return fnv1a64(canonical_config_string(config));
}

std::vector<UserDataset> build_dataset(const ExperimentConfig& config) {
  if (config.data_source == "csv") {
    return load_dataset_csv(config.csv_path);
  }
  RngStream rng = derive_stream(config.data_seed, StreamPurpose::kSyntheticData);
  return generate_synthetic_identities(config.synthetic, rng);
}

MlpConfig make_model_config(const ExperimentConfig& config,
                            std::size_t input_dim) {
  MlpConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden_dims = config.hidden_dims;
  cfg.embed_dim = config.embed_dim;
  cfg.activation = config.activation;
  cfg.l2_normalize_embedding = config.l2_normalize_embedding;
  return cfg;
}

TrainerOptions make_trainer_options(const ExperimentConfig& config,
                                    std::size_t privatized_len) {
  TrainerOptions options;
  options.mode = config.mode;
  options.rounds = config.rounds;
  options.seed = config.seed;
  options.threads = std::max<std::size_t>(1, config.threads);
  options.users_per_round = config.users_per_round();
  options.users_per_vc = config.users_per_vc;
  options.examples_cap = config.examples_cap;
  options.client.mode = config.mode;
  options.client.local_steps = config.local_steps;
  options.client.batch_size = config.batch_size;
  options.client.lr_backbone = config.lr_backbone;
  options.client.lr_head = config.lr_backbone * config.head_lr_scale;
  options.client.momentum = config.client_momentum;
  if (!config.frozen_ranges.empty()) {
    options.client.mask =
        TrainableMask::from_ranges(privatized_len, config.frozen_ranges);
  }
  options.server_lr = config.server_lr;
  options.server_momentum = config.server_momentum;
  options.mechanism = config.mechanism;
  options.noise_multiplier = config.noise_multiplier;
  options.clip_norm = config.clip_norm;
  options.adaptive_clip = config.adaptive_clip;
  options.clip_quantile = config.clip_quantile;
  options.clip_lr = config.clip_lr;
  options.dp_delta = config.dp_delta;
  options.eval_every = config.eval_every;
  options.far_target = config.far_target;
  options.eval_metric = config.eval_metric;
  options.eval_examples_per_class = config.eval_examples_per_class;
  return options;
}

}  // namespace dpfedemb
