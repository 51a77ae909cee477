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

#include "dpfedemb/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dpfedemb/io_util.hpp"

namespace dpfedemb {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kParamMagic[4] = {'D', 'P', 'F', 'E'};
constexpr char kStateMagic[4] = {'D', 'P', 'F', 'S'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n,
                const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw std::runtime_error("checkpoint: truncated file " + path);
  }
}

void write_vector(std::ofstream& out, const ParamVector& v) {
  const std::uint64_t len = v.size();
  write_bytes(out, &len, sizeof(len));
  write_bytes(out, v.data(), len * sizeof(double));
}

ParamVector read_vector(std::ifstream& in, const std::string& path) {
  std::uint64_t len = 0;
  read_bytes(in, &len, sizeof(len), path);
  ParamVector v(static_cast<std::size_t>(len));
  read_bytes(in, v.data(), len * sizeof(double), path);
  return v;
}

}  // namespace

std::uint64_t model_config_digest(const MlpConfig& cfg,
                                  std::size_t num_classes) {
  std::uint64_t h = fnv1a64("dpfedemb.model.v1");
  h = hash_combine(h, cfg.input_dim);
  h = hash_combine(h, cfg.hidden_dims.size());
  for (std::size_t d : cfg.hidden_dims) h = hash_combine(h, d);
  h = hash_combine(h, cfg.embed_dim);
  h = hash_combine(h, static_cast<std::uint64_t>(cfg.activation));
  h = hash_combine(h, cfg.l2_normalize_embedding ? 1 : 0);
  h = hash_combine(h, num_classes);
  return h;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  write_bytes(out, kParamMagic, sizeof(kParamMagic));
  write_bytes(out, &kVersion, sizeof(kVersion));
  write_bytes(out, &ckpt.config_digest, sizeof(ckpt.config_digest));
  write_vector(out, ckpt.params);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  read_bytes(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kParamMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  std::uint32_t version = 0;
  read_bytes(in, &version, sizeof(version), path);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  }
  Checkpoint ckpt;
  read_bytes(in, &ckpt.config_digest, sizeof(ckpt.config_digest), path);
  ckpt.params = read_vector(in, path);
  return ckpt;
}

void save_trainer_state(const std::string& path, const TrainerState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("trainer state: cannot open " + path);
  write_bytes(out, kStateMagic, sizeof(kStateMagic));
  write_bytes(out, &kVersion, sizeof(kVersion));
  write_bytes(out, &state.round, sizeof(state.round));
  write_bytes(out, &state.clip_norm, sizeof(state.clip_norm));
  write_vector(out, state.velocity);
  const std::uint8_t has_tree = state.has_tree_prefix ? 1 : 0;
  write_bytes(out, &has_tree, sizeof(has_tree));
  if (state.has_tree_prefix) write_vector(out, state.tree_prefix);
  if (!out) throw std::runtime_error("trainer state: write failed for " + path);
}

TrainerState load_trainer_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("trainer state: cannot open " + path);
  char magic[4];
  read_bytes(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kStateMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("trainer state: bad magic in " + path);
  }
  std::uint32_t version = 0;
  read_bytes(in, &version, sizeof(version), path);
  if (version != kVersion) {
    throw std::runtime_error("trainer state: unsupported version in " + path);
  }
  TrainerState state;
  read_bytes(in, &state.round, sizeof(state.round), path);
  read_bytes(in, &state.clip_norm, sizeof(state.clip_norm), path);
  state.velocity = read_vector(in, path);
  std::uint8_t has_tree = 0;
  read_bytes(in, &has_tree, sizeof(has_tree), path);
  state.has_tree_prefix = has_tree != 0;
  if (state.has_tree_prefix) state.tree_prefix = read_vector(in, path);
  return state;
}

}  // namespace dpfedemb
