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

#include "dpfedemb/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dpfedemb {
namespace {

struct LayerDims {
  std::size_t in = 0;
  std::size_t out = 0;
  bool has_bias = false;
  std::size_t w_offset = 0;  // row-major out x in
  std::size_t b_offset = 0;  // valid only if has_bias
};

// A backbone with no hidden layers is a single bias-free linear projection;
// otherwise every affine layer (hidden and embedding output) has a bias.
std::vector<LayerDims> layer_layout(const MlpConfig& cfg) {
  std::vector<std::size_t> dims;
  dims.push_back(cfg.input_dim);
  for (std::size_t h : cfg.hidden_dims) dims.push_back(h);
  dims.push_back(cfg.embed_dim);

  const bool biased = !cfg.hidden_dims.empty();
  std::vector<LayerDims> layers;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LayerDims layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.has_bias = biased;
    layer.w_offset = offset;
    offset += layer.in * layer.out;
    if (layer.has_bias) {
      layer.b_offset = offset;
      offset += layer.out;
    }
    layers.push_back(layer);
  }
  return layers;
}

double activate(double x, Activation a) {
  switch (a) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kTanh:
      return std::tanh(x);
  }
  return x;
}

// Derivative expressed through the post-activation value.
double activate_grad_from_output(double y, Activation a) {
  switch (a) {
    case Activation::kRelu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - y * y;
  }
  return 1.0;
}

// Forward pass for one input row. activations[0] is the input; the last
// entry is the pre-normalization embedding.
void forward_one(const ParamVector& theta, const MlpConfig& cfg,
                 const std::vector<LayerDims>& layers, const double* input,
                 std::vector<std::vector<double>>& activations) {
  activations.resize(layers.size() + 1);
  activations[0].assign(input, input + cfg.input_dim);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerDims& layer = layers[l];
    const bool is_output = (l + 1 == layers.size());
    const std::vector<double>& x = activations[l];
    std::vector<double>& y = activations[l + 1];
    y.assign(layer.out, 0.0);
    const double* w = theta.data() + layer.w_offset;
    for (std::size_t j = 0; j < layer.out; ++j) {
      double acc = layer.has_bias ? theta[layer.b_offset + j] : 0.0;
      const double* wrow = w + j * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) acc += wrow[i] * x[i];
      y[j] = is_output ? acc : activate(acc, cfg.activation);
    }
  }
}

void l2_normalize(std::vector<double>& z) {
  double sq = 0.0;
  for (double v : z) sq += v * v;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : z) v *= inv;
}

}  // namespace

void validate(const MlpConfig& cfg) {
  if (cfg.input_dim < 1) throw std::invalid_argument("MlpConfig: input_dim must be >= 1");
  if (cfg.embed_dim < 1) throw std::invalid_argument("MlpConfig: embed_dim must be >= 1");
  for (std::size_t h : cfg.hidden_dims) {
    if (h < 1) throw std::invalid_argument("MlpConfig: hidden dims must be >= 1");
  }
}

std::size_t backbone_param_count(const MlpConfig& cfg) {
  validate(cfg);
  const auto layers = layer_layout(cfg);
  const LayerDims& last = layers.back();
  return last.has_bias ? last.b_offset + last.out
                       : last.w_offset + last.in * last.out;
}

std::pair<ParamVector, ModelSplit> build_model(const MlpConfig& cfg,
                                               std::size_t num_classes,
                                               RngStream& rng) {
  validate(cfg);
  const auto layers = layer_layout(cfg);
  ParamVector theta(backbone_param_count(cfg));
  for (const LayerDims& layer : layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t k = 0; k < layer.in * layer.out; ++k) {
      theta[layer.w_offset + k] = bound * (2.0 * rng.next_unit() - 1.0);
    }
    // Biases start at zero.
  }
  ModelSplit split;
  split.backbone_len = theta.size();
  split.num_classes = num_classes;
  split.embed_dim = cfg.embed_dim;
  return {std::move(theta), split};
}

ParamVector init_head(std::size_t num_classes, std::size_t embed_dim,
                      RngStream& rng) {
  if (num_classes < 1 || embed_dim < 1) {
    throw std::invalid_argument("init_head: counts must be >= 1");
  }
  const double stddev = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  return sample_gaussian_vector(num_classes * embed_dim, stddev, rng);
}

Matrix embed(const ParamVector& theta, const MlpConfig& cfg,
             const Matrix& inputs) {
  validate(cfg);
  if (inputs.cols != cfg.input_dim) {
    throw std::invalid_argument("embed: input has " +
                                std::to_string(inputs.cols) +
                                " columns, model expects " +
                                std::to_string(cfg.input_dim));
  }
  const auto layers = layer_layout(cfg);
  if (theta.size() != backbone_param_count(cfg)) {
    throw std::invalid_argument("embed: theta length " +
                                std::to_string(theta.size()) +
                                " does not match backbone length " +
                                std::to_string(backbone_param_count(cfg)));
  }
  Matrix out(inputs.rows, cfg.embed_dim);
  std::vector<std::vector<double>> activations;
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    forward_one(theta, cfg, layers, inputs.row(r), activations);
    std::vector<double> z = activations.back();
    if (cfg.l2_normalize_embedding) l2_normalize(z);
    for (std::size_t c = 0; c < cfg.embed_dim; ++c) out.at(r, c) = z[c];
  }
  return out;
}

LossAndGrads forward_loss_and_grads(const ParamVector& theta,
                                    const ParamVector& omega,
                                    const MlpConfig& cfg,
                                    const ModelSplit& split,
                                    const Batch& batch) {
  validate(cfg);
  if (batch.inputs.rows == 0) {
    throw std::invalid_argument("forward_loss_and_grads: empty batch");
  }
  if (batch.inputs.rows != batch.labels.size()) {
    throw std::invalid_argument(
        "forward_loss_and_grads: inputs/labels size mismatch");
  }
  if (batch.inputs.cols != cfg.input_dim) {
    throw std::invalid_argument("forward_loss_and_grads: input has " +
                                std::to_string(batch.inputs.cols) +
                                " columns, model expects " +
                                std::to_string(cfg.input_dim));
  }
  if (theta.size() != split.backbone_len ||
      split.backbone_len != backbone_param_count(cfg)) {
    throw std::invalid_argument("forward_loss_and_grads: theta/split mismatch");
  }
  if (omega.size() != split.head_len()) {
    throw std::invalid_argument("forward_loss_and_grads: omega length " +
                                std::to_string(omega.size()) +
                                " does not match head length " +
                                std::to_string(split.head_len()));
  }
  const std::size_t num_classes = split.num_classes;
  const std::size_t d = split.embed_dim;
  for (std::int64_t label : batch.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw std::invalid_argument("forward_loss_and_grads: label " +
                                  std::to_string(label) +
                                  " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }

  const auto layers = layer_layout(cfg);
  const double inv_batch = 1.0 / static_cast<double>(batch.inputs.rows);

  LossAndGrads result;
  result.g_theta = ParamVector(split.backbone_len);
  result.g_omega = ParamVector(split.head_len());

  std::vector<std::vector<double>> activations;
  std::vector<double> logits(num_classes);
  std::vector<double> dlogits(num_classes);
  std::vector<double> dz(d), du, dx;

  for (std::size_t r = 0; r < batch.inputs.rows; ++r) {
    forward_one(theta, cfg, layers, batch.inputs.row(r), activations);
    const std::vector<double>& u = activations.back();
    std::vector<double> z = u;
    double unorm = 0.0;
    if (cfg.l2_normalize_embedding) {
      for (double v : u) unorm += v * v;
      unorm = std::sqrt(unorm);
      if (unorm > 0.0) {
        for (double& v : z) v /= unorm;
      }
    }

    // Stabilized softmax cross-entropy.
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double* wrow = omega.data() + c * d;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += wrow[k] * z[k];
      logits[c] = acc;
      if (acc > max_logit) max_logit = acc;
    }
    double sum_exp = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      sum_exp += std::exp(logits[c] - max_logit);
    }
    const double log_sum_exp = max_logit + std::log(sum_exp);
    const std::size_t y = static_cast<std::size_t>(batch.labels[r]);
    result.loss += (log_sum_exp - logits[y]) * inv_batch;

    for (std::size_t c = 0; c < num_classes; ++c) {
      const double p = std::exp(logits[c] - log_sum_exp);
      dlogits[c] = (p - (c == y ? 1.0 : 0.0)) * inv_batch;
    }

    // Head gradient and embedding gradient.
    std::fill(dz.begin(), dz.end(), 0.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double g = dlogits[c];
      if (g == 0.0) continue;
      const double* wrow = omega.data() + c * d;
      double* growout = result.g_omega.data() + c * d;
      for (std::size_t k = 0; k < d; ++k) {
        growout[k] += g * z[k];
        dz[k] += g * wrow[k];
      }
    }

    // Through the normalization, if any: du = (dz - z (z . dz)) / ||u||.
    du = dz;
    if (cfg.l2_normalize_embedding && unorm > 0.0) {
      double zdz = 0.0;
      for (std::size_t k = 0; k < d; ++k) zdz += z[k] * dz[k];
      for (std::size_t k = 0; k < d; ++k) du[k] = (dz[k] - z[k] * zdz) / unorm;
    }

    // Backbone layers, last to first.
    std::vector<double> dout = du;
    for (std::size_t li = layers.size(); li-- > 0;) {
      const LayerDims& layer = layers[li];
      const bool is_output = (li + 1 == layers.size());
      const std::vector<double>& x = activations[li];
      const std::vector<double>& post = activations[li + 1];
      // d(pre-activation).
      std::vector<double>& dpre = dout;
      if (!is_output) {
        for (std::size_t j = 0; j < layer.out; ++j) {
          dpre[j] *= activate_grad_from_output(post[j], cfg.activation);
        }
      }
      const double* w = theta.data() + layer.w_offset;
      double* gw = result.g_theta.data() + layer.w_offset;
      if (li > 0) dx.assign(layer.in, 0.0);
      for (std::size_t j = 0; j < layer.out; ++j) {
        const double g = dpre[j];
        const double* wrow = w + j * layer.in;
        double* gwrow = gw + j * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) {
          gwrow[i] += g * x[i];
          if (li > 0) dx[i] += g * wrow[i];
        }
        if (layer.has_bias) result.g_theta[layer.b_offset + j] += g;
      }
      if (li > 0) dout = dx;
    }
  }
  return result;
}

}  // namespace dpfedemb
