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

#include "dpfedemb/param_vector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpfedemb {
namespace {

void require_same_length(const ParamVector& a, const ParamVector& b,
                         const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

}  // namespace

bool ParamVector::all_finite() const {
  for (double x : values_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

TrainableMask TrainableMask::from_ranges(
    std::size_t len,
    const std::vector<std::pair<std::size_t, std::size_t>>& ranges) {
  TrainableMask mask;
  mask.frozen.assign(len, 0);
  for (const auto& [first, last] : ranges) {
    if (first > last || last > len) {
      throw std::invalid_argument("TrainableMask: range [" +
                                  std::to_string(first) + ", " +
                                  std::to_string(last) +
                                  ") out of bounds for length " +
                                  std::to_string(len));
    }
    for (std::size_t i = first; i < last; ++i) mask.frozen[i] = 1;
  }
  return mask;
}

double l2_norm(const ParamVector& v) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sum += v[i] * v[i];
  return std::sqrt(sum);
}

ParamVector clip_to_norm(const ParamVector& v, double gamma) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("clip_to_norm: gamma must be > 0, got " +
                                std::to_string(gamma));
  }
  const double norm = l2_norm(v);
  if (norm == 0.0 || norm <= gamma) return v;
  ParamVector out = v;
  scale_in_place(out, gamma / norm);
  return out;
}

ParamVector add_scaled(const ParamVector& dst, const ParamVector& src,
                       double c) {
  ParamVector out = dst;
  add_scaled_in_place(out, src, c);
  return out;
}

void add_scaled_in_place(ParamVector& dst, const ParamVector& src, double c) {
  require_same_length(dst, src, "add_scaled");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c * src[i];
}

void scale_in_place(ParamVector& v, double c) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= c;
}

ParamVector sample_gaussian_vector(std::size_t len, double stddev,
                                   RngStream& rng) {
  if (stddev < 0.0) {
    throw std::invalid_argument("sample_gaussian_vector: stddev must be >= 0");
  }
  ParamVector out(len);
  if (stddev == 0.0) return out;
  for (std::size_t i = 0; i < len; ++i) out[i] = stddev * rng.next_gaussian();
  return out;
}

ParamVector apply_mask(const ParamVector& v, const TrainableMask& mask) {
  ParamVector out = v;
  apply_mask_in_place(out, mask);
  return out;
}

void apply_mask_in_place(ParamVector& v, const TrainableMask& mask) {
  if (mask.empty()) return;
  if (mask.size() != v.size()) {
    throw std::invalid_argument("apply_mask: mask length " +
                                std::to_string(mask.size()) +
                                " does not match vector length " +
                                std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask.frozen[i]) v[i] = 0.0;
  }
}

}  // namespace dpfedemb
