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

#ifndef DPFEDEMB_PARAM_VECTOR_HPP_
#define DPFEDEMB_PARAM_VECTOR_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

#include "dpfedemb/rng.hpp"

namespace dpfedemb {

// Flat 64-bit parameter/update vector. The unit of clipping, noising, and
// aggregation; length is fixed at construction and all binary operations
// require matching lengths.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t len, double fill = 0.0)
      : values_(len, fill) {}
  explicit ParamVector(std::vector<double> values)
      : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
};

// Marks parameters as frozen (non-trainable). An empty mask freezes nothing.
struct TrainableMask {
  std::vector<std::uint8_t> frozen;

  bool empty() const { return frozen.empty(); }
  std::size_t size() const { return frozen.size(); }

  // Freezes the half-open index ranges [first, second) of a length-`len`
  // vector; ranges may overlap.
  static TrainableMask from_ranges(
      std::size_t len,
      const std::vector<std::pair<std::size_t, std::size_t>>& ranges);
};

double l2_norm(const ParamVector& v);

// v * min(1, gamma / ||v||). gamma may be +infinity (clipping disabled);
// the zero vector is returned unchanged.
ParamVector clip_to_norm(const ParamVector& v, double gamma);

// dst + c * src, elementwise.
ParamVector add_scaled(const ParamVector& dst, const ParamVector& src,
                       double c);
void add_scaled_in_place(ParamVector& dst, const ParamVector& src, double c);

void scale_in_place(ParamVector& v, double c);

// i.i.d. N(0, stddev^2) entries; stddev == 0 yields the zero vector without
// consuming any draws.
ParamVector sample_gaussian_vector(std::size_t len, double stddev,
                                   RngStream& rng);

// Zeroes frozen positions, leaves the rest untouched. Idempotent.
ParamVector apply_mask(const ParamVector& v, const TrainableMask& mask);
void apply_mask_in_place(ParamVector& v, const TrainableMask& mask);

}  // namespace dpfedemb

#endif  // DPFEDEMB_PARAM_VECTOR_HPP_
