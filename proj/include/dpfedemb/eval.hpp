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

#ifndef DPFEDEMB_EVAL_HPP_
#define DPFEDEMB_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dpfedemb/matrix.hpp"
#include "dpfedemb/rng.hpp"

namespace dpfedemb {

enum class SimilarityMetric { kCosine, kInnerProduct };

struct EmbeddingSet {
  Matrix embeddings;                 // n x d
  std::vector<std::int64_t> labels;  // identity per row
};

struct PairScores {
  std::vector<double> positives;  // same-label pairs
  std::vector<double> negatives;  // different-label pairs
};

// The FAR target cannot be met: fewer negative pairs than 1/far.
class UnresolvableFarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Similarity for all unordered pairs, split by label agreement. Computed in
// row tiles so the full n x n matrix is never materialized.
PairScores pairwise_scores(const EmbeddingSet& set, SimilarityMetric metric);

// Threshold t = smallest observed score with (fraction of negatives >= t)
// <= far_target; returns the fraction of positives >= t.
double recall_at_far(const EmbeddingSet& set, double far_target,
                     SimilarityMetric metric);
double recall_at_far_from_scores(const PairScores& scores, double far_target);

// Approximation that only scores pairs inside random batches of the given
// size. batch >= n reduces to the exact all-pair recall.
double recall_at_far_minibatch(const EmbeddingSet& set, double far_target,
                               std::size_t batch, RngStream& rng,
                               SimilarityMetric metric);

struct RocPoint {
  double far = 0.0;
  double recall = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // far ascending
};

// Curve at num_points geometrically spaced FAR targets between
// 1/|negatives| and 1.
RocCurve roc_points(const EmbeddingSet& set, SimilarityMetric metric,
                    std::size_t num_points);

}  // namespace dpfedemb

#endif  // DPFEDEMB_EVAL_HPP_
