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

#include "dpfedemb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dpfedemb {
namespace {

void validate_set(const EmbeddingSet& set) {
  if (set.embeddings.rows < 2) {
    throw std::invalid_argument("EmbeddingSet: need at least 2 embeddings");
  }
  if (set.labels.size() != set.embeddings.rows) {
    throw std::invalid_argument("EmbeddingSet: labels/rows mismatch");
  }
}

// Rows scaled to unit norm for cosine; zero rows stay zero.
Matrix prepare_rows(const EmbeddingSet& set, SimilarityMetric metric) {
  Matrix m = set.embeddings;
  if (metric == SimilarityMetric::kCosine) {
    for (std::size_t r = 0; r < m.rows; ++r) {
      double* row = m.row(r);
      double sq = 0.0;
      for (std::size_t c = 0; c < m.cols; ++c) sq += row[c] * row[c];
      if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t c = 0; c < m.cols; ++c) row[c] *= inv;
      }
    }
  }
  return m;
}

struct ThresholdQuery {
  std::vector<double> neg_sorted;        // ascending
  std::vector<double> pos_sorted;        // ascending
  std::vector<double> candidates_sorted;  // ascending, all scores

  explicit ThresholdQuery(const PairScores& scores)
      : neg_sorted(scores.negatives), pos_sorted(scores.positives) {
    std::sort(neg_sorted.begin(), neg_sorted.end());
    std::sort(pos_sorted.begin(), pos_sorted.end());
    candidates_sorted.reserve(neg_sorted.size() + pos_sorted.size());
    candidates_sorted.insert(candidates_sorted.end(), neg_sorted.begin(),
                             neg_sorted.end());
    candidates_sorted.insert(candidates_sorted.end(), pos_sorted.begin(),
                             pos_sorted.end());
    std::sort(candidates_sorted.begin(), candidates_sorted.end());
  }

  double far_at(double threshold) const {
    const auto it = std::lower_bound(neg_sorted.begin(), neg_sorted.end(),
                                     threshold);
    const std::size_t count_ge =
        static_cast<std::size_t>(neg_sorted.end() - it);
    return static_cast<double>(count_ge) /
           static_cast<double>(neg_sorted.size());
  }

  RocPoint query(double far_target) const {
    if (!(far_target > 0.0 && far_target <= 1.0)) {
      throw std::invalid_argument("recall_at_far: far target " +
                                  std::to_string(far_target) +
                                  " outside (0, 1]");
    }
    if (neg_sorted.empty() || pos_sorted.empty()) {
      throw std::invalid_argument(
          "recall_at_far: need at least one positive and one negative pair");
    }
    if (far_target * static_cast<double>(neg_sorted.size()) < 1.0) {
      throw UnresolvableFarError(
          "recall_at_far: FAR " + std::to_string(far_target) +
          " unresolvable with " + std::to_string(neg_sorted.size()) +
          " negative pairs (need >= " +
          std::to_string(static_cast<std::size_t>(std::ceil(1.0 / far_target))) +
          ")");
    }
    // far_at is nonincreasing in the threshold, so the admissible candidates
    // form a suffix of the sorted list; take its first element.
    const auto it = std::partition_point(
        candidates_sorted.begin(), candidates_sorted.end(),
        [&](double t) { return far_at(t) > far_target; });
    // far_at(max candidate) = 1/|neg| <= far_target, so `it` is valid.
    const double threshold = *it;
    const auto pos_it = std::lower_bound(pos_sorted.begin(), pos_sorted.end(),
                                         threshold);
    const double recall =
        static_cast<double>(pos_sorted.end() - pos_it) /
        static_cast<double>(pos_sorted.size());
    return {far_target, recall, threshold};
  }
};

}  // namespace

PairScores pairwise_scores(const EmbeddingSet& set, SimilarityMetric metric) {
  validate_set(set);
  const Matrix rows = prepare_rows(set, metric);
  PairScores scores;
  for (std::size_t i = 0; i < rows.rows; ++i) {
    const double* a = rows.row(i);
    for (std::size_t j = i + 1; j < rows.rows; ++j) {
      const double* b = rows.row(j);
      double dot = 0.0;
      for (std::size_t c = 0; c < rows.cols; ++c) dot += a[c] * b[c];
      if (set.labels[i] == set.labels[j]) {
        scores.positives.push_back(dot);
      } else {
        scores.negatives.push_back(dot);
      }
    }
  }
  return scores;
}

double recall_at_far_from_scores(const PairScores& scores, double far_target) {
  return ThresholdQuery(scores).query(far_target).recall;
}

double recall_at_far(const EmbeddingSet& set, double far_target,
                     SimilarityMetric metric) {
  return recall_at_far_from_scores(pairwise_scores(set, metric), far_target);
}

double recall_at_far_minibatch(const EmbeddingSet& set, double far_target,
                               std::size_t batch, RngStream& rng,
                               SimilarityMetric metric) {
  validate_set(set);
  if (batch < 2) {
    throw std::invalid_argument("recall_at_far_minibatch: batch must be >= 2");
  }
  const std::size_t n = set.embeddings.rows;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle_in_place(order, rng);

  PairScores pooled;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(start + batch, n);
    if (end - start < 2) continue;
    EmbeddingSet sub;
    sub.embeddings = Matrix(end - start, set.embeddings.cols);
    sub.labels.resize(end - start);
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t src = order[i];
      sub.labels[i - start] = set.labels[src];
      for (std::size_t c = 0; c < set.embeddings.cols; ++c) {
        sub.embeddings.at(i - start, c) = set.embeddings.at(src, c);
      }
    }
    PairScores part = pairwise_scores(sub, metric);
    pooled.positives.insert(pooled.positives.end(), part.positives.begin(),
                            part.positives.end());
    pooled.negatives.insert(pooled.negatives.end(), part.negatives.begin(),
                            part.negatives.end());
  }
  return recall_at_far_from_scores(pooled, far_target);
}

RocCurve roc_points(const EmbeddingSet& set, SimilarityMetric metric,
                    std::size_t num_points) {
  if (num_points < 2) {
    throw std::invalid_argument("roc_points: num_points must be >= 2");
  }
  const PairScores scores = pairwise_scores(set, metric);
  if (scores.negatives.empty() || scores.positives.empty()) {
    throw std::invalid_argument(
        "roc_points: need at least one positive and one negative pair");
  }
  const ThresholdQuery query(scores);
  const double far_min = 1.0 / static_cast<double>(scores.negatives.size());
  const double log_min = std::log(far_min);

  RocCurve curve;
  curve.points.reserve(num_points);
  for (std::size_t i = 0; i < num_points; ++i) {
    const double frac =
        static_cast<double>(i) / static_cast<double>(num_points - 1);
    // Geometric spacing from 1/|neg| to 1, clamped so rounding in exp/log
    // cannot push an endpoint outside the achievable range.
    double far = std::exp(log_min * (1.0 - frac));
    far = std::min(1.0, std::max(far, far_min));
    if (i + 1 == num_points) far = 1.0;
    curve.points.push_back(query.query(far));
  }
  return curve;
}

}  // namespace dpfedemb
