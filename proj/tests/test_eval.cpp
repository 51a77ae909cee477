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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "dpfedemb/eval.hpp"
#include "dpfedemb/rng.hpp"
#include "oracles.hpp"

using namespace dpfedemb;

namespace {

EmbeddingSet random_set(std::size_t n, std::size_t d, std::size_t classes,
                        RngStream& rng) {
  EmbeddingSet set;
  set.embeddings = Matrix(n, d);
  set.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      set.embeddings.at(i, c) = rng.next_gaussian();
    }
    set.labels[i] = static_cast<std::int64_t>(rng.next_below(classes));
  }
  return set;
}

// Two tight, well-separated clusters: positives score ~1, negatives ~0.
EmbeddingSet separated_set(std::size_t per_class) {
  EmbeddingSet set;
  set.embeddings = Matrix(2 * per_class, 4);
  set.labels.resize(2 * per_class);
  for (std::size_t i = 0; i < per_class; ++i) {
    set.embeddings.at(i, 0) = 1.0;
    set.labels[i] = 0;
    set.embeddings.at(per_class + i, 1) = 1.0;
    set.labels[per_class + i] = 1;
  }
  return set;
}

}  // namespace

TEST_CASE("pairwise_scores counts and orthogonality") {
  SUBCASE("two items same label") {
    EmbeddingSet set;
    set.embeddings = Matrix::from_rows({{1, 0}, {0, 1}});
    set.labels = {3, 3};
    const PairScores s = pairwise_scores(set, SimilarityMetric::kCosine);
    CHECK(s.positives.size() == 1);
    CHECK(s.negatives.empty());
  }
  SUBCASE("orthonormal rows score zero across") {
    EmbeddingSet set;
    set.embeddings = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    set.labels = {0, 1, 2};
    const PairScores s = pairwise_scores(set, SimilarityMetric::kCosine);
    CHECK(s.negatives.size() == 3);
    for (double v : s.negatives) CHECK(v == 0.0);
  }
  SUBCASE("n=4 gives 6 pairs") {
    RngStream rng(1, 1);
    const EmbeddingSet set = random_set(4, 3, 2, rng);
    const PairScores s = pairwise_scores(set, SimilarityMetric::kInnerProduct);
    CHECK(s.positives.size() + s.negatives.size() == 6);
  }
}

TEST_CASE("recall_at_far basics") {
  SUBCASE("perfect separation") {
    const EmbeddingSet set = separated_set(40);
    CHECK(recall_at_far(set, 1e-3, SimilarityMetric::kCosine) == 1.0);
  }
  SUBCASE("exchangeable scores give recall close to far") {
    RngStream rng(2, 1);
    PairScores scores;
    for (int i = 0; i < 10000; ++i) scores.positives.push_back(rng.next_unit());
    for (int i = 0; i < 10000; ++i) scores.negatives.push_back(rng.next_unit());
    const double recall = recall_at_far_from_scores(scores, 0.1);
    CHECK(std::abs(recall - 0.1) < 0.02);
  }
  SUBCASE("unresolvable FAR raises the dedicated error") {
    const EmbeddingSet set = separated_set(3);  // 9 negative pairs
    CHECK_THROWS_AS(recall_at_far(set, 0.01, SimilarityMetric::kCosine),
                    UnresolvableFarError);
  }
  SUBCASE("far outside (0,1] rejected") {
    const EmbeddingSet set = separated_set(3);
    CHECK_THROWS_AS(recall_at_far(set, 0.0, SimilarityMetric::kCosine),
                    std::invalid_argument);
    CHECK_THROWS_AS(recall_at_far(set, 1.5, SimilarityMetric::kCosine),
                    std::invalid_argument);
  }
  SUBCASE("all same label has no negatives") {
    EmbeddingSet set;
    set.embeddings = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
    set.labels = {0, 0, 0};
    CHECK_THROWS_AS(recall_at_far(set, 0.5, SimilarityMetric::kCosine),
                    std::invalid_argument);
  }
}

TEST_CASE("recall_at_far matches the exhaustive-threshold oracle") {
  RngStream rng(3, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng.next_below(191);  // up to 200
    const std::size_t classes = 2 + rng.next_below(12);
    const EmbeddingSet set = random_set(n, 6, classes, rng);
    const PairScores scores = pairwise_scores(set, SimilarityMetric::kCosine);
    if (scores.positives.empty() || scores.negatives.empty()) continue;
    const double far =
        std::max(1.0 / static_cast<double>(scores.negatives.size()),
                 0.001 + 0.3 * rng.next_unit());
    const double got = recall_at_far_from_scores(scores, far);
    const double want = dpfedemb::test::brute_force_recall_at_far(scores, far);
    CHECK(got == want);  // exact match required
  }
}

TEST_CASE("recall monotone in far target") {
  RngStream rng(4, 2);
  const EmbeddingSet set = random_set(120, 5, 6, rng);
  double prev = -1.0;
  for (double far : {0.01, 0.05, 0.1, 0.3, 0.6, 1.0}) {
    const double r = recall_at_far(set, far, SimilarityMetric::kCosine);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("label permutation and cosine scale invariance") {
  RngStream rng(5, 2);
  EmbeddingSet set = random_set(60, 4, 5, rng);
  const double base = recall_at_far(set, 0.05, SimilarityMetric::kCosine);

  // Relabel classes through a fixed permutation: metrics unchanged.
  EmbeddingSet permuted = set;
  for (auto& label : permuted.labels) label = (label + 2) % 5;
  CHECK(recall_at_far(permuted, 0.05, SimilarityMetric::kCosine) == base);

  // Per-row positive scaling: cosine scores unchanged.
  EmbeddingSet scaled = set;
  for (std::size_t i = 0; i < scaled.embeddings.rows; ++i) {
    const double c = 0.1 + 5.0 * rng.next_unit();
    for (std::size_t k = 0; k < scaled.embeddings.cols; ++k) {
      scaled.embeddings.at(i, k) *= c;
    }
  }
  CHECK(recall_at_far(scaled, 0.05, SimilarityMetric::kCosine) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("minibatch recall") {
  RngStream rng(6, 2);
  const EmbeddingSet set = random_set(300, 5, 10, rng);

  SUBCASE("single batch equals all-pair exactly") {
    RngStream brng(7, 1);
    const double all = recall_at_far(set, 0.05, SimilarityMetric::kCosine);
    const double batched = recall_at_far_minibatch(set, 0.05, 300, brng,
                                                   SimilarityMetric::kCosine);
    CHECK(batched == all);
    RngStream brng2(7, 2);
    CHECK(recall_at_far_minibatch(set, 0.05, 1000, brng2,
                                  SimilarityMetric::kCosine) == all);
  }
  SUBCASE("perfect separation survives any batching") {
    const EmbeddingSet sep = separated_set(100);
    RngStream brng(8, 1);
    CHECK(recall_at_far_minibatch(sep, 0.05, 16, brng,
                                  SimilarityMetric::kCosine) == 1.0);
  }
  SUBCASE("batch below 2 rejected") {
    RngStream brng(9, 1);
    CHECK_THROWS_AS(recall_at_far_minibatch(set, 0.05, 1, brng,
                                            SimilarityMetric::kCosine),
                    std::invalid_argument);
  }
}

TEST_CASE("roc curve") {
  SUBCASE("perfect separation holds recall 1 everywhere") {
    const EmbeddingSet set = separated_set(50);
    const RocCurve curve = roc_points(set, SimilarityMetric::kCosine, 16);
    REQUIRE(curve.points.size() == 16);
    for (const RocPoint& p : curve.points) CHECK(p.recall == 1.0);
  }
  SUBCASE("random embeddings track the diagonal") {
    RngStream rng(10, 3);
    const EmbeddingSet set = random_set(2000, 8, 40, rng);
    const RocCurve curve = roc_points(set, SimilarityMetric::kCosine, 24);
    for (const RocPoint& p : curve.points) {
      if (p.far >= 0.05) CHECK(std::abs(p.recall - p.far) < 0.05);
    }
  }
  SUBCASE("far and recall are nondecreasing along the curve") {
    RngStream rng(11, 3);
    const EmbeddingSet set = random_set(150, 4, 6, rng);
    const RocCurve curve = roc_points(set, SimilarityMetric::kInnerProduct, 12);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      CHECK(curve.points[i].far >= curve.points[i - 1].far);
      CHECK(curve.points[i].recall >= curve.points[i - 1].recall);
    }
  }
  SUBCASE("num_points below 2 rejected") {
    const EmbeddingSet set = separated_set(5);
    CHECK_THROWS_AS(roc_points(set, SimilarityMetric::kCosine, 1),
                    std::invalid_argument);
  }
}
