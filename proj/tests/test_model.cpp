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
#include "dpfedemb/model.hpp"
#include "oracles.hpp"

using namespace dpfedemb;

namespace {

MlpConfig small_cfg(std::size_t input, std::vector<std::size_t> hidden,
                    std::size_t embed, Activation act = Activation::kRelu,
                    bool normalize = false) {
  MlpConfig cfg;
  cfg.input_dim = input;
  cfg.hidden_dims = std::move(hidden);
  cfg.embed_dim = embed;
  cfg.activation = act;
  cfg.l2_normalize_embedding = normalize;
  return cfg;
}

Batch single_example(std::vector<double> x, std::int64_t y) {
  Batch b;
  b.inputs = Matrix::from_rows({std::move(x)});
  b.labels = {y};
  return b;
}

}  // namespace

TEST_CASE("backbone parameter counts") {
  CHECK(backbone_param_count(small_cfg(4, {}, 4)) == 16);
  CHECK(backbone_param_count(small_cfg(4, {8}, 2)) == 4 * 8 + 8 + 8 * 2 + 2);
  RngStream rng(1, 1);
  auto [theta, split] = build_model(small_cfg(4, {8}, 2), 10, rng);
  CHECK(theta.size() == 58);
  CHECK(split.backbone_len == 58);
  CHECK(split.head_len() == 20);
  CHECK(split.total_len() == 78);
}

TEST_CASE("init_head length and stddev") {
  RngStream rng(2, 1);
  CHECK(init_head(3, 4, rng).size() == 12);

  RngStream a(9, 9), b(9, 9);
  CHECK(init_head(5, 7, a) == init_head(5, 7, b));

  RngStream wide(5, 5);
  const ParamVector head = init_head(250000, 4, wide);  // 1e6 entries, d=4
  double sq = 0;
  for (std::size_t i = 0; i < head.size(); ++i) sq += head[i] * head[i];
  const double std = std::sqrt(sq / static_cast<double>(head.size()));
  CHECK(std == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("embed identity linear backbone") {
  const MlpConfig cfg = small_cfg(2, {}, 2);
  const ParamVector theta({1, 0, 0, 1});
  const Matrix z = embed(theta, cfg, Matrix::from_rows({{1, 0}}));
  CHECK(z.at(0, 0) == 1.0);
  CHECK(z.at(0, 1) == 0.0);
}

TEST_CASE("embed normalization and zero network") {
  SUBCASE("unit norm when enabled") {
    const MlpConfig cfg = small_cfg(3, {}, 3, Activation::kRelu, true);
    const ParamVector theta({2, 0, 0, 0, 5, 0, 0, 0, -1});
    const Matrix z = embed(theta, cfg, Matrix::from_rows({{1, 2, 3}}));
    double n = 0;
    for (std::size_t c = 0; c < 3; ++c) n += z.at(0, c) * z.at(0, c);
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero theta gives zero embedding") {
    const MlpConfig cfg = small_cfg(3, {4}, 2);
    const ParamVector theta(backbone_param_count(cfg));
    const Matrix z = embed(theta, cfg, Matrix::from_rows({{1, -2, 3}}));
    CHECK(z.at(0, 0) == 0.0);
    CHECK(z.at(0, 1) == 0.0);
  }
  SUBCASE("dimension mismatch is named") {
    const MlpConfig cfg = small_cfg(3, {}, 2);
    const ParamVector theta(backbone_param_count(cfg));
    CHECK_THROWS_AS(embed(theta, cfg, Matrix::from_rows({{1, 2}})),
                    std::invalid_argument);
  }
}

TEST_CASE("uniform softmax loss is ln(C)") {
  const MlpConfig cfg = small_cfg(3, {}, 2);
  RngStream rng(3, 1);
  auto [theta, split] = build_model(cfg, 7, rng);
  const ParamVector omega(split.head_len());  // zero head, logits all equal
  const auto out = forward_loss_and_grads(theta, omega, cfg, split,
                                          single_example({0.3, -1.2, 0.7}, 2));
  CHECK(out.loss == doctest::Approx(std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("hand-computed two-class loss") {
  // Identity 2->2 linear backbone, head rows e1 and e2, x = [1, 0], y = 0:
  // logits (1, 0) so loss = ln(1 + exp(-1)).
  const MlpConfig cfg = small_cfg(2, {}, 2);
  const ParamVector theta({1, 0, 0, 1});
  ModelSplit split{4, 2, 2};
  const ParamVector omega({1, 0, 0, 1});
  const auto out = forward_loss_and_grads(theta, omega, cfg, split,
                                          single_example({1, 0}, 0));
  CHECK(out.loss == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("loss is invariant to batch order") {
  const MlpConfig cfg = small_cfg(4, {6}, 3, Activation::kTanh);
  RngStream rng(4, 1);
  auto [theta, split] = build_model(cfg, 5, rng);
  RngStream hrng(4, 2);
  const ParamVector omega = init_head(5, 3, hrng);

  Batch fwd, rev;
  std::vector<std::vector<double>> rows;
  std::vector<std::int64_t> labels;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.next_gaussian();
    rows.push_back(x);
    labels.push_back(i % 5);
  }
  fwd.inputs = Matrix::from_rows(rows);
  fwd.labels = labels;
  std::reverse(rows.begin(), rows.end());
  std::reverse(labels.begin(), labels.end());
  rev.inputs = Matrix::from_rows(rows);
  rev.labels = labels;

  const auto a = forward_loss_and_grads(theta, omega, cfg, split, fwd);
  const auto b = forward_loss_and_grads(theta, omega, cfg, split, rev);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
}

TEST_CASE("scaling a linear backbone cancels under normalization") {
  const MlpConfig cfg = small_cfg(3, {}, 3, Activation::kRelu, true);
  const ParamVector theta({0.2, -0.5, 0.1, 0.9, 0.4, -0.3, 0.7, 0.0, 0.6});
  ParamVector scaled = theta;
  scale_in_place(scaled, 3.7);
  const Matrix x = Matrix::from_rows({{0.5, -1.0, 2.0}, {1, 1, 1}});
  const Matrix za = embed(theta, cfg, x);
  const Matrix zb = embed(scaled, cfg, x);
  for (std::size_t i = 0; i < za.data.size(); ++i) {
    CHECK(za.data[i] == doctest::Approx(zb.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("error paths") {
  const MlpConfig cfg = small_cfg(2, {}, 2);
  const ParamVector theta({1, 0, 0, 1});
  ModelSplit split{4, 2, 2};
  const ParamVector omega({1, 0, 0, 1});
  Batch empty;
  CHECK_THROWS_AS(forward_loss_and_grads(theta, omega, cfg, split, empty),
                  std::invalid_argument);
  CHECK_THROWS_AS(forward_loss_and_grads(theta, omega, cfg, split,
                                         single_example({1, 0}, 5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(forward_loss_and_grads(theta, ParamVector(3), cfg, split,
                                         single_example({1, 0}, 0)),
                  std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences") {
  RngStream rng(12, 7);
  int trials = 0;
  for (int t = 0; t < 25; ++t) {
    // Random small architectures; tanh keeps the loss smooth so central
    // differences are trustworthy everywhere. Dedicated relu cases below.
    const std::size_t input = 2 + rng.next_below(4);
    std::vector<std::size_t> hidden;
    if (rng.next_below(2) == 1) hidden.push_back(2 + rng.next_below(5));
    const std::size_t embeddim = 2 + rng.next_below(3);
    const bool normalize = rng.next_below(2) == 1;
    const MlpConfig cfg =
        small_cfg(input, hidden, embeddim, Activation::kTanh, normalize);
    const std::size_t classes = 2 + rng.next_below(4);

    auto [theta, split] = build_model(cfg, classes, rng);
    ParamVector omega = init_head(classes, embeddim, rng);

    Batch batch;
    const std::size_t bsz = 1 + rng.next_below(5);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < bsz; ++i) {
      std::vector<double> x(input);
      for (double& v : x) v = rng.next_gaussian();
      rows.push_back(x);
      batch.labels.push_back(static_cast<std::int64_t>(rng.next_below(classes)));
    }
    batch.inputs = Matrix::from_rows(rows);

    const auto analytic = forward_loss_and_grads(theta, omega, cfg, split, batch);
    const auto fd = dpfedemb::test::finite_difference_grads(theta, omega, cfg,
                                                            split, batch, 1e-5);
    CHECK(dpfedemb::test::norm_relative_error(analytic.g_theta, fd.g_theta) < 1e-5);
    CHECK(dpfedemb::test::norm_relative_error(analytic.g_omega, fd.g_omega) < 1e-5);
    ++trials;
  }
  CHECK(trials == 25);
}

TEST_CASE("relu gradients match finite differences away from kinks") {
  // Fixed seeds chosen so no pre-activation sits near zero; relu is exact
  // there and central differences are valid.
  RngStream rng(1001, 3);
  const MlpConfig cfg = small_cfg(3, {5}, 2, Activation::kRelu);
  auto [theta, split] = build_model(cfg, 3, rng);
  ParamVector omega = init_head(3, 2, rng);
  Batch batch;
  batch.inputs = Matrix::from_rows({{1.3, -0.7, 2.1}, {-0.9, 1.8, 0.4}});
  batch.labels = {0, 2};
  const auto analytic = forward_loss_and_grads(theta, omega, cfg, split, batch);
  const auto fd = dpfedemb::test::finite_difference_grads(theta, omega, cfg,
                                                          split, batch, 1e-5);
  CHECK(dpfedemb::test::norm_relative_error(analytic.g_theta, fd.g_theta) < 1e-5);
  CHECK(dpfedemb::test::norm_relative_error(analytic.g_omega, fd.g_omega) < 1e-5);
}
