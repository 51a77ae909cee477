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
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "dpfedemb/data.hpp"
#include "dpfedemb/io_util.hpp"

using namespace dpfedemb;

namespace {

std::vector<UserDataset> tiny_users(std::size_t n, std::size_t examples_each) {
  std::vector<UserDataset> users(n);
  for (std::size_t i = 0; i < n; ++i) {
    users[i].user_id = "u" + std::to_string(i);
    for (std::size_t e = 0; e < examples_each; ++e) {
      users[i].examples.push_back(
          Example{{static_cast<double>(i), static_cast<double>(e)},
                  static_cast<std::int64_t>(i)});
    }
  }
  return users;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("sample_round_users endpoints") {
  RngStream rng(1, 1);
  CHECK(sample_round_users(5, 5, rng) ==
        std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(sample_round_users(5, 0, rng).empty());
  CHECK_THROWS_AS(sample_round_users(5, 6, rng), std::invalid_argument);
}

TEST_CASE("sample_round_users uniform marginal") {
  RngStream rng(99, 1);
  std::vector<int> hits(10, 0);
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    for (std::size_t u : sample_round_users(10, 2, rng)) ++hits[u];
  }
  for (int h : hits) {
    CHECK(std::abs(static_cast<double>(h) / trials - 0.2) < 0.01);
  }
}

TEST_CASE("form_virtual_clients sizes and partition") {
  const auto users = tiny_users(70, 2);
  RngStream rng(2, 1);

  SUBCASE("64 users in groups of 32") {
    RngStream srng(3, 1);
    const auto sampled = sample_round_users(70, 64, srng);
    const auto vcs = form_virtual_clients(users, sampled, 32, rng);
    REQUIRE(vcs.size() == 2);
    CHECK(vcs[0].members.size() == 32);
    CHECK(vcs[1].members.size() == 32);
  }
  SUBCASE("remainder forms a final smaller client") {
    RngStream srng(4, 1);
    const auto sampled = sample_round_users(70, 65, srng);
    const auto vcs = form_virtual_clients(users, sampled, 32, rng);
    REQUIRE(vcs.size() == 3);
    CHECK(vcs[0].members.size() == 32);
    CHECK(vcs[1].members.size() == 32);
    CHECK(vcs[2].members.size() == 1);
  }
  SUBCASE("every sampled user appears exactly once") {
    for (int round = 0; round < 50; ++round) {
      RngStream srng(5, round);
      RngStream grng(6, round);
      const std::size_t take = srng.next_below(70);
      const auto sampled = sample_round_users(70, take, srng);
      const auto vcs = form_virtual_clients(users, sampled, 1 + grng.next_below(40),
                                            grng);
      std::multiset<std::size_t> seen;
      std::size_t merged_total = 0;
      for (const auto& vc : vcs) {
        seen.insert(vc.member_indices.begin(), vc.member_indices.end());
        merged_total += vc.merged.size();
      }
      CHECK(seen.size() == sampled.size());
      CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() ==
            sampled.size());
      for (std::size_t u : sampled) CHECK(seen.count(u) == 1);
      CHECK(merged_total == 2 * sampled.size());
    }
  }
  SUBCASE("empty sample yields no clients") {
    CHECK(form_virtual_clients(users, {}, 32, rng).empty());
  }
}

TEST_CASE("regrouping differs across rounds with the same sampled set") {
  const auto users = tiny_users(16, 1);
  std::vector<std::size_t> sampled(16);
  for (std::size_t i = 0; i < 16; ++i) sampled[i] = i;
  RngStream r0 = derive_stream(7, StreamPurpose::kVcGrouping, 0);
  RngStream r1 = derive_stream(7, StreamPurpose::kVcGrouping, 1);
  const auto a = form_virtual_clients(users, sampled, 4, r0);
  const auto b = form_virtual_clients(users, sampled, 4, r1);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].member_indices != b[i].member_indices) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("cap_examples") {
  RngStream rng(8, 1);
  VirtualClient vc;
  vc.members = {"u0"};
  vc.member_indices = {0};
  for (int i = 0; i < 5000; ++i) {
    vc.merged.push_back(Example{{static_cast<double>(i)}, 0});
  }

  SUBCASE("small clients unchanged") {
    VirtualClient small = vc;
    small.merged.resize(100);
    const auto capped = cap_examples(small, 2048, rng);
    CHECK(capped.merged.size() == 100);
  }
  SUBCASE("subsampled exactly to the cap, without replacement") {
    const auto capped = cap_examples(vc, 2048, rng);
    CHECK(capped.merged.size() == 2048);
    std::set<double> uniq;
    for (const auto& e : capped.merged) uniq.insert(e.input[0]);
    CHECK(uniq.size() == 2048);
  }
  SUBCASE("cap of one") {
    const auto capped = cap_examples(vc, 1, rng);
    CHECK(capped.merged.size() == 1);
  }
  SUBCASE("cap zero rejected") {
    CHECK_THROWS_AS(cap_examples(vc, 0, rng), std::invalid_argument);
  }
}

TEST_CASE("synthetic identities") {
  SUBCASE("zero noise copies the prototype") {
    RngStream rng(10, 1);
    const auto users =
        generate_synthetic_identities({4, 1, 3, 8, 0.0}, rng);
    REQUIRE(users.size() == 4);
    for (const auto& u : users) {
      REQUIRE(u.examples.size() == 3);
      CHECK(u.examples[0].input == u.examples[1].input);
      CHECK(u.examples[0].input == u.examples[2].input);
      double norm = 0;
      for (double v : u.examples[0].input) norm += v * v;
      CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("one class per user gives distinct classes") {
    RngStream rng(11, 1);
    const auto users =
        generate_synthetic_identities({512, 1, 1, 4, 0.1}, rng);
    CHECK(class_count(users) == 512);
    std::set<std::int64_t> labels;
    for (const auto& u : users) labels.insert(u.examples[0].label);
    CHECK(labels.size() == 512);
  }
  SUBCASE("prototypes nearly orthogonal in high dimension") {
    RngStream rng(12, 1);
    const auto users =
        generate_synthetic_identities({40, 1, 1, 64, 0.0}, rng);
    double mean_abs_cos = 0;
    int pairs = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
      for (std::size_t j = i + 1; j < users.size(); ++j) {
        double dot = 0;
        for (std::size_t k = 0; k < 64; ++k) {
          dot += users[i].examples[0].input[k] * users[j].examples[0].input[k];
        }
        mean_abs_cos += std::abs(dot);
        ++pairs;
      }
    }
    CHECK(mean_abs_cos / pairs < 0.2);
  }
}

TEST_CASE("csv round trip and errors") {
  const std::string path = temp_path("dpfedemb_test_data.csv");

  SUBCASE("three rows two users") {
    write_text_file(path,
                    "user_id,label,x0,x1\n"
                    "alice,0,0.5,1.5\n"
                    "bob,1,-1,2\n"
                    "alice,0,0.25,0.125\n");
    const auto users = load_dataset_csv(path);
    REQUIRE(users.size() == 2);
    CHECK(users[0].user_id == "alice");
    CHECK(users[0].examples.size() == 2);
    CHECK(users[1].examples.size() == 1);
    CHECK(class_count(users) == 2);
  }
  SUBCASE("empty file gives empty list") {
    write_text_file(path, "");
    CHECK(load_dataset_csv(path).empty());
  }
  SUBCASE("malformed row reports its line number") {
    write_text_file(path,
                    "user_id,label,x0\n"
                    "alice,0,1.0\n"
                    "bob,zzz,2.0\n");
    try {
      load_dataset_csv(path);
      FAIL("expected parse error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("write then load returns an equal structure") {
    RngStream rng(13, 1);
    const auto users = generate_synthetic_identities({6, 2, 3, 5, 0.2}, rng);
    save_dataset_csv(path, users);
    const auto loaded = load_dataset_csv(path);
    REQUIRE(loaded.size() == users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
      CHECK(loaded[i].user_id == users[i].user_id);
      REQUIRE(loaded[i].examples.size() == users[i].examples.size());
      for (std::size_t e = 0; e < users[i].examples.size(); ++e) {
        CHECK(loaded[i].examples[e].label == users[i].examples[e].label);
        CHECK(loaded[i].examples[e].input == users[i].examples[e].input);
      }
    }
  }
  std::remove(path.c_str());
}
