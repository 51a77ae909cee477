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

#ifndef DPFEDEMB_DATA_HPP_
#define DPFEDEMB_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dpfedemb/rng.hpp"

namespace dpfedemb {

struct Example {
  std::vector<double> input;
  std::int64_t label = 0;
};

// All data owned by one user; the unit of privacy.
struct UserDataset {
  std::string user_id;
  std::vector<Example> examples;
};

// A round-scoped group of users whose merged data acts as one federated
// client. Within one round a user belongs to at most one virtual client.
struct VirtualClient {
  std::vector<std::size_t> member_indices;  // indices into the dataset
  std::vector<std::string> members;         // user ids, same order
  std::vector<Example> merged;              // shuffled concatenation
};

struct RoundSample {
  std::size_t round_index = 0;
  std::vector<std::size_t> sampled_users;
  std::vector<VirtualClient> virtual_clients;
};

// Number of classes implied by the dataset: labels must be dense in
// [0, max_label]. Throws if any label is negative.
std::size_t class_count(const std::vector<UserDataset>& users);

// Uniform sample without replacement of `users_per_round` indices out of
// [0, num_users); returned sorted.
std::vector<std::size_t> sample_round_users(std::size_t num_users,
                                            std::size_t users_per_round,
                                            RngStream& rng);

// Randomly partitions the sampled users into groups of `users_per_vc`; a
// final smaller group keeps the remainder. Each client's merged example list
// is shuffled.
std::vector<VirtualClient> form_virtual_clients(
    const std::vector<UserDataset>& all_users,
    const std::vector<std::size_t>& sampled, std::size_t users_per_vc,
    RngStream& rng);

// Uniform subsample without replacement down to `cap` examples; smaller
// clients pass through unchanged.
VirtualClient cap_examples(VirtualClient vc, std::size_t cap, RngStream& rng);

struct SyntheticSpec {
  std::size_t num_users = 0;
  std::size_t classes_per_user = 1;
  std::size_t examples_per_class = 1;
  std::size_t input_dim = 0;
  double noise_std = 0.0;
};

// One random unit-norm prototype per class; examples are prototype plus
// isotropic Gaussian noise. classes_per_user == 1 reproduces the
// one-identity-per-user regime.
std::vector<UserDataset> generate_synthetic_identities(const SyntheticSpec& spec,
                                                       RngStream& rng);

// CSV schema: header "user_id,label,x0,...,x{D-1}", one example per row.
// Rows are grouped by user_id preserving first-seen order.
std::vector<UserDataset> load_dataset_csv(const std::string& path);
void save_dataset_csv(const std::string& path,
                      const std::vector<UserDataset>& users);

}  // namespace dpfedemb

#endif  // DPFEDEMB_DATA_HPP_
