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

#include "dpfedemb/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "dpfedemb/io_util.hpp"

namespace dpfedemb {

std::size_t class_count(const std::vector<UserDataset>& users) {
  std::int64_t max_label = -1;
  for (const UserDataset& u : users) {
    for (const Example& e : u.examples) {
      if (e.label < 0) {
        throw std::invalid_argument("class_count: negative label for user " +
                                    u.user_id);
      }
      max_label = std::max(max_label, e.label);
    }
  }
  return static_cast<std::size_t>(max_label + 1);
}

std::vector<std::size_t> sample_round_users(std::size_t num_users,
                                            std::size_t users_per_round,
                                            RngStream& rng) {
  if (users_per_round > num_users) {
    throw std::invalid_argument("sample_round_users: cannot sample " +
                                std::to_string(users_per_round) + " of " +
                                std::to_string(num_users) + " users");
  }
  // Partial Fisher-Yates: the first users_per_round slots are a uniform
  // sample without replacement.
  std::vector<std::size_t> pool(num_users);
  for (std::size_t i = 0; i < num_users; ++i) pool[i] = i;
  for (std::size_t i = 0; i < users_per_round; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(
                                  rng.next_below(num_users - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(users_per_round);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<VirtualClient> form_virtual_clients(
    const std::vector<UserDataset>& all_users,
    const std::vector<std::size_t>& sampled, std::size_t users_per_vc,
    RngStream& rng) {
  if (users_per_vc < 1) {
    throw std::invalid_argument("form_virtual_clients: users_per_vc must be >= 1");
  }
  std::vector<VirtualClient> clients;
  if (sampled.empty()) return clients;

  std::vector<std::size_t> order = sampled;
  shuffle_in_place(order, rng);

  for (std::size_t start = 0; start < order.size(); start += users_per_vc) {
    const std::size_t end = std::min(start + users_per_vc, order.size());
    VirtualClient vc;
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t idx = order[i];
      if (idx >= all_users.size()) {
        throw std::invalid_argument("form_virtual_clients: user index out of range");
      }
      vc.member_indices.push_back(idx);
      vc.members.push_back(all_users[idx].user_id);
      const auto& examples = all_users[idx].examples;
      vc.merged.insert(vc.merged.end(), examples.begin(), examples.end());
    }
    shuffle_in_place(vc.merged, rng);
    clients.push_back(std::move(vc));
  }
  return clients;
}

VirtualClient cap_examples(VirtualClient vc, std::size_t cap, RngStream& rng) {
  if (cap < 1) throw std::invalid_argument("cap_examples: cap must be >= 1");
  if (vc.merged.size() <= cap) return vc;
  // Partial Fisher-Yates; the kept prefix is a uniform subsample and stays
  // in random order for minibatching.
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(
                                  rng.next_below(vc.merged.size() - i));
    std::swap(vc.merged[i], vc.merged[j]);
  }
  vc.merged.resize(cap);
  return vc;
}

std::vector<UserDataset> generate_synthetic_identities(const SyntheticSpec& spec,
                                                       RngStream& rng) {
  if (spec.num_users < 1 || spec.classes_per_user < 1 ||
      spec.examples_per_class < 1 || spec.input_dim < 1) {
    throw std::invalid_argument("generate_synthetic_identities: counts must be >= 1");
  }
  if (spec.noise_std < 0.0) {
    throw std::invalid_argument("generate_synthetic_identities: noise_std must be >= 0");
  }
  const std::size_t num_classes = spec.num_users * spec.classes_per_user;

  // Unit-norm prototypes, one per class.
  std::vector<std::vector<double>> prototypes(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<double>& p = prototypes[c];
    p.resize(spec.input_dim);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : p) {
        v = rng.next_gaussian();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : p) v /= norm;
  }

  std::vector<UserDataset> users(spec.num_users);
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    users[u].user_id = "user" + std::to_string(u);
    for (std::size_t k = 0; k < spec.classes_per_user; ++k) {
      const std::size_t c = u * spec.classes_per_user + k;
      for (std::size_t e = 0; e < spec.examples_per_class; ++e) {
        Example ex;
        ex.label = static_cast<std::int64_t>(c);
        ex.input = prototypes[c];
        if (spec.noise_std > 0.0) {
          for (double& v : ex.input) v += spec.noise_std * rng.next_gaussian();
        }
        users[u].examples.push_back(std::move(ex));
      }
    }
  }
  return users;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

std::vector<UserDataset> load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset_csv: cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  std::vector<UserDataset> users;
  std::unordered_map<std::string, std::size_t> user_index;
  std::size_t input_dim = 0;

  if (!std::getline(in, line)) return users;  // empty file -> empty list
  ++line_no;
  {
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "user_id" || header[1] != "label") {
      throw std::runtime_error(
          "load_dataset_csv: line 1: expected header user_id,label,x0,...");
    }
    input_dim = header.size() - 2;
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != input_dim + 2) {
      throw std::runtime_error("load_dataset_csv: line " +
                               std::to_string(line_no) + ": expected " +
                               std::to_string(input_dim + 2) + " fields, got " +
                               std::to_string(fields.size()));
    }
    Example ex;
    try {
      std::size_t pos = 0;
      ex.label = std::stoll(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument(fields[1]);
      ex.input.resize(input_dim);
      for (std::size_t i = 0; i < input_dim; ++i) {
        ex.input[i] = std::stod(fields[2 + i], &pos);
        if (pos != fields[2 + i].size()) throw std::invalid_argument(fields[2 + i]);
      }
    } catch (const std::exception&) {
      throw std::runtime_error("load_dataset_csv: line " +
                               std::to_string(line_no) + ": malformed value");
    }
    if (ex.label < 0) {
      throw std::runtime_error("load_dataset_csv: line " +
                               std::to_string(line_no) + ": negative label");
    }
    const std::string& uid = fields[0];
    auto [it, inserted] = user_index.try_emplace(uid, users.size());
    if (inserted) {
      users.push_back(UserDataset{uid, {}});
    }
    users[it->second].examples.push_back(std::move(ex));
  }
  return users;
}

void save_dataset_csv(const std::string& path,
                      const std::vector<UserDataset>& users) {
  std::size_t input_dim = 0;
  for (const UserDataset& u : users) {
    if (!u.examples.empty()) {
      input_dim = u.examples.front().input.size();
      break;
    }
  }
  std::ostringstream out;
  out << "user_id,label";
  for (std::size_t i = 0; i < input_dim; ++i) out << ",x" << i;
  out << "\n";
  for (const UserDataset& u : users) {
    for (const Example& e : u.examples) {
      if (e.input.size() != input_dim) {
        throw std::invalid_argument("save_dataset_csv: inconsistent input_dim");
      }
      out << u.user_id << "," << e.label;
      for (double v : e.input) out << "," << format_double(v);
      out << "\n";
    }
  }
  write_text_file(path, out.str());
}

}  // namespace dpfedemb
