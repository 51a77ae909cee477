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

#ifndef DPFEDEMB_IO_UTIL_HPP_
#define DPFEDEMB_IO_UTIL_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace dpfedemb {

// Shortest round-trip decimal representation of a double. All file output
// (CSV, JSON, manifests) goes through this so runs are byte-reproducible.
std::string format_double(double value);

// FNV-1a, used for config digests and stream-id derivation.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace dpfedemb

#endif  // DPFEDEMB_IO_UTIL_HPP_
