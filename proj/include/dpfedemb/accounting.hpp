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

#ifndef DPFEDEMB_ACCOUNTING_HPP_
#define DPFEDEMB_ACCOUNTING_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace dpfedemb {

// Neighboring-dataset convention for the Renyi accountant.
// kAddRemovePoisson: standard Poisson-subsampled Gaussian RDP.
// kSubstituteConservative: substitution handled conservatively by doubling
// the sensitivity, i.e. accounting with sigma/2.
enum class Neighboring { kAddRemovePoisson, kSubstituteConservative };

struct DpGuarantee {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Integer grid 2..256 plus fractional {1.25, 1.5}.
std::vector<double> default_rdp_orders();

// RDP of one subsampled-Gaussian release at a single order alpha > 1.
// q = 1 is the analytic Gaussian case alpha/(2 sigma^2); q = 0 is 0.
// Integer alpha uses the binomial sum in log space; fractional alpha falls
// back to numerical integration. sigma == 0 yields +infinity.
double rdp_subsampled_gaussian_order(double q, double sigma, double alpha);

std::vector<double> rdp_subsampled_gaussian_step(
    double q, double sigma, std::span<const double> orders,
    Neighboring neighboring = Neighboring::kAddRemovePoisson);

struct RdpAccountant {
  std::vector<double> orders;
  std::vector<double> eps_rdp;  // accumulated, one per order
  Neighboring neighboring = Neighboring::kAddRemovePoisson;

  static RdpAccountant with_default_orders(
      Neighboring neighboring = Neighboring::kAddRemovePoisson);
};

// eps_rdp += num_steps * step_rdp, per order.
void compose(RdpAccountant& acc, std::span<const double> step_rdp,
             std::size_t num_steps);

// Classic conversion: epsilon = min_alpha [eps_rdp(alpha) +
// log(1/delta)/(alpha-1)]. An untouched accountant converts to epsilon 0.
DpGuarantee rdp_to_dp(const RdpAccountant& acc, double delta);

struct ZcdpAccountant {
  double rho = 0.0;
};

// Single-participation tree bound: rho = d / (2 sigma^2) with
// d = ceil(log2 T) + 1 nodes on a root-to-leaf path.
ZcdpAccountant zcdp_tree_single_participation(std::size_t rounds, double sigma);

// epsilon = rho + 2 sqrt(rho ln(1/delta)).
DpGuarantee zcdp_to_dp(double rho, double delta);

// One row of the privacy-computation extrapolation sweep.
struct SweepRow {
  double scale = 1.0;               // k
  std::size_t users_per_round = 0;  // k * base users per round
  double sampling_rate = 0.0;       // q
  double sigma = 0.0;               // k * base noise multiplier
  std::size_t rounds = 0;
  double delta = 0.0;
  double eps_add_remove = 0.0;
  double eps_substitute = 0.0;
  double rho = 0.0;
  double eps_zcdp = 0.0;
};

// Scales clients per round and noise multiplier together: for each k,
// q = k * base_vcs_per_round * users_per_vc / total_users and
// sigma = k * base_noise; composes `rounds` steps and converts at delta.
std::vector<SweepRow> extrapolate_sweep(double base_noise,
                                        std::size_t base_vcs_per_round,
                                        std::size_t users_per_vc,
                                        std::size_t rounds,
                                        std::size_t total_users, double delta,
                                        std::span<const double> scale_factors);

}  // namespace dpfedemb

#endif  // DPFEDEMB_ACCOUNTING_HPP_
