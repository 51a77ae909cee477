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

#include "dpfedemb/accounting.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dpfedemb {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Integer-order binomial sum, in log space:
//   (1/(alpha-1)) log sum_{k=0..alpha} C(alpha,k) (1-q)^(alpha-k) q^k
//                                      exp(k(k-1)/(2 sigma^2)).
double rdp_integer_order(double q, double sigma, std::int64_t alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double log_sum = -kInf;
  for (std::int64_t k = 0; k <= alpha; ++k) {
    double term = log_binomial(static_cast<double>(alpha),
                               static_cast<double>(k));
    if (k > 0) term += static_cast<double>(k) * log_q;
    if (k < alpha) term += static_cast<double>(alpha - k) * log_1mq;
    term += static_cast<double>(k) * static_cast<double>(k - 1) /
            (2.0 * sigma * sigma);
    log_sum = log_add_exp(log_sum, term);
  }
  return log_sum / (static_cast<double>(alpha) - 1.0);
}

// Fractional orders have no closed form; integrate
//   A = E_{u~N(0,1)} [((1-q) + q exp((2 sigma u - 1)/(2 sigma^2)))^alpha]
// with Simpson's rule in log space over a range wide enough that both the
// Gaussian weight and the tilted mode are covered.
double rdp_fractional_order(double q, double sigma, double alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double lo = -45.0;
  const double hi = alpha / sigma + 45.0;
  const std::size_t n = 200000;  // even, Simpson
  const double h = (hi - lo) / static_cast<double>(n);
  const double log_norm = -0.5 * std::log(2.0 * M_PI);

  double log_sum = -kInf;
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = lo + h * static_cast<double>(i);
    const double s = (2.0 * sigma * u - 1.0) / (2.0 * sigma * sigma);
    const double log_ratio_mix = log_add_exp(log_1mq, log_q + s);
    double term = log_norm - 0.5 * u * u + alpha * log_ratio_mix;
    const double weight = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    term += std::log(weight * h / 3.0);
    log_sum = log_add_exp(log_sum, term);
  }
  return log_sum / (alpha - 1.0);
}

}  // namespace

std::vector<double> default_rdp_orders() {
  std::vector<double> orders = {1.25, 1.5};
  for (int a = 2; a <= 256; ++a) orders.push_back(static_cast<double>(a));
  return orders;
}

double rdp_subsampled_gaussian_order(double q, double sigma, double alpha) {
  if (q < 0.0 || q > 1.0) {
    throw std::invalid_argument("rdp: sampling rate must be in [0, 1]");
  }
  if (sigma < 0.0) {
    throw std::invalid_argument("rdp: sigma must be >= 0");
  }
  if (!(alpha > 1.0)) {
    throw std::invalid_argument("rdp: order must be > 1");
  }
  if (sigma == 0.0) return kInf;
  if (q == 0.0) return 0.0;
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);

  const double rounded = std::nearbyint(alpha);
  if (rounded == alpha && alpha <= 1e6) {
    return rdp_integer_order(q, sigma, static_cast<std::int64_t>(rounded));
  }
  return rdp_fractional_order(q, sigma, alpha);
}

std::vector<double> rdp_subsampled_gaussian_step(double q, double sigma,
                                                 std::span<const double> orders,
                                                 Neighboring neighboring) {
  const double effective_sigma =
      neighboring == Neighboring::kSubstituteConservative ? sigma / 2.0 : sigma;
  std::vector<double> step;
  step.reserve(orders.size());
  for (double alpha : orders) {
    step.push_back(rdp_subsampled_gaussian_order(q, effective_sigma, alpha));
  }
  return step;
}

RdpAccountant RdpAccountant::with_default_orders(Neighboring neighboring) {
  RdpAccountant acc;
  acc.orders = default_rdp_orders();
  acc.eps_rdp.assign(acc.orders.size(), 0.0);
  acc.neighboring = neighboring;
  return acc;
}

void compose(RdpAccountant& acc, std::span<const double> step_rdp,
             std::size_t num_steps) {
  if (step_rdp.size() != acc.orders.size()) {
    throw std::invalid_argument("compose: step size does not match orders");
  }
  if (acc.eps_rdp.size() != acc.orders.size()) {
    acc.eps_rdp.assign(acc.orders.size(), 0.0);
  }
  if (num_steps == 0) return;
  for (std::size_t i = 0; i < step_rdp.size(); ++i) {
    if (step_rdp[i] < 0.0) {
      throw std::invalid_argument("compose: negative per-step RDP");
    }
    acc.eps_rdp[i] += static_cast<double>(num_steps) * step_rdp[i];
  }
}

DpGuarantee rdp_to_dp(const RdpAccountant& acc, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("rdp_to_dp: delta must be in (0, 1)");
  }
  if (acc.eps_rdp.empty() ||
      std::all_of(acc.eps_rdp.begin(), acc.eps_rdp.end(),
                  [](double e) { return e == 0.0; })) {
    return {0.0, delta};  // nothing composed yet
  }
  const double log_inv_delta = std::log(1.0 / delta);
  double best = kInf;
  for (std::size_t i = 0; i < acc.orders.size(); ++i) {
    if (!std::isfinite(acc.eps_rdp[i])) continue;
    const double eps = acc.eps_rdp[i] + log_inv_delta / (acc.orders[i] - 1.0);
    best = std::min(best, eps);
  }
  return {best, delta};
}

ZcdpAccountant zcdp_tree_single_participation(std::size_t rounds,
                                              double sigma) {
  if (rounds < 1) {
    throw std::invalid_argument("zcdp_tree: rounds must be >= 1");
  }
  if (sigma < 0.0) {
    throw std::invalid_argument("zcdp_tree: sigma must be >= 0");
  }
  if (sigma == 0.0) return {kInf};
  // ceil(log2(rounds)) + 1 tree nodes on one participant's path.
  const unsigned ceil_log2 =
      rounds == 1 ? 0u : static_cast<unsigned>(std::bit_width(rounds - 1));
  const double depth = static_cast<double>(ceil_log2 + 1);
  return {depth / (2.0 * sigma * sigma)};
}

DpGuarantee zcdp_to_dp(double rho, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("zcdp_to_dp: delta must be in (0, 1)");
  }
  if (rho < 0.0) throw std::invalid_argument("zcdp_to_dp: rho must be >= 0");
  if (rho == 0.0) return {0.0, delta};
  if (!std::isfinite(rho)) return {kInf, delta};
  return {rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta)), delta};
}

std::vector<SweepRow> extrapolate_sweep(double base_noise,
                                        std::size_t base_vcs_per_round,
                                        std::size_t users_per_vc,
                                        std::size_t rounds,
                                        std::size_t total_users, double delta,
                                        std::span<const double> scale_factors) {
  if (base_noise < 0.0) {
    throw std::invalid_argument("extrapolate_sweep: base noise must be >= 0");
  }
  if (base_vcs_per_round < 1 || users_per_vc < 1 || total_users < 1) {
    throw std::invalid_argument("extrapolate_sweep: counts must be >= 1");
  }
  const double base_users_per_round =
      static_cast<double>(base_vcs_per_round) * static_cast<double>(users_per_vc);

  std::vector<SweepRow> rows;
  rows.reserve(scale_factors.size());
  const auto orders = default_rdp_orders();
  for (double k : scale_factors) {
    if (!(k > 0.0)) {
      throw std::invalid_argument("extrapolate_sweep: scale factors must be > 0");
    }
    SweepRow row;
    row.scale = k;
    row.users_per_round = static_cast<std::size_t>(
        std::llround(k * base_users_per_round));
    row.sampling_rate = static_cast<double>(row.users_per_round) /
                        static_cast<double>(total_users);
    if (row.sampling_rate > 1.0) {
      throw std::invalid_argument(
          "extrapolate_sweep: scale " + std::to_string(k) +
          " needs more users per round than the population holds");
    }
    row.sigma = k * base_noise;
    row.rounds = rounds;
    row.delta = delta;

    for (Neighboring mode : {Neighboring::kAddRemovePoisson,
                             Neighboring::kSubstituteConservative}) {
      RdpAccountant acc = RdpAccountant::with_default_orders(mode);
      compose(acc, rdp_subsampled_gaussian_step(row.sampling_rate, row.sigma,
                                                orders, mode),
              rounds);
      const double eps = rdp_to_dp(acc, delta).epsilon;
      if (mode == Neighboring::kAddRemovePoisson) {
        row.eps_add_remove = eps;
      } else {
        row.eps_substitute = eps;
      }
    }
    row.rho = zcdp_tree_single_participation(rounds, row.sigma).rho;
    row.eps_zcdp = zcdp_to_dp(row.rho, delta).epsilon;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dpfedemb
