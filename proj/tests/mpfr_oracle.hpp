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

// High-precision reference for the subsampled-Gaussian Renyi bound: the
// binomial sum evaluated term by term with 256-bit MPFR arithmetic, no log
// tricks. Test-only.

#ifndef DPFEDEMB_TESTS_MPFR_ORACLE_HPP_
#define DPFEDEMB_TESTS_MPFR_ORACLE_HPP_

#include <gmp.h>
#include <mpfr.h>

#include <cstdint>

namespace dpfedemb::test {

// (1/(alpha-1)) * log( sum_{k=0..alpha} C(alpha,k) (1-q)^(alpha-k) q^k
//                      exp(k(k-1)/(2 sigma^2)) )
inline double rdp_direct_summation(std::int64_t alpha, double q, double sigma) {
  constexpr mpfr_prec_t kPrec = 256;
  mpfr_t sum, term, tmp, qf, one_minus_q, inv_two_sigma_sq;
  mpfr_inits2(kPrec, sum, term, tmp, qf, one_minus_q, inv_two_sigma_sq,
              static_cast<mpfr_ptr>(nullptr));
  mpfr_set_zero(sum, 1);
  mpfr_set_d(qf, q, MPFR_RNDN);
  mpfr_ui_sub(one_minus_q, 1, qf, MPFR_RNDN);
  mpfr_set_d(inv_two_sigma_sq, sigma, MPFR_RNDN);
  mpfr_sqr(inv_two_sigma_sq, inv_two_sigma_sq, MPFR_RNDN);
  mpfr_mul_ui(inv_two_sigma_sq, inv_two_sigma_sq, 2, MPFR_RNDN);
  mpfr_ui_div(inv_two_sigma_sq, 1, inv_two_sigma_sq, MPFR_RNDN);

  mpz_t binom;
  mpz_init(binom);
  for (std::int64_t k = 0; k <= alpha; ++k) {
    // Zero factors make the whole term zero; skip so 0^0 never arises.
    if (q == 0.0 && k > 0) continue;
    if (q == 1.0 && k < alpha) continue;
    mpz_bin_uiui(binom, static_cast<unsigned long>(alpha),
                 static_cast<unsigned long>(k));
    mpfr_set_z(term, binom, MPFR_RNDN);
    if (k > 0) {
      mpfr_pow_ui(tmp, qf, static_cast<unsigned long>(k), MPFR_RNDN);
      mpfr_mul(term, term, tmp, MPFR_RNDN);
    }
    if (k < alpha) {
      mpfr_pow_ui(tmp, one_minus_q, static_cast<unsigned long>(alpha - k),
                  MPFR_RNDN);
      mpfr_mul(term, term, tmp, MPFR_RNDN);
    }
    mpfr_set_si(tmp, k * (k - 1), MPFR_RNDN);
    mpfr_mul(tmp, tmp, inv_two_sigma_sq, MPFR_RNDN);
    mpfr_exp(tmp, tmp, MPFR_RNDN);
    mpfr_mul(term, term, tmp, MPFR_RNDN);
    mpfr_add(sum, sum, term, MPFR_RNDN);
  }
  mpfr_log(sum, sum, MPFR_RNDN);
  mpfr_div_si(sum, sum, alpha - 1, MPFR_RNDN);
  const double result = mpfr_get_d(sum, MPFR_RNDN);

  mpz_clear(binom);
  mpfr_clears(sum, term, tmp, qf, one_minus_q, inv_two_sigma_sq,
              static_cast<mpfr_ptr>(nullptr));
  return result;
}

}  // namespace dpfedemb::test

#endif  // DPFEDEMB_TESTS_MPFR_ORACLE_HPP_
