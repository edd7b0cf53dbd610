// Compiled with -mavx2 -mfma; only called after a runtime CPU check.

#include <immintrin.h>

#include "dosepool/simd/kernels.hpp"

namespace dosepool::simd::avx2 {

namespace {

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

SegmentMoments moments(std::span<const double> dose, std::span<const double> value, std::span<const double> weight,
                       double e0, double emax, double ed50) {
  const std::size_t n = dose.size();
  const __m256d ve0 = _mm256_set1_pd(e0);
  const __m256d vemax = _mm256_set1_pd(emax);
  const __m256d ved50 = _mm256_set1_pd(ed50);
  __m256d acc_rr = _mm256_setzero_pd();
  __m256d acc_r = _mm256_setzero_pd();
  __m256d acc_rh = _mm256_setzero_pd();
  __m256d acc_rq = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_loadu_pd(dose.data() + i);
    const __m256d y = _mm256_loadu_pd(value.data() + i);
    const __m256d w = _mm256_loadu_pd(weight.data() + i);
    const __m256d s = _mm256_add_pd(ved50, d);
    const __m256d h = _mm256_div_pd(d, s);
    const __m256d q = _mm256_div_pd(h, s);
    const __m256d r = _mm256_sub_pd(y, _mm256_fmadd_pd(vemax, h, ve0));
    const __m256d wr = _mm256_mul_pd(w, r);
    acc_rr = _mm256_fmadd_pd(wr, r, acc_rr);
    acc_r = _mm256_add_pd(acc_r, wr);
    acc_rh = _mm256_fmadd_pd(wr, h, acc_rh);
    acc_rq = _mm256_fmadd_pd(wr, q, acc_rq);
  }
  SegmentMoments m{horizontal_sum(acc_rr), horizontal_sum(acc_r), horizontal_sum(acc_rh), horizontal_sum(acc_rq)};
  if (i < n) {
    const auto tail = scalar::moments(dose.subspan(i), value.subspan(i), weight.subspan(i), e0, emax, ed50);
    m.rr += tail.rr;
    m.r += tail.r;
    m.rh += tail.rh;
    m.rq += tail.rq;
  }
  return m;
}

void weighted_residuals(std::span<const double> dose, std::span<const double> value,
                        std::span<const double> weight, double e0, double emax, double ed50, std::span<double> out) {
  const std::size_t n = dose.size();
  const __m256d ve0 = _mm256_set1_pd(e0);
  const __m256d vemax = _mm256_set1_pd(emax);
  const __m256d ved50 = _mm256_set1_pd(ed50);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_loadu_pd(dose.data() + i);
    const __m256d y = _mm256_loadu_pd(value.data() + i);
    const __m256d w = _mm256_loadu_pd(weight.data() + i);
    const __m256d h = _mm256_div_pd(d, _mm256_add_pd(ved50, d));
    const __m256d r = _mm256_sub_pd(y, _mm256_fmadd_pd(vemax, h, ve0));
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(w, _mm256_mul_pd(r, r)));
  }
  if (i < n) {
    scalar::weighted_residuals(dose.subspan(i), value.subspan(i), weight.subspan(i), e0, emax, ed50,
                               out.subspan(i));
  }
}

void curve(std::span<const double> e0, std::span<const double> emax, std::span<const double> ed50, double dose,
           std::span<double> out) {
  const std::size_t n = e0.size();
  const __m256d vd = _mm256_set1_pd(dose);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d a = _mm256_loadu_pd(e0.data() + k);
    const __m256d b = _mm256_loadu_pd(emax.data() + k);
    const __m256d c = _mm256_loadu_pd(ed50.data() + k);
    const __m256d h = _mm256_div_pd(vd, _mm256_add_pd(c, vd));
    _mm256_storeu_pd(out.data() + k, _mm256_fmadd_pd(b, h, a));
  }
  if (k < n) scalar::curve(e0.subspan(k), emax.subspan(k), ed50.subspan(k), dose, out.subspan(k));
}

}  // namespace dosepool::simd::avx2
