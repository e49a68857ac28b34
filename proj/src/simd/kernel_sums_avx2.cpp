// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "sojd/simd/kernel_sums.hpp"

namespace sojd::simd::avx2 {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

// exp(v) for v <= 0 to about 1 ulp: v = n ln2 + r with |r| <= ln2/2, degree
// 13 Taylor polynomial in r, then scaling by 2^n through the exponent bits.
// Arguments below -708 return 0 (true values are < 3.3e-308).
inline __m256d exp_nonpositive(__m256d v) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d cutoff = _mm256_set1_pd(-708.0);

  const __m256d underflow = _mm256_cmp_pd(v, cutoff, _CMP_LT_OQ);
  v = _mm256_max_pd(v, cutoff);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(v, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, v);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  // 1/k! for k = 13 .. 0
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n: n in [-1022, 0] here, so the biased exponent stays normal.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  const __m256d scale = _mm256_castsi256_pd(bits);
  return _mm256_andnot_pd(underflow, _mm256_mul_pd(p, scale));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256i tail_mask(std::size_t remaining) {
  alignas(32) long long m[4];
  for (std::size_t j = 0; j < 4; ++j) m[j] = j < remaining ? -1 : 0;
  return _mm256_load_si256(reinterpret_cast<const __m256i*>(m));
}

struct GaussianWeight {
  __m256d operator()(__m256d u) const {
    const __m256d arg = _mm256_mul_pd(_mm256_set1_pd(-0.5), _mm256_mul_pd(u, u));
    return _mm256_mul_pd(_mm256_set1_pd(kInvSqrt2Pi), exp_nonpositive(arg));
  }
};

struct QuarticWeight {
  __m256d operator()(__m256d u) const {
    const __m256d t = _mm256_max_pd(_mm256_fnmadd_pd(u, u, _mm256_set1_pd(1.0)), _mm256_setzero_pd());
    return _mm256_mul_pd(_mm256_set1_pd(0.9375), _mm256_mul_pd(t, t));
  }
};

template <class Weight>
KernelSums accumulate(std::span<const double> centers, std::span<const double> a,
                      std::span<const double> b, double x, double h, Weight weight) {
  const std::size_t n = centers.size();
  const bool has_a = !a.empty();
  const bool has_b = !b.empty();
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d vh = _mm256_set1_pd(h);
  __m256d sw = _mm256_setzero_pd();
  __m256d sww = _mm256_setzero_pd();
  __m256d swa = _mm256_setzero_pd();
  __m256d swb = _mm256_setzero_pd();

  auto step = [&](__m256d k, __m256d va, __m256d vb) {
    sw = _mm256_add_pd(sw, k);
    sww = _mm256_fmadd_pd(k, k, sww);
    if (has_a) swa = _mm256_fmadd_pd(k, va, swa);
    if (has_b) swb = _mm256_fmadd_pd(k, vb, swb);
  };

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d u = _mm256_div_pd(_mm256_sub_pd(vx, _mm256_loadu_pd(centers.data() + i)), vh);
    const __m256d k = weight(u);
    step(k, has_a ? _mm256_loadu_pd(a.data() + i) : _mm256_setzero_pd(),
         has_b ? _mm256_loadu_pd(b.data() + i) : _mm256_setzero_pd());
  }
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    const __m256d c = _mm256_maskload_pd(centers.data() + i, mask);
    const __m256d u = _mm256_div_pd(_mm256_sub_pd(vx, c), vh);
    const __m256d k = _mm256_and_pd(weight(u), _mm256_castsi256_pd(mask));
    step(k, has_a ? _mm256_maskload_pd(a.data() + i, mask) : _mm256_setzero_pd(),
         has_b ? _mm256_maskload_pd(b.data() + i, mask) : _mm256_setzero_pd());
  }
  return {hsum(sw), hsum(sww), hsum(swa), hsum(swb)};
}

}  // namespace

KernelSums gaussian_sums(std::span<const double> centers, std::span<const double> a,
                         std::span<const double> b, double x, double h) {
  return accumulate(centers, a, b, x, h, GaussianWeight{});
}

KernelSums quartic_sums(std::span<const double> centers, std::span<const double> a,
                        std::span<const double> b, double x, double h) {
  return accumulate(centers, a, b, x, h, QuarticWeight{});
}

void exp_batch(std::span<const double> in, std::span<double> out) {
  std::size_t i = 0;
  for (; i + 4 <= in.size(); i += 4) {
    _mm256_storeu_pd(out.data() + i, exp_nonpositive(_mm256_loadu_pd(in.data() + i)));
  }
  for (; i < in.size(); ++i) {
    alignas(32) double buf[4] = {in[i], 0.0, 0.0, 0.0};
    alignas(32) double res[4];
    _mm256_store_pd(res, exp_nonpositive(_mm256_load_pd(buf)));
    out[i] = res[0];
  }
}

}  // namespace sojd::simd::avx2
