#pragma once

// tanh over contiguous buffers. The scalar core below is the definition;
// the AVX-512/AVX2 paths mirror it operation for operation (explicit fma,
// same rounding, same blends), so every element comes out bit-identical to
// the scalar result no matter which path ran. Agrees with std::tanh to a
// couple of ulp. Coefficients: Cephes tanh/exp minimax sets.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstddef>

#if defined(__AVX512F__) && defined(__AVX512DQ__)
#include <immintrin.h>
#define PCNLAB_TANH_AVX512 1
#elif defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define PCNLAB_TANH_AVX2 1
#endif

namespace pcnlab {

namespace tanh_const {
inline constexpr double kSmallCut = 0.625;
inline constexpr double kSatCut = 19.0625;  // 2/(exp(2x)+1) < 0.5 ulp beyond this
inline constexpr double kTp0 = -9.64399179425052238628e-1;
inline constexpr double kTp1 = -9.92877231001918586564e1;
inline constexpr double kTp2 = -1.61468768441708447952e3;
inline constexpr double kTq0 = 1.12811678491632931402e2;
inline constexpr double kTq1 = 2.23548839060100448583e3;
inline constexpr double kTq2 = 4.84406305325125486048e3;
inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kC1 = 6.93145751953125e-1;
inline constexpr double kC2 = 1.42860682030941723212e-6;
inline constexpr double kEp0 = 1.26177193074810590878e-4;
inline constexpr double kEp1 = 3.02994407707441961300e-2;
inline constexpr double kEp2 = 9.99999999999999999910e-1;
inline constexpr double kEq0 = 3.00198505138664455042e-6;
inline constexpr double kEq1 = 2.52448340349684104192e-3;
inline constexpr double kEq2 = 2.27265548208155028766e-1;
inline constexpr double kEq3 = 2.00000000000000000005e0;
}  // namespace tanh_const

inline double tanh_fast(double x) {
  using namespace tanh_const;
  double ax = std::fabs(x);

  // |x| < 0.625: odd rational, cancellation-free near zero
  double z = x * x;
  double tp = std::fma(std::fma(kTp0, z, kTp1), z, kTp2);
  double tq = std::fma(std::fma(std::fma(1.0, z, kTq0), z, kTq1), z, kTq2);
  double small = std::fma(x * z, tp / tq, x);

  // |x| >= 0.625: 1 - 2/(exp(2x)+1), exp inlined with clamped argument
  double y = 2.0 * ax < 38.125 ? 2.0 * ax : 38.125;
  double n = __builtin_nearbyint(y * kLog2E);
  double r = std::fma(-kC1, n, y);
  r = std::fma(-kC2, n, r);
  double rr = r * r;
  double ep = r * std::fma(std::fma(kEp0, rr, kEp1), rr, kEp2);
  double eq = std::fma(std::fma(std::fma(kEq0, rr, kEq1), rr, kEq2), rr, kEq3);
  double e = std::fma(2.0, ep / (eq - ep), 1.0);
  // scale by 2^n through the exponent bits; n is a small positive integer here
  double scale = std::bit_cast<double>((static_cast<int64_t>(n) + 1023) << 52);
  e *= scale;
  double big = 1.0 - 2.0 / (e + 1.0);
  big = ax >= kSatCut ? 1.0 : big;
  big = std::copysign(big, x);

  return ax < kSmallCut ? small : big;
}

namespace detail {

#if defined(PCNLAB_TANH_AVX512)

inline __m512d tanh_lane8(__m512d vx) {
  using namespace tanh_const;
  const __m512d sign_mask = _mm512_set1_pd(-0.0);
  __m512d ax = _mm512_andnot_pd(sign_mask, vx);

  __m512d z = _mm512_mul_pd(vx, vx);
  __m512d tp = _mm512_fmadd_pd(_mm512_fmadd_pd(_mm512_set1_pd(kTp0), z, _mm512_set1_pd(kTp1)),
                               z, _mm512_set1_pd(kTp2));
  __m512d tq = _mm512_fmadd_pd(
      _mm512_fmadd_pd(_mm512_fmadd_pd(_mm512_set1_pd(1.0), z, _mm512_set1_pd(kTq0)), z,
                      _mm512_set1_pd(kTq1)),
      z, _mm512_set1_pd(kTq2));
  __m512d small = _mm512_fmadd_pd(_mm512_mul_pd(vx, z), _mm512_div_pd(tp, tq), vx);

  __m512d two_ax = _mm512_mul_pd(_mm512_set1_pd(2.0), ax);
  __m512d y = _mm512_min_pd(two_ax, _mm512_set1_pd(38.125));
  __m512d n = _mm512_roundscale_pd(_mm512_mul_pd(y, _mm512_set1_pd(kLog2E)),
                                   _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m512d r = _mm512_fmadd_pd(_mm512_set1_pd(-kC1), n, y);
  r = _mm512_fmadd_pd(_mm512_set1_pd(-kC2), n, r);
  __m512d rr = _mm512_mul_pd(r, r);
  __m512d ep = _mm512_mul_pd(
      r, _mm512_fmadd_pd(_mm512_fmadd_pd(_mm512_set1_pd(kEp0), rr, _mm512_set1_pd(kEp1)), rr,
                         _mm512_set1_pd(kEp2)));
  __m512d eq = _mm512_fmadd_pd(
      _mm512_fmadd_pd(_mm512_fmadd_pd(_mm512_set1_pd(kEq0), rr, _mm512_set1_pd(kEq1)), rr,
                      _mm512_set1_pd(kEq2)),
      rr, _mm512_set1_pd(kEq3));
  __m512d e = _mm512_fmadd_pd(_mm512_set1_pd(2.0), _mm512_div_pd(ep, _mm512_sub_pd(eq, ep)),
                              _mm512_set1_pd(1.0));
  __m512i bits = _mm512_slli_epi64(
      _mm512_add_epi64(_mm512_cvtpd_epi64(n), _mm512_set1_epi64(1023)), 52);
  e = _mm512_mul_pd(e, _mm512_castsi512_pd(bits));
  __m512d big = _mm512_sub_pd(_mm512_set1_pd(1.0),
                              _mm512_div_pd(_mm512_set1_pd(2.0),
                                            _mm512_add_pd(e, _mm512_set1_pd(1.0))));
  __mmask8 sat = _mm512_cmp_pd_mask(ax, _mm512_set1_pd(kSatCut), _CMP_GE_OQ);
  big = _mm512_mask_blend_pd(sat, big, _mm512_set1_pd(1.0));
  // copysign
  big = _mm512_or_pd(_mm512_andnot_pd(sign_mask, big), _mm512_and_pd(sign_mask, vx));

  __mmask8 is_small = _mm512_cmp_pd_mask(ax, _mm512_set1_pd(kSmallCut), _CMP_LT_OQ);
  return _mm512_mask_blend_pd(is_small, big, small);
}

#elif defined(PCNLAB_TANH_AVX2)

inline __m256d tanh_lane4(__m256d vx) {
  using namespace tanh_const;
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d ax = _mm256_andnot_pd(sign_mask, vx);

  __m256d z = _mm256_mul_pd(vx, vx);
  __m256d tp = _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_set1_pd(kTp0), z, _mm256_set1_pd(kTp1)),
                               z, _mm256_set1_pd(kTp2));
  __m256d tq = _mm256_fmadd_pd(
      _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_set1_pd(1.0), z, _mm256_set1_pd(kTq0)), z,
                      _mm256_set1_pd(kTq1)),
      z, _mm256_set1_pd(kTq2));
  __m256d small = _mm256_fmadd_pd(_mm256_mul_pd(vx, z), _mm256_div_pd(tp, tq), vx);

  __m256d y = _mm256_min_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), ax), _mm256_set1_pd(38.125));
  __m256d n = _mm256_round_pd(_mm256_mul_pd(y, _mm256_set1_pd(kLog2E)),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fmadd_pd(_mm256_set1_pd(-kC1), n, y);
  r = _mm256_fmadd_pd(_mm256_set1_pd(-kC2), n, r);
  __m256d rr = _mm256_mul_pd(r, r);
  __m256d ep = _mm256_mul_pd(
      r, _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_set1_pd(kEp0), rr, _mm256_set1_pd(kEp1)), rr,
                         _mm256_set1_pd(kEp2)));
  __m256d eq = _mm256_fmadd_pd(
      _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_set1_pd(kEq0), rr, _mm256_set1_pd(kEq1)), rr,
                      _mm256_set1_pd(kEq2)),
      rr, _mm256_set1_pd(kEq3));
  __m256d e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), _mm256_div_pd(ep, _mm256_sub_pd(eq, ep)),
                              _mm256_set1_pd(1.0));
  // n is a small non-negative integer; int32 conversion is exact
  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_slli_epi64(
      _mm256_add_epi64(_mm256_cvtepi32_epi64(n32), _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
  __m256d big = _mm256_sub_pd(_mm256_set1_pd(1.0),
                              _mm256_div_pd(_mm256_set1_pd(2.0),
                                            _mm256_add_pd(e, _mm256_set1_pd(1.0))));
  __m256d sat = _mm256_cmp_pd(ax, _mm256_set1_pd(kSatCut), _CMP_GE_OQ);
  big = _mm256_blendv_pd(big, _mm256_set1_pd(1.0), sat);
  big = _mm256_or_pd(_mm256_andnot_pd(sign_mask, big), _mm256_and_pd(sign_mask, vx));

  __m256d is_small = _mm256_cmp_pd(ax, _mm256_set1_pd(kSmallCut), _CMP_LT_OQ);
  return _mm256_blendv_pd(big, small, is_small);
}

#endif

}  // namespace detail

// dst[i] = tanh(src[i] + bias[i]); dst and src may alias
inline void tanh_bias_apply(double* dst, const double* src, const double* bias, int n) {
  int i = 0;
#if defined(PCNLAB_TANH_AVX512)
  for (; i + 8 <= n; i += 8) {
    __m512d v = _mm512_add_pd(_mm512_loadu_pd(src + i), _mm512_loadu_pd(bias + i));
    _mm512_storeu_pd(dst + i, detail::tanh_lane8(v));
  }
#elif defined(PCNLAB_TANH_AVX2)
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_add_pd(_mm256_loadu_pd(src + i), _mm256_loadu_pd(bias + i));
    _mm256_storeu_pd(dst + i, detail::tanh_lane4(v));
  }
#endif
  for (; i < n; ++i) dst[i] = tanh_fast(src[i] + bias[i]);
}

}  // namespace pcnlab
