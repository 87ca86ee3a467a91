#if defined(__x86_64__)

#include <immintrin.h>

#include <cmath>

#include "tshrink/kernels.hpp"

// Compiled with -mavx2 -mfma; callers reach this table only after the cpuid
// check in dispatch.cpp. Scalar epilogues reuse the exact scalar formulas so
// every variant stays bit-identical to the reference.

namespace tshrink::kernels {
namespace {

void standardize_avx2(std::span<const double> x, double center, double scale,
                      std::span<double> out) {
  const __m256d c = _mm256_set1_pd(center);
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    _mm256_storeu_pd(&out[i], _mm256_div_pd(_mm256_sub_pd(v, c), s));
  }
  for (; i < x.size(); ++i) out[i] = (x[i] - center) / scale;
}

void destandardize_avx2(std::span<const double> x, double center, double scale,
                        std::span<double> out) {
  const __m256d c = _mm256_set1_pd(center);
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    _mm256_storeu_pd(&out[i], _mm256_fmadd_pd(v, s, c));
  }
  for (; i < x.size(); ++i) out[i] = std::fma(x[i], scale, center);
}

void poly_derivs_avx2(std::span<const double> z, std::span<const double> c1,
                      std::span<const double> c2, double center, double halfwidth,
                      std::span<double> l1, std::span<double> l2) {
  const double h2 = halfwidth * halfwidth;
  const __m256d c = _mm256_set1_pd(center);
  const __m256d h = _mm256_set1_pd(halfwidth);
  const __m256d hh = _mm256_set1_pd(h2);
  std::size_t i = 0;
  for (; i + 4 <= z.size(); i += 4) {
    const __m256d t = _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(&z[i]), c), h);
    __m256d d1 = _mm256_setzero_pd();
    for (std::size_t k = c1.size(); k-- > 0;)
      d1 = _mm256_fmadd_pd(d1, t, _mm256_set1_pd(c1[k]));
    __m256d d2 = _mm256_setzero_pd();
    for (std::size_t k = c2.size(); k-- > 0;)
      d2 = _mm256_fmadd_pd(d2, t, _mm256_set1_pd(c2[k]));
    _mm256_storeu_pd(&l1[i], _mm256_div_pd(d1, h));
    _mm256_storeu_pd(&l2[i], _mm256_div_pd(d2, hh));
  }
  for (; i < z.size(); ++i) {
    const double t = (z[i] - center) / halfwidth;
    double d1 = 0.0;
    for (std::size_t k = c1.size(); k-- > 0;) d1 = std::fma(d1, t, c1[k]);
    double d2 = 0.0;
    for (std::size_t k = c2.size(); k-- > 0;) d2 = std::fma(d2, t, c2[k]);
    l1[i] = d1 / halfwidth;
    l2[i] = d2 / h2;
  }
}

void tweedie_avx2(std::span<const double> z, std::span<const double> l1,
                  std::span<const double> l2, double sigma2, bool clamp,
                  std::span<double> mean, std::span<double> var,
                  std::span<std::uint8_t> clamped) {
  const __m256d s2 = _mm256_set1_pd(sigma2);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= z.size(); i += 4) {
    _mm256_storeu_pd(&mean[i], _mm256_fmadd_pd(s2, _mm256_loadu_pd(&l1[i]),
                                               _mm256_loadu_pd(&z[i])));
    __m256d v = _mm256_mul_pd(s2, _mm256_fmadd_pd(s2, _mm256_loadu_pd(&l2[i]), one));
    int flags = 0;
    if (clamp) {
      const __m256d neg = _mm256_cmp_pd(v, zero, _CMP_LT_OQ);
      flags = _mm256_movemask_pd(neg);
      v = _mm256_andnot_pd(neg, v);
    }
    _mm256_storeu_pd(&var[i], v);
    for (int lane = 0; lane < 4; ++lane)
      clamped[i + lane] = static_cast<std::uint8_t>((flags >> lane) & 1);
  }
  for (; i < z.size(); ++i) {
    mean[i] = std::fma(sigma2, l1[i], z[i]);
    double v = sigma2 * std::fma(sigma2, l2[i], 1.0);
    std::uint8_t flag = 0;
    if (clamp && v < 0.0) {
      v = 0.0;
      flag = 1;
    }
    var[i] = v;
    clamped[i] = flag;
  }
}

double sum_avx2(std::span<const double> x) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = x.size() - x.size() % 4;
  for (std::size_t i = 0; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(&x[i]));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (std::size_t i = n4; i < x.size(); ++i) lanes[i - n4] += x[i];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_avx2(std::span<const double> x, std::span<const double> y) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = x.size() - x.size() % 4;
  for (std::size_t i = 0; i < n4; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (std::size_t i = n4; i < x.size(); ++i) lanes[i - n4] = std::fma(x[i], y[i], lanes[i - n4]);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{standardize_avx2, destandardize_avx2, poly_derivs_avx2,
                                 tweedie_avx2,     sum_avx2,           dot_avx2};
  return table;
}

}  // namespace tshrink::kernels

#endif  // __x86_64__
