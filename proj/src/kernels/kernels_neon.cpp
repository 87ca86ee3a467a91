#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

#include "tshrink/kernels.hpp"

// float64x2_t carries 2 lanes, so reductions keep two vector accumulators and
// step by 4: lanes of acc01/acc23 are the four scalar accumulators in order.

namespace tshrink::kernels {
namespace {

void standardize_neon(std::span<const double> x, double center, double scale,
                      std::span<double> out) {
  const float64x2_t c = vdupq_n_f64(center);
  const float64x2_t s = vdupq_n_f64(scale);
  std::size_t i = 0;
  for (; i + 2 <= x.size(); i += 2) {
    const float64x2_t v = vld1q_f64(&x[i]);
    vst1q_f64(&out[i], vdivq_f64(vsubq_f64(v, c), s));
  }
  for (; i < x.size(); ++i) out[i] = (x[i] - center) / scale;
}

void destandardize_neon(std::span<const double> x, double center, double scale,
                        std::span<double> out) {
  const float64x2_t c = vdupq_n_f64(center);
  const float64x2_t s = vdupq_n_f64(scale);
  std::size_t i = 0;
  for (; i + 2 <= x.size(); i += 2) {
    const float64x2_t v = vld1q_f64(&x[i]);
    vst1q_f64(&out[i], vfmaq_f64(c, v, s));
  }
  for (; i < x.size(); ++i) out[i] = std::fma(x[i], scale, center);
}

void poly_derivs_neon(std::span<const double> z, std::span<const double> c1,
                      std::span<const double> c2, double center, double halfwidth,
                      std::span<double> l1, std::span<double> l2) {
  const double h2 = halfwidth * halfwidth;
  const float64x2_t c = vdupq_n_f64(center);
  const float64x2_t h = vdupq_n_f64(halfwidth);
  const float64x2_t hh = vdupq_n_f64(h2);
  std::size_t i = 0;
  for (; i + 2 <= z.size(); i += 2) {
    const float64x2_t t = vdivq_f64(vsubq_f64(vld1q_f64(&z[i]), c), h);
    float64x2_t d1 = vdupq_n_f64(0.0);
    for (std::size_t k = c1.size(); k-- > 0;) d1 = vfmaq_f64(vdupq_n_f64(c1[k]), d1, t);
    float64x2_t d2 = vdupq_n_f64(0.0);
    for (std::size_t k = c2.size(); k-- > 0;) d2 = vfmaq_f64(vdupq_n_f64(c2[k]), d2, t);
    vst1q_f64(&l1[i], vdivq_f64(d1, h));
    vst1q_f64(&l2[i], vdivq_f64(d2, hh));
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

void tweedie_neon(std::span<const double> z, std::span<const double> l1,
                  std::span<const double> l2, double sigma2, bool clamp,
                  std::span<double> mean, std::span<double> var,
                  std::span<std::uint8_t> clamped) {
  const float64x2_t s2 = vdupq_n_f64(sigma2);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= z.size(); i += 2) {
    vst1q_f64(&mean[i], vfmaq_f64(vld1q_f64(&z[i]), s2, vld1q_f64(&l1[i])));
    float64x2_t v = vmulq_f64(s2, vfmaq_f64(one, s2, vld1q_f64(&l2[i])));
    if (clamp) {
      const uint64x2_t neg = vcltq_f64(v, zero);
      clamped[i] = static_cast<std::uint8_t>(vgetq_lane_u64(neg, 0) & 1);
      clamped[i + 1] = static_cast<std::uint8_t>(vgetq_lane_u64(neg, 1) & 1);
      v = vbslq_f64(neg, zero, v);
    } else {
      clamped[i] = 0;
      clamped[i + 1] = 0;
    }
    vst1q_f64(&var[i], v);
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

double sum_neon(std::span<const double> x) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  const std::size_t n4 = x.size() - x.size() % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc01 = vaddq_f64(acc01, vld1q_f64(&x[i]));
    acc23 = vaddq_f64(acc23, vld1q_f64(&x[i + 2]));
  }
  double lanes[4] = {vgetq_lane_f64(acc01, 0), vgetq_lane_f64(acc01, 1),
                     vgetq_lane_f64(acc23, 0), vgetq_lane_f64(acc23, 1)};
  for (std::size_t i = n4; i < x.size(); ++i) lanes[i - n4] += x[i];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_neon(std::span<const double> x, std::span<const double> y) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  const std::size_t n4 = x.size() - x.size() % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc01 = vfmaq_f64(acc01, vld1q_f64(&x[i]), vld1q_f64(&y[i]));
    acc23 = vfmaq_f64(acc23, vld1q_f64(&x[i + 2]), vld1q_f64(&y[i + 2]));
  }
  double lanes[4] = {vgetq_lane_f64(acc01, 0), vgetq_lane_f64(acc01, 1),
                     vgetq_lane_f64(acc23, 0), vgetq_lane_f64(acc23, 1)};
  for (std::size_t i = n4; i < x.size(); ++i) lanes[i - n4] = std::fma(x[i], y[i], lanes[i - n4]);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{standardize_neon, destandardize_neon, poly_derivs_neon,
                                 tweedie_neon,     sum_neon,           dot_neon};
  return table;
}

}  // namespace tshrink::kernels

#endif  // __aarch64__
