#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace tshrink::kernels {

// Elementwise and reduction kernels used by the batch transforms. Each kernel
// has a scalar reference implementation and SIMD variants selected once at
// startup (x86-64 AVX2+FMA, aarch64 NEON). All variants of a kernel are
// bit-identical: the maps apply the same operation sequence per element, and
// the reductions use a fixed 4-accumulator scheme (lane j accumulates
// elements 4k+j; final combine (a0+a1)+(a2+a3)) so lane order matches the
// scalar reference exactly.

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  // out[i] = (x[i] - center) / scale
  void (*standardize)(std::span<const double> x, double center, double scale,
                      std::span<double> out);
  // out[i] = fma(x[i], scale, center)
  void (*destandardize)(std::span<const double> x, double center, double scale,
                        std::span<double> out);
  // First and second derivative of a polynomial on the affine basis
  // t = (z - center) / halfwidth: l1[i] = P1(t_i)/h, l2[i] = P2(t_i)/h^2
  // where P1, P2 are Horner evaluations of the supplied coefficient arrays
  // (highest degree last).
  void (*poly_derivs)(std::span<const double> z, std::span<const double> d1_coeffs,
                      std::span<const double> d2_coeffs, double center, double halfwidth,
                      std::span<double> l1, std::span<double> l2);
  // mean[i] = fma(sigma2, l1[i], z[i]);
  // var[i]  = sigma2 * fma(sigma2, l2[i], 1.0), clamped at 0 with flag when
  // clamp is set.
  void (*tweedie)(std::span<const double> z, std::span<const double> l1,
                  std::span<const double> l2, double sigma2, bool clamp,
                  std::span<double> mean, std::span<double> var,
                  std::span<std::uint8_t> clamped);
  double (*sum)(std::span<const double> x);
  double (*dot)(std::span<const double> x, std::span<const double> y);
};

const KernelTable& scalar_table();
#if defined(__x86_64__)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif

/// Table picked at startup: best supported SIMD variant, overridable with
/// TWEEDIE_SHRINK_SIMD=scalar|avx2|neon|auto.
const KernelTable& active_table();
Backend active_backend();
std::string backend_name(Backend backend);

inline void standardize(std::span<const double> x, double center, double scale,
                        std::span<double> out) {
  active_table().standardize(x, center, scale, out);
}
inline void destandardize(std::span<const double> x, double center, double scale,
                          std::span<double> out) {
  active_table().destandardize(x, center, scale, out);
}
inline void poly_derivs(std::span<const double> z, std::span<const double> d1_coeffs,
                        std::span<const double> d2_coeffs, double center, double halfwidth,
                        std::span<double> l1, std::span<double> l2) {
  active_table().poly_derivs(z, d1_coeffs, d2_coeffs, center, halfwidth, l1, l2);
}
inline void tweedie(std::span<const double> z, std::span<const double> l1,
                    std::span<const double> l2, double sigma2, bool clamp,
                    std::span<double> mean, std::span<double> var,
                    std::span<std::uint8_t> clamped) {
  active_table().tweedie(z, l1, l2, sigma2, clamp, mean, var, clamped);
}
inline double sum(std::span<const double> x) { return active_table().sum(x); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active_table().dot(x, y);
}

}  // namespace tshrink::kernels
