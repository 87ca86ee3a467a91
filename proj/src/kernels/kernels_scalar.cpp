#include <cmath>

#include "tshrink/kernels.hpp"

namespace tshrink::kernels {
namespace {

void standardize_scalar(std::span<const double> x, double center, double scale,
                        std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - center) / scale;
}

void destandardize_scalar(std::span<const double> x, double center, double scale,
                          std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::fma(x[i], scale, center);
}

void poly_derivs_scalar(std::span<const double> z, std::span<const double> c1,
                        std::span<const double> c2, double center, double halfwidth,
                        std::span<double> l1, std::span<double> l2) {
  const double h2 = halfwidth * halfwidth;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double t = (z[i] - center) / halfwidth;
    double d1 = 0.0;
    for (std::size_t k = c1.size(); k-- > 0;) d1 = std::fma(d1, t, c1[k]);
    double d2 = 0.0;
    for (std::size_t k = c2.size(); k-- > 0;) d2 = std::fma(d2, t, c2[k]);
    l1[i] = d1 / halfwidth;
    l2[i] = d2 / h2;
  }
}

void tweedie_scalar(std::span<const double> z, std::span<const double> l1,
                    std::span<const double> l2, double sigma2, bool clamp,
                    std::span<double> mean, std::span<double> var,
                    std::span<std::uint8_t> clamped) {
  for (std::size_t i = 0; i < z.size(); ++i) {
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

double sum_scalar(std::span<const double> x) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = x.size() - x.size() % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc[0] += x[i];
    acc[1] += x[i + 1];
    acc[2] += x[i + 2];
    acc[3] += x[i + 3];
  }
  for (std::size_t i = n4; i < x.size(); ++i) acc[i - n4] += x[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot_scalar(std::span<const double> x, std::span<const double> y) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = x.size() - x.size() % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc[0] = std::fma(x[i], y[i], acc[0]);
    acc[1] = std::fma(x[i + 1], y[i + 1], acc[1]);
    acc[2] = std::fma(x[i + 2], y[i + 2], acc[2]);
    acc[3] = std::fma(x[i + 3], y[i + 3], acc[3]);
  }
  for (std::size_t i = n4; i < x.size(); ++i) acc[i - n4] = std::fma(x[i], y[i], acc[i - n4]);
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{standardize_scalar, destandardize_scalar, poly_derivs_scalar,
                                 tweedie_scalar,     sum_scalar,           dot_scalar};
  return table;
}

}  // namespace tshrink::kernels
