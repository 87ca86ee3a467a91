#include "tshrink/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tshrink/kernels.hpp"

namespace tshrink {

const char* errc_name(errc code) {
  switch (code) {
    case errc::missing_file: return "missing_file";
    case errc::missing_column: return "missing_column";
    case errc::zero_usable_rows: return "zero_usable_rows";
    case errc::non_finite_value: return "non_finite_value";
    case errc::empty_input: return "empty_input";
    case errc::invalid_scheme: return "invalid_scheme";
    case errc::invalid_argument: return "invalid_argument";
    case errc::degenerate_scale: return "degenerate_scale";
    case errc::invalid_config: return "invalid_config";
    case errc::non_convergence: return "non_convergence";
    case errc::rank_deficient: return "rank_deficient";
    case errc::scale_mismatch: return "scale_mismatch";
    case errc::io_failure: return "io_failure";
  }
  return "unknown";
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(errc::empty_input, "quantile of empty sequence");
  if (p < 0.0 || p > 1.0) throw Error(errc::invalid_argument, "quantile p outside [0, 1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> tmp(values.begin(), values.end());
  std::sort(tmp.begin(), tmp.end());
  return quantile_sorted(tmp, p);
}

double mean_of(std::span<const double> values) {
  if (values.empty()) throw Error(errc::empty_input, "mean of empty sequence");
  return kernels::sum(values) / static_cast<double>(values.size());
}

double sd_of(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean_of(values);
  double acc = 0.0;
  for (double v : values) {
    const double d = v - m;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(n - 1));
}

}  // namespace tshrink
