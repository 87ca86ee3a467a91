#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace tshrink {

/// Error classes used across the library. The CLI maps these (together with
/// the pipeline stage they were raised in) onto distinct exit codes.
enum class errc {
  missing_file,
  missing_column,
  zero_usable_rows,
  non_finite_value,
  empty_input,
  invalid_scheme,
  invalid_argument,
  degenerate_scale,
  invalid_config,
  non_convergence,
  rank_deficient,
  scale_mismatch,
  io_failure,
};

class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

const char* errc_name(errc code);

/// Quantile of a *sorted* sequence by linear interpolation between order
/// statistics at positions (i-1)/(n-1) (the "type-7" rule used throughout).
double quantile_sorted(std::span<const double> sorted, double p);

/// Same rule on unsorted data (copies and sorts internally).
double quantile(std::span<const double> values, double p);

double mean_of(std::span<const double> values);

/// Sample standard deviation, denominator n-1 (0 for n < 2).
double sd_of(std::span<const double> values);

}  // namespace tshrink
