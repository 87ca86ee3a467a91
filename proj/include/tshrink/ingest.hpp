#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tshrink/common.hpp"

namespace tshrink {

/// Raw univariate observations. All values are finite; the loader rejects
/// NaN/inf instead of dropping them.
struct Sample {
  std::vector<double> values;
  std::string source_label;

  std::size_t n() const { return values.size(); }
};

struct SummaryStats {
  double min = 0, q1 = 0, mean = 0, q3 = 0, max = 0, sd = 0;
};

/// Equal-width histogram. Values outside [edges.front(), edges.back()] are
/// excluded from counts and tallied in out_of_range.
struct Histogram {
  std::vector<double> edges;      // length K+1, strictly increasing
  std::vector<double> midpoints;  // length K
  std::vector<std::int64_t> counts;
  double width = 0;
  std::size_t out_of_range = 0;

  std::size_t n_bins() const { return counts.size(); }
  double lo() const { return edges.front(); }
  double hi() const { return edges.back(); }
  std::int64_t total_count() const;
};

/// Binning scheme: either K equal bins over a range (data min/max when the
/// range is omitted) or a fixed width over an explicit range.
struct BinScheme {
  static BinScheme bins(int k);
  static BinScheme bins(int k, double lo, double hi);
  static BinScheme width(double w, double lo, double hi);

  int k = 0;  // 0 means width-based
  double w = 0;
  std::optional<std::pair<double, double>> range;
};

struct LoadResult {
  Sample sample;
  std::size_t skipped_rows = 0;
};

/// Reads one numeric column from a delimited UTF-8 text file. The first row
/// is the header. `column` is matched against header names first, then
/// interpreted as a 0-based index if it is an integer. Blank rows and rows
/// whose field does not parse as a number are skipped and counted; values
/// that parse as NaN/inf raise non_finite_value.
LoadResult load_samples(const std::string& path, const std::string& column, char delimiter = ',');

SummaryStats summary_stats(std::span<const double> values);
inline SummaryStats summary_stats(const Sample& sample) { return summary_stats(sample.values); }

Histogram histogram(std::span<const double> values, const BinScheme& scheme);

}  // namespace tshrink
