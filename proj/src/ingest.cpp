#include "tshrink/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tshrink {
namespace {

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delimiter)) fields.push_back(field);
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& token) {
  const std::string t = trim(token);
  if (t.empty()) return std::nullopt;
  double value = 0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  if (*begin == '+') ++begin;  // from_chars does not accept a leading plus
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

std::int64_t Histogram::total_count() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

BinScheme BinScheme::bins(int k) {
  BinScheme s;
  s.k = k;
  return s;
}

BinScheme BinScheme::bins(int k, double lo, double hi) {
  BinScheme s;
  s.k = k;
  s.range = {lo, hi};
  return s;
}

BinScheme BinScheme::width(double w, double lo, double hi) {
  BinScheme s;
  s.w = w;
  s.range = {lo, hi};
  return s;
}

LoadResult load_samples(const std::string& path, const std::string& column, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error(errc::missing_file, "cannot open input file: " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) throw Error(errc::zero_usable_rows, "empty file: " + path);
  const auto headers = split_fields(header_line, delimiter);

  std::size_t col = headers.size();
  for (std::size_t i = 0; i < headers.size(); ++i) {
    if (trim(headers[i]) == trim(column)) {
      col = i;
      break;
    }
  }
  if (col == headers.size()) {
    // fall back to a 0-based index
    int idx = -1;
    const std::string t = trim(column);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), idx);
    if (ec == std::errc{} && ptr == t.data() + t.size() && idx >= 0 &&
        static_cast<std::size_t>(idx) < headers.size()) {
      col = static_cast<std::size_t>(idx);
    } else {
      throw Error(errc::missing_column, "column '" + column + "' not found in " + path);
    }
  }

  LoadResult result;
  result.sample.source_label = path + ":" + trim(headers[col]);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      ++result.skipped_rows;
      continue;
    }
    const auto fields = split_fields(line, delimiter);
    if (col >= fields.size()) {
      ++result.skipped_rows;
      continue;
    }
    const auto value = parse_double(fields[col]);
    if (!value) {
      // tokens that *look* numeric but are not finite are an error, not a skip
      std::string t = trim(fields[col]);
      std::transform(t.begin(), t.end(), t.begin(),
                     [](unsigned char ch) { return std::tolower(ch); });
      if (t == "nan" || t == "-nan" || t == "inf" || t == "-inf" || t == "infinity" ||
          t == "-infinity") {
        throw Error(errc::non_finite_value, "non-finite value '" + fields[col] + "' in " + path);
      }
      ++result.skipped_rows;
      continue;
    }
    if (!std::isfinite(*value))
      throw Error(errc::non_finite_value, "non-finite value in " + path);
    result.sample.values.push_back(*value);
  }

  if (result.sample.values.empty())
    throw Error(errc::zero_usable_rows, "no usable rows in " + path);
  if (result.sample.n() < 2)
    throw Error(errc::zero_usable_rows, "need at least 2 observations, got 1 in " + path);
  return result;
}

SummaryStats summary_stats(std::span<const double> values) {
  if (values.empty()) throw Error(errc::empty_input, "summary_stats on empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  SummaryStats stats;
  stats.min = sorted.front();
  stats.max = sorted.back();
  stats.q1 = quantile_sorted(sorted, 0.25);
  stats.q3 = quantile_sorted(sorted, 0.75);
  stats.mean = mean_of(values);
  stats.sd = sd_of(values);
  return stats;
}

Histogram histogram(std::span<const double> values, const BinScheme& scheme) {
  if (values.empty()) throw Error(errc::empty_input, "histogram of empty input");

  double lo, hi;
  if (scheme.range) {
    lo = scheme.range->first;
    hi = scheme.range->second;
  } else {
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  if (!(lo < hi)) throw Error(errc::invalid_scheme, "histogram range must satisfy lo < hi");

  std::size_t k;
  double width;
  if (scheme.k > 0) {
    if (scheme.k < 2) throw Error(errc::invalid_scheme, "need at least 2 bins");
    k = static_cast<std::size_t>(scheme.k);
    width = (hi - lo) / static_cast<double>(k);
  } else {
    if (!(scheme.w > 0)) throw Error(errc::invalid_scheme, "bin width must be positive");
    width = scheme.w;
    k = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
    if (k < 1) k = 1;
  }

  Histogram hist;
  hist.width = width;
  hist.edges.resize(k + 1);
  for (std::size_t i = 0; i <= k; ++i) hist.edges[i] = lo + static_cast<double>(i) * width;
  hist.edges[k] = std::max(hist.edges[k], hi);  // final bin closed at hi
  hist.midpoints.resize(k);
  for (std::size_t i = 0; i < k; ++i) hist.midpoints[i] = (hist.edges[i] + hist.edges[i + 1]) / 2;
  hist.counts.assign(k, 0);

  for (double v : values) {
    if (v < lo || v > hist.edges[k]) {
      ++hist.out_of_range;
      continue;
    }
    auto bin = static_cast<std::size_t>((v - lo) / width);
    if (bin >= k) bin = k - 1;  // top edge closes the last bin
    // guard against rounding at interior edges: [edge_b, edge_{b+1})
    while (bin > 0 && v < hist.edges[bin]) --bin;
    while (bin + 1 < k && v >= hist.edges[bin + 1]) ++bin;
    ++hist.counts[bin];
  }
  return hist;
}

}  // namespace tshrink
