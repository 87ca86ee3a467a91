#include "tshrink/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "tshrink/kernels.hpp"

namespace tshrink {
namespace {

// Acklam's rational approximation to the normal quantile (|error| < 1.2e-9
// on its own, before polishing).
double inverse_normal_estimate(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

std::string provenance_name(Provenance p) {
  switch (p) {
    case Provenance::rank_inverse_normal: return "rank-inverse-normal";
    case Provenance::standardization: return "standardization";
    case Provenance::posterior_median: return "posterior-median";
  }
  return "unknown";
}

Provenance provenance_from_name(const std::string& name) {
  if (name == "rank-inverse-normal") return Provenance::rank_inverse_normal;
  if (name == "standardization") return Provenance::standardization;
  if (name == "posterior-median") return Provenance::posterior_median;
  throw Error(errc::invalid_argument, "unknown provenance: " + name);
}

std::vector<double> ecdf_probabilities(std::span<const double> values, PlottingPosition pos) {
  const std::size_t n = values.size();
  if (n == 0) throw Error(errc::empty_input, "ecdf_probabilities on empty input");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // average rank within each tie group
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  std::vector<double> probs(n);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    probs[k] = pos == PlottingPosition::hazen ? (rank[k] - 0.5) / dn : rank[k] / (dn + 1.0);
  }
  return probs;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

// p in (0, 0.5]: the erfc branch under the polish step keeps full relative
// precision on this side.
double inverse_normal_lower(double p) {
  double x = inverse_normal_estimate(p);
  // One Halley step against the erfc CDF. phi underflows only beyond
  // |x| ~ 38.6, i.e. p below roughly 1e-323.
  const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  if (phi > 0.0) {
    const double err = normal_cdf(x) - p;
    const double u = err / phi;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace

double inverse_normal(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(errc::invalid_argument, "inverse_normal requires 0 < p < 1");
  // Reflect the upper half: 1 - p is exact for p >= 0.5, and the result is
  // odd-symmetric by construction.
  if (p > 0.5) return -inverse_normal_lower(1.0 - p);
  return inverse_normal_lower(p);
}

ScoreSet to_z_scores(const Sample& sample, PlottingPosition pos) {
  if (sample.n() < 2)
    throw Error(errc::empty_input, "to_z_scores requires at least 2 observations");
  const auto probs = ecdf_probabilities(sample.values, pos);
  ScoreSet scores;
  scores.scores.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) scores.scores[i] = inverse_normal(probs[i]);
  scores.center = 0.0;
  scores.scale = 1.0;
  scores.provenance = Provenance::rank_inverse_normal;
  return scores;
}

RobustScale robust_scale(std::span<const double> values) {
  if (values.size() < 2) throw Error(errc::empty_input, "robust_scale needs n >= 2");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  RobustScale rs;
  rs.p16 = quantile_sorted(sorted, 0.16);
  rs.p84 = quantile_sorted(sorted, 0.84);
  rs.s_r = (rs.p84 - rs.p16) / 2.0;
  if (!(rs.s_r > 0.0))
    throw Error(errc::degenerate_scale, "degenerate scale: 16th and 84th percentiles coincide");
  return rs;
}

ScoreSet standardize(std::span<const double> scores, double center, double scale,
                     Provenance provenance) {
  if (!(scale > 0.0)) throw Error(errc::invalid_argument, "standardize requires scale > 0");
  ScoreSet out;
  out.scores.resize(scores.size());
  kernels::standardize(scores, center, scale, out.scores);
  out.center = center;
  out.scale = scale;
  out.provenance = provenance;
  return out;
}

}  // namespace tshrink
