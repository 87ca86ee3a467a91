#include "tshrink/tweedie.hpp"

#include <algorithm>
#include <cmath>

#include "tshrink/kernels.hpp"

namespace tshrink {
namespace {

CorrectionResult assemble(const ScoreSet& scores, std::vector<double> means,
                          std::vector<double> vars, std::vector<std::uint8_t> clamped,
                          std::vector<std::uint8_t> extrapolated, const TweedieConfig& config,
                          std::optional<double> reference_sd) {
  CorrectionResult result;
  result.corrected_means = std::move(means);
  result.corrected_vars = std::move(vars);
  result.clamped = std::move(clamped);
  result.extrapolated = std::move(extrapolated);
  result.input_scores = scores;

  const std::size_t n = result.corrected_means.size();
  result.corrected_means_unstandardized.resize(n);
  kernels::destandardize(result.corrected_means, scores.center, scores.scale,
                         result.corrected_means_unstandardized);

  std::vector<double> for_summary;
  const bool filter = !config.include_extrapolated_in_summary;
  if (filter) {
    for (std::size_t i = 0; i < n; ++i)
      if (!result.extrapolated[i]) for_summary.push_back(result.corrected_means_unstandardized[i]);
  }
  const auto& summary_values = filter ? for_summary : result.corrected_means_unstandardized;
  if (summary_values.empty())
    throw Error(errc::empty_input, "no scores left for the correction summary");
  result.summary = summary_stats(summary_values);

  std::vector<double> input_unstd(n);
  kernels::destandardize(scores.scores, scores.center, scores.scale, input_unstd);
  const double input_sd = sd_of(input_unstd);
  const double corrected_sd = sd_of(summary_values);
  const double denom = reference_sd.value_or(input_sd);
  if (!(denom > 0.0) || !(input_sd > 0.0))
    throw Error(errc::degenerate_scale, "zero dispersion in correction input");
  result.permanent_share = corrected_sd / denom;
  result.sd_reduction_vs_input = 1.0 - corrected_sd / input_sd;
  return result;
}

}  // namespace

void TweedieConfig::validate() const {
  if (!(sigma2 > 0.0)) throw Error(errc::invalid_config, "sigma2 must be positive");
}

double correct_mean(double z, const LogDensityFit& fit, const TweedieConfig& config) {
  return correct_mean(z, log_density_derivs(fit, z), config);
}

double correct_mean(double z, const LogDensityDerivs& derivs, const TweedieConfig& config) {
  config.validate();
  return std::fma(config.sigma2, derivs.l1, z);
}

std::pair<double, bool> correct_variance(double z, const LogDensityFit& fit,
                                         const TweedieConfig& config) {
  return correct_variance(z, log_density_derivs(fit, z), config);
}

std::pair<double, bool> correct_variance(double /*z*/, const LogDensityDerivs& derivs,
                                         const TweedieConfig& config) {
  config.validate();
  const double v = config.sigma2 * std::fma(config.sigma2, derivs.l2, 1.0);
  if (config.clamp_negative_variance && v < 0.0) return {0.0, true};
  return {v, false};
}

CorrectionResult correct_scores(const ScoreSet& scores, const LogDensityFit& fit,
                                const TweedieConfig& config,
                                std::optional<double> reference_sd) {
  config.validate();
  if (!fit.converged)
    throw Error(errc::non_convergence, "correction requires a converged density fit");
  const std::size_t n = scores.size();
  if (n == 0) throw Error(errc::empty_input, "no scores to correct");

  std::vector<double> l1(n), l2(n), means(n), vars(n);
  std::vector<std::uint8_t> clamped(n), extrapolated(n);
  log_density_derivs(fit, scores.scores, l1, l2);
  kernels::tweedie(scores.scores, l1, l2, config.sigma2, config.clamp_negative_variance, means,
                   vars, clamped);
  const double lo = fit.histogram.lo();
  const double hi = fit.histogram.hi();
  for (std::size_t i = 0; i < n; ++i)
    extrapolated[i] = scores.scores[i] < lo || scores.scores[i] > hi ? 1 : 0;

  return assemble(scores, std::move(means), std::move(vars), std::move(clamped),
                  std::move(extrapolated), config, reference_sd);
}

CorrectionResult correct_scores(const ScoreSet& scores, const DerivSource& derivs,
                                const TweedieConfig& config,
                                std::optional<double> reference_sd) {
  config.validate();
  const std::size_t n = scores.size();
  if (n == 0) throw Error(errc::empty_input, "no scores to correct");

  std::vector<double> means(n), vars(n);
  std::vector<std::uint8_t> clamped(n), extrapolated(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const LogDensityDerivs d = derivs(scores.scores[i]);
    means[i] = correct_mean(scores.scores[i], d, config);
    const auto [v, flag] = correct_variance(scores.scores[i], d, config);
    vars[i] = v;
    clamped[i] = flag ? 1 : 0;
  }
  return assemble(scores, std::move(means), std::move(vars), std::move(clamped),
                  std::move(extrapolated), config, reference_sd);
}

VarianceDecomposition decompose_variance(double corrected_sd, double original_sd,
                                         double intermediate_sd) {
  if (!(original_sd > 0.0) || !(intermediate_sd > 0.0))
    throw Error(errc::invalid_argument, "decompose_variance needs positive denominators");
  VarianceDecomposition d;
  d.permanent_share = corrected_sd / original_sd;
  d.reduction_vs_intermediate = 1.0 - corrected_sd / intermediate_sd;
  return d;
}

double back_transform_linear(double corrected_score_mean, double original_center,
                             double original_scale) {
  if (!(original_scale > 0.0))
    throw Error(errc::invalid_argument, "back_transform_linear needs a positive scale");
  return std::fma(corrected_score_mean, original_scale, original_center);
}

double back_transform_quantile(double corrected_score, const Sample& sample) {
  if (sample.n() == 0) throw Error(errc::empty_input, "back_transform_quantile on empty sample");
  return quantile(sample.values, normal_cdf(corrected_score));
}

}  // namespace tshrink
