#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tshrink/common.hpp"
#include "tshrink/ingest.hpp"
#include "tshrink/lindsey.hpp"
#include "tshrink/transform.hpp"

namespace tshrink {

struct TweedieConfig {
  double sigma2 = 1.0;  // sampling variance on the standardized-score scale
  bool clamp_negative_variance = true;
  bool include_extrapolated_in_summary = true;

  void validate() const;
};

/// Source of marginal log-density derivatives. Wraps either a Lindsey fit or
/// an analytic density (used by the exact-density cross-checks).
using DerivSource = std::function<LogDensityDerivs(double)>;

struct CorrectionResult {
  std::vector<double> corrected_means;  // standardized-score scale
  std::vector<double> corrected_vars;
  std::vector<std::uint8_t> clamped;
  ScoreSet input_scores;
  std::vector<double> corrected_means_unstandardized;  // mapped back through the score scale
  std::vector<std::uint8_t> extrapolated;  // derivative evaluated outside the fitted range
  SummaryStats summary;                    // of the back-mapped corrected means
  double permanent_share = 0.0;
  double sd_reduction_vs_input = 0.0;
};

/// Posterior mean: z + sigma2 * l'(z).
double correct_mean(double z, const LogDensityFit& fit, const TweedieConfig& config);
double correct_mean(double z, const LogDensityDerivs& derivs, const TweedieConfig& config);

/// Posterior variance sigma2 * (1 + sigma2 * l''(z)); negative values clamp
/// to 0 with a flag when enabled.
std::pair<double, bool> correct_variance(double z, const LogDensityFit& fit,
                                         const TweedieConfig& config);
std::pair<double, bool> correct_variance(double z, const LogDensityDerivs& derivs,
                                         const TweedieConfig& config);

/// Applies the correction to every score. `reference_sd` is the dispersion
/// of the stage-zero z-scores used as the permanent-share denominator; by
/// default the sd of the back-mapped input scores (appropriate when the
/// scores being corrected *are* the z-scores).
CorrectionResult correct_scores(const ScoreSet& scores, const LogDensityFit& fit,
                                const TweedieConfig& config,
                                std::optional<double> reference_sd = std::nullopt);

/// Same pipeline with an arbitrary derivative source (analytic-density test
/// hook). No extrapolation flags since there is no fitted range.
CorrectionResult correct_scores(const ScoreSet& scores, const DerivSource& derivs,
                                const TweedieConfig& config,
                                std::optional<double> reference_sd = std::nullopt);

struct VarianceDecomposition {
  double permanent_share = 0.0;
  double reduction_vs_intermediate = 0.0;
};

/// permanent_share = corrected_sd / original_sd;
/// reduction_vs_intermediate = 1 - corrected_sd / intermediate_sd.
VarianceDecomposition decompose_variance(double corrected_sd, double original_sd,
                                         double intermediate_sd);

/// original_center + corrected_score_mean * original_scale.
double back_transform_linear(double corrected_score_mean, double original_center,
                             double original_scale);

/// Empirical quantile of the sample at Phi(corrected_score).
double back_transform_quantile(double corrected_score, const Sample& sample);

}  // namespace tshrink
