#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tshrink/ingest.hpp"
#include "tshrink/lindsey.hpp"
#include "tshrink/posterior.hpp"
#include "tshrink/transform.hpp"
#include "tshrink/tweedie.hpp"

namespace tshrink::io {

/// Shortest round-trip decimal rendering, used for every double written to
/// CSV so identical runs produce identical bytes.
std::string format_double(double v);

void write_text(const std::string& path, const std::string& content);

void write_sample_csv(const Sample& sample, const std::string& path);
void write_histogram_csv(const Histogram& hist, const std::string& path);

/// index,score plus a JSON sidecar (<path>.meta.json) carrying center/scale/
/// provenance so the affine map survives the round trip.
void write_scores_csv(const ScoreSet& scores, const std::string& path);
ScoreSet read_scores_csv(const std::string& path);

void write_posterior_summary_csv(const PosteriorSummary& summary, const std::string& path);

/// Long-format trace: parameter,chain,iteration,value. Unit locations are
/// optional; the three scalar parameters are always written.
void write_trace_csv(const PosteriorDraws& draws, const std::string& path,
                     bool include_units = false);

void write_aic_csv(const OrderSelection& selection, const std::string& path);

nlohmann::json fit_to_json(const LogDensityFit& fit);
LogDensityFit fit_from_json(const nlohmann::json& j);
void write_fit_json(const LogDensityFit& fit, const std::string& path);
LogDensityFit read_fit_json(const std::string& path);

void write_correction_csv(const CorrectionResult& result, const std::string& path);

/// Headline back-transformed means; the pipeline fills these from the raw
/// sample when it is available.
struct BackTransformedMeans {
  double linear = 0.0;
  double quantile = 0.0;
};
nlohmann::json correction_summary_json(
    const CorrectionResult& result,
    const std::optional<BackTransformedMeans>& headline = std::nullopt);

nlohmann::json summary_stats_to_json(const SummaryStats& stats);

}  // namespace tshrink::io
