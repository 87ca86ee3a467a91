#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tshrink/common.hpp"
#include "tshrink/ingest.hpp"
#include "tshrink/lindsey.hpp"
#include "tshrink/posterior.hpp"
#include "tshrink/transform.hpp"
#include "tshrink/tweedie.hpp"

namespace tshrink {

enum class Stage { ingest, transform, posterior, lindsey, tweedie, figures, io };
std::string stage_name(Stage stage);

class StageError : public Error {
public:
  StageError(Stage stage, const Error& inner)
      : Error(inner.code(), stage_name(stage) + ": " + inner.what()), stage_(stage) {}
  Stage stage() const { return stage_; }

private:
  Stage stage_;
};

enum class ScoreTransform { rank_inverse_normal, standardization };

struct PipelineConfig {
  std::string input_path;
  std::string column = "value";
  char delimiter = ',';
  ScoreTransform score_transform = ScoreTransform::rank_inverse_normal;
  PlottingPosition plotting_position = PlottingPosition::hazen;
  bool standardize_scores = true;  // restandardize medians before step 2
  ModelConfig model;
  LindseyConfig lindsey;
  TweedieConfig tweedie;
  BinScheme display_hist = BinScheme::width(0.25, -2.0, 4.5);
  std::string output_dir = "out";
  bool emit_traces = false;

  void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);

struct PipelineReport {
  std::optional<SummaryStats> table1;  // raw data
  std::optional<SummaryStats> table2;  // input scores
  std::optional<SummaryStats> table3;  // posterior medians
  std::map<int, double> table4;        // order -> AIC
  std::optional<SummaryStats> table5;  // corrected scores
  std::map<std::string, std::string> skipped;  // table -> reason

  int selected_order = 0;
  double permanent_share = 0.0;
  double sd_reduction_vs_intermediate = 0.0;
  double headline_mean_linear = 0.0;
  double headline_mean_quantile = 0.0;
  double rhat_worst = 0.0;
  double ess_min = 0.0;
  nlohmann::json config_echo;
  bool complete = false;

  // payloads for figure emission; not serialized
  Sample sample;
  ScoreSet zscores;
  PosteriorSummary posterior;
  ScoreSet xstar;
  LogDensityFit fit;
  CorrectionResult correction;
  BinScheme display_hist = BinScheme::width(0.25, -2.0, 4.5);

  nlohmann::json to_json() const;
};

/// Runs load -> scores -> MCMC -> medians -> standardize -> Lindsey ->
/// Tweedie -> decomposition, writing each stage's artifacts into
/// config.output_dir as it completes. Deterministic given the seed; the
/// only non-reproducible output is run_log.txt (timings).
PipelineReport run_pipeline(const PipelineConfig& config);

/// Stops after the posterior summary (CLI `step1`).
PipelineReport run_step1(const PipelineConfig& config);

/// Second step on a saved score/median file (CLI `step2`).
/// `reference_sd` supplies the permanent-share denominator when the
/// stage-zero z-score dispersion is known.
PipelineReport run_step2(const PipelineConfig& config,
                         std::optional<double> reference_sd = std::nullopt);

/// Writes the three figure-data CSVs from a completed report; returns paths.
std::vector<std::string> emit_figures(const PipelineReport& report, const std::string& output_dir);

/// Rebuilds enough of a report from the artifacts in a run directory to
/// re-emit figures (CLI `figures`).
PipelineReport load_report_data(const std::string& run_dir);

/// Gaussian-kernel density on a regular grid, Silverman's bandwidth.
struct KernelDensity {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};
KernelDensity kernel_density(std::span<const double> values, std::size_t grid_points = 512);

}  // namespace tshrink
