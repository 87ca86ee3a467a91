// tweedie_shrink: two-step robust empirical Bayes correction pipeline.
//
// Subcommands:
//   run      full pipeline: load -> z-scores -> MCMC medians -> Lindsey fit
//            -> Tweedie correction -> report + figure data
//   step1    stop after the posterior-median stage
//   step2    second step only, from a saved score/median file
//   figures  re-emit figure CSVs from a finished run directory
//
// Exit codes: 0 ok, 2 configuration/usage, 10 ingest, 11 transform,
// 12 posterior, 13 lindsey, 14 tweedie, 15 figures/io.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tshrink/io.hpp"
#include "tshrink/kernels.hpp"
#include "tshrink/pipeline.hpp"

namespace {

int exit_code_for(tshrink::Stage stage) {
  using tshrink::Stage;
  switch (stage) {
    case Stage::ingest: return 10;
    case Stage::transform: return 11;
    case Stage::posterior: return 12;
    case Stage::lindsey: return 13;
    case Stage::tweedie: return 14;
    case Stage::figures:
    case Stage::io: return 15;
  }
  return 1;
}

struct CliOverrides {
  std::optional<std::string> input, column, out, transform;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma2;
  std::optional<int> bins;
  std::vector<int> orders;
  std::optional<std::string> delimiter;
  bool no_standardize = false;
  bool emit_traces = false;
};

void apply(const CliOverrides& o, tshrink::PipelineConfig& config) {
  if (o.input) config.input_path = *o.input;
  if (o.column) config.column = *o.column;
  if (o.out) config.output_dir = *o.out;
  if (o.seed) config.model.seed = *o.seed;
  if (o.sigma2) config.tweedie.sigma2 = *o.sigma2;
  if (o.bins) config.lindsey.n_bins = *o.bins;
  if (!o.orders.empty()) config.lindsey.orders = o.orders;
  if (o.delimiter) {
    if (o.delimiter->size() != 1) throw tshrink::Error(tshrink::errc::invalid_config,
                                                       "delimiter must be one character");
    config.delimiter = (*o.delimiter)[0];
  }
  if (o.transform) {
    if (*o.transform == "rank") config.score_transform = tshrink::ScoreTransform::rank_inverse_normal;
    else if (*o.transform == "standardize")
      config.score_transform = tshrink::ScoreTransform::standardization;
    else
      throw tshrink::Error(tshrink::errc::invalid_config,
                           "--transform must be 'rank' or 'standardize'");
  }
  if (o.no_standardize) config.standardize_scores = false;
  if (o.emit_traces) config.emit_traces = true;
}

void print_report(const tshrink::PipelineReport& report) {
  auto line = [](const char* name, const std::optional<tshrink::SummaryStats>& s) {
    if (!s) return;
    std::printf("%-18s min=%.4f q1=%.4f mean=%.4f q3=%.4f max=%.4f sd=%.4f\n", name, s->min,
                s->q1, s->mean, s->q3, s->max, s->sd);
  };
  line("raw data", report.table1);
  line("input scores", report.table2);
  line("posterior medians", report.table3);
  if (!report.table4.empty()) {
    std::printf("AIC by order:");
    for (const auto& [order, aic] : report.table4) std::printf(" %d:%.2f", order, aic);
    std::printf("  -> selected %d\n", report.selected_order);
  }
  line("corrected scores", report.table5);
  if (report.complete) {
    std::printf("permanent share     %.4f\n", report.permanent_share);
    std::printf("sd reduction        %.4f (vs posterior medians)\n",
                report.sd_reduction_vs_intermediate);
    std::printf("corrected mean      %.4f (linear map) / %.4f (quantile map)\n",
                report.headline_mean_linear, report.headline_mean_quantile);
  }
  if (report.rhat_worst > 0)
    std::printf("diagnostics         rhat_worst=%.4f ess_min=%.1f\n", report.rhat_worst,
                report.ess_min);
}

}  // namespace

namespace {

int run_main(int argc, char** argv) {
  CLI::App app{"two-step robust local empirical Bayes correction"};
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides overrides;
  std::optional<double> reference_sd;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--input", overrides.input, "input CSV/TSV path");
    cmd->add_option("--column", overrides.column, "column name or 0-based index");
    cmd->add_option("--delimiter", overrides.delimiter, "field delimiter (default ,)");
    cmd->add_option("--seed", overrides.seed, "RNG seed");
    cmd->add_option("--sigma2", overrides.sigma2, "Tweedie sampling variance");
    cmd->add_option("--bins", overrides.bins, "Lindsey histogram bins");
    cmd->add_option("--orders", overrides.orders, "candidate polynomial orders");
    cmd->add_option("--out", overrides.out, "output directory");
    cmd->add_option("--transform", overrides.transform,
                    "score transform: rank (default) or standardize");
    cmd->add_flag("--no-standardize", overrides.no_standardize,
                  "skip restandardization before the second step");
    cmd->add_flag("--traces", overrides.emit_traces, "write the MCMC trace CSV");
  };

  CLI::App* run = app.add_subcommand("run", "full two-step pipeline");
  add_common(run);
  CLI::App* step1 = app.add_subcommand("step1", "stop after posterior medians");
  add_common(step1);
  CLI::App* step2 = app.add_subcommand("step2", "second step from a saved median file");
  add_common(step2);
  step2->add_option("--reference-sd", reference_sd,
                    "stage-zero z-score sd for the permanent-share denominator");

  std::string figures_dir;
  CLI::App* figures = app.add_subcommand("figures", "re-emit figure data from a run directory");
  figures->add_option("--out", figures_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit clean, usage errors exit 2
  }

  try {
    if (figures->parsed()) {
      try {
        const tshrink::PipelineReport report = tshrink::load_report_data(figures_dir);
        for (const auto& path : tshrink::emit_figures(report, figures_dir))
          std::printf("wrote %s\n", path.c_str());
        return 0;
      } catch (const tshrink::StageError&) {
        throw;
      } catch (const tshrink::Error& e) {
        throw tshrink::StageError(tshrink::Stage::figures, e);
      }
    }

    tshrink::PipelineConfig config;
    if (!config_path.empty()) config = tshrink::load_config(config_path);
    apply(overrides, config);

    tshrink::PipelineReport report;
    if (run->parsed()) report = tshrink::run_pipeline(config);
    else if (step1->parsed()) report = tshrink::run_step1(config);
    else report = tshrink::run_step2(config, reference_sd);

    print_report(report);
    std::printf("artifacts in %s (simd backend: %s)\n", config.output_dir.c_str(),
                tshrink::kernels::backend_name(tshrink::kernels::active_backend()).c_str());
    return 0;
  } catch (const tshrink::StageError& e) {
    std::fprintf(stderr, "error [%s/%s]: %s\n", tshrink::stage_name(e.stage()).c_str(),
                 tshrink::errc_name(e.code()), e.what());
    return exit_code_for(e.stage());
  } catch (const tshrink::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", tshrink::errc_name(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) noexcept {
  try {
    return run_main(argc, argv);
  } catch (...) {
    std::fprintf(stderr, "fatal: unexpected error\n");
    return 1;
  }
}
