#include "tshrink/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tshrink/io.hpp"
#include "tshrink/kernels.hpp"

namespace tshrink {
namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

template <typename F>
auto stage(Stage which, F&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(which, e);
  } catch (const std::exception& e) {
    throw StageError(which, Error(errc::io_failure, e.what()));
  }
}

struct RunLog {
  std::ostringstream lines;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void mark(const std::string& what) {
    const auto now = std::chrono::steady_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - start).count();
    lines << what << "\t" << ms << "ms\n";
  }
};

void write_report(const PipelineReport& report, const std::string& dir) {
  io::write_text(join(dir, "report.json"), report.to_json().dump(2) + "\n");
}

ScoreSet make_input_scores(const Sample& sample, const PipelineConfig& config) {
  if (config.score_transform == ScoreTransform::rank_inverse_normal)
    return to_z_scores(sample, config.plotting_position);
  const double center = mean_of(sample.values);
  const double scale = sd_of(sample.values);
  if (!(scale > 0.0)) throw Error(errc::degenerate_scale, "constant input sample");
  return standardize(sample.values, center, scale, Provenance::standardization);
}

}  // namespace

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::transform: return "transform";
    case Stage::posterior: return "posterior";
    case Stage::lindsey: return "lindsey";
    case Stage::tweedie: return "tweedie";
    case Stage::figures: return "figures";
    case Stage::io: return "io";
  }
  return "unknown";
}

void PipelineConfig::validate() const {
  if (input_path.empty()) throw Error(errc::invalid_config, "input path not set");
  if (output_dir.empty()) throw Error(errc::invalid_config, "output dir not set");
  model.validate();
  lindsey.validate();
  tweedie.validate();
}

nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["input"] = {{"path", c.input_path},
                {"column", c.column},
                {"delimiter", std::string(1, c.delimiter)}};
  j["score_transform"] = c.score_transform == ScoreTransform::rank_inverse_normal
                             ? "rank-inverse-normal"
                             : "standardization";
  j["plotting_position"] = c.plotting_position == PlottingPosition::hazen ? "hazen" : "weibull";
  j["standardize_scores"] = c.standardize_scores;
  j["model"] = {{"nu", c.model.nu},
                {"n_iter", c.model.n_iter},
                {"n_burn", c.model.n_burn},
                {"n_chains", c.model.n_chains},
                {"seed", c.model.seed},
                {"hyper_loc_mean", c.model.hyper_loc_mean},
                {"hyper_loc_var", c.model.hyper_loc_var},
                {"hyper_prec_shape", c.model.hyper_prec_shape},
                {"hyper_prec_rate", c.model.hyper_prec_rate},
                {"gaussian_likelihood", c.model.gaussian_likelihood}};
  if (c.model.fixed_sigma) j["model"]["fixed_sigma"] = *c.model.fixed_sigma;
  if (c.model.fixed_mu0) j["model"]["fixed_mu0"] = *c.model.fixed_mu0;
  if (c.model.fixed_tau0) j["model"]["fixed_tau0"] = *c.model.fixed_tau0;
  j["lindsey"] = {{"n_bins", c.lindsey.n_bins},
                  {"orders", c.lindsey.orders},
                  {"irls_tol", c.lindsey.irls_tol},
                  {"irls_max_iter", c.lindsey.irls_max_iter}};
  if (c.lindsey.range)
    j["lindsey"]["range"] = {c.lindsey.range->first, c.lindsey.range->second};
  j["tweedie"] = {{"sigma2", c.tweedie.sigma2},
                  {"clamp_negative_variance", c.tweedie.clamp_negative_variance},
                  {"include_extrapolated_in_summary", c.tweedie.include_extrapolated_in_summary}};
  j["display_hist"] = {{"width", c.display_hist.w},
                       {"lo", c.display_hist.range ? c.display_hist.range->first : -2.0},
                       {"hi", c.display_hist.range ? c.display_hist.range->second : 4.5}};
  j["output_dir"] = c.output_dir;
  j["emit_traces"] = c.emit_traces;
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("input")) {
    const auto& in = j.at("input");
    if (in.contains("path")) c.input_path = in.at("path").get<std::string>();
    if (in.contains("column")) c.column = in.at("column").get<std::string>();
    if (in.contains("delimiter")) {
      const auto d = in.at("delimiter").get<std::string>();
      if (d.size() != 1) throw Error(errc::invalid_config, "delimiter must be one character");
      c.delimiter = d[0];
    }
  }
  if (j.contains("score_transform")) {
    const auto s = j.at("score_transform").get<std::string>();
    if (s == "rank-inverse-normal") c.score_transform = ScoreTransform::rank_inverse_normal;
    else if (s == "standardization") c.score_transform = ScoreTransform::standardization;
    else throw Error(errc::invalid_config, "unknown score_transform: " + s);
  }
  if (j.contains("plotting_position")) {
    const auto s = j.at("plotting_position").get<std::string>();
    if (s == "hazen") c.plotting_position = PlottingPosition::hazen;
    else if (s == "weibull") c.plotting_position = PlottingPosition::weibull;
    else throw Error(errc::invalid_config, "unknown plotting_position: " + s);
  }
  if (j.contains("standardize_scores")) c.standardize_scores = j.at("standardize_scores").get<bool>();
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("nu")) c.model.nu = m.at("nu").get<double>();
    if (m.contains("n_iter")) c.model.n_iter = m.at("n_iter").get<int>();
    if (m.contains("n_burn")) c.model.n_burn = m.at("n_burn").get<int>();
    if (m.contains("n_chains")) c.model.n_chains = m.at("n_chains").get<int>();
    if (m.contains("seed")) c.model.seed = m.at("seed").get<std::uint64_t>();
    if (m.contains("hyper_loc_mean")) c.model.hyper_loc_mean = m.at("hyper_loc_mean").get<double>();
    if (m.contains("hyper_loc_var")) c.model.hyper_loc_var = m.at("hyper_loc_var").get<double>();
    if (m.contains("hyper_prec_shape"))
      c.model.hyper_prec_shape = m.at("hyper_prec_shape").get<double>();
    if (m.contains("hyper_prec_rate"))
      c.model.hyper_prec_rate = m.at("hyper_prec_rate").get<double>();
    if (m.contains("gaussian_likelihood"))
      c.model.gaussian_likelihood = m.at("gaussian_likelihood").get<bool>();
    if (m.contains("fixed_sigma")) c.model.fixed_sigma = m.at("fixed_sigma").get<double>();
    if (m.contains("fixed_mu0")) c.model.fixed_mu0 = m.at("fixed_mu0").get<double>();
    if (m.contains("fixed_tau0")) c.model.fixed_tau0 = m.at("fixed_tau0").get<double>();
  }
  if (j.contains("lindsey")) {
    const auto& l = j.at("lindsey");
    if (l.contains("n_bins")) c.lindsey.n_bins = l.at("n_bins").get<int>();
    if (l.contains("orders")) c.lindsey.orders = l.at("orders").get<std::vector<int>>();
    if (l.contains("irls_tol")) c.lindsey.irls_tol = l.at("irls_tol").get<double>();
    if (l.contains("irls_max_iter")) c.lindsey.irls_max_iter = l.at("irls_max_iter").get<int>();
    if (l.contains("range") && !l.at("range").is_null()) {
      const auto r = l.at("range").get<std::vector<double>>();
      if (r.size() != 2) throw Error(errc::invalid_config, "lindsey.range needs two numbers");
      c.lindsey.range = {r[0], r[1]};
    }
  }
  if (j.contains("tweedie")) {
    const auto& t = j.at("tweedie");
    if (t.contains("sigma2")) c.tweedie.sigma2 = t.at("sigma2").get<double>();
    if (t.contains("clamp_negative_variance"))
      c.tweedie.clamp_negative_variance = t.at("clamp_negative_variance").get<bool>();
    if (t.contains("include_extrapolated_in_summary"))
      c.tweedie.include_extrapolated_in_summary =
          t.at("include_extrapolated_in_summary").get<bool>();
  }
  if (j.contains("display_hist")) {
    const auto& d = j.at("display_hist");
    c.display_hist = BinScheme::width(d.at("width").get<double>(), d.at("lo").get<double>(),
                                      d.at("hi").get<double>());
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("emit_traces")) c.emit_traces = j.at("emit_traces").get<bool>();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::missing_file, "cannot open config " + path);
  return config_from_json(nlohmann::json::parse(in));
}

nlohmann::json PipelineReport::to_json() const {
  nlohmann::json j;
  auto table = [&](const char* name, const std::optional<SummaryStats>& stats) {
    if (stats) j["tables"][name] = io::summary_stats_to_json(*stats);
  };
  table("table1_raw", table1);
  table("table2_scores", table2);
  table("table3_posterior", table3);
  table("table5_corrected", table5);
  if (!table4.empty()) {
    nlohmann::json t4 = nlohmann::json::object();
    for (const auto& [order, aic] : table4) t4[std::to_string(order)] = aic;
    j["tables"]["table4_aic"] = t4;
  }
  for (const auto& [name, reason] : skipped) j["skipped"][name] = reason;
  j["selected_order"] = selected_order;
  j["permanent_share"] = permanent_share;
  j["sd_reduction_vs_intermediate"] = sd_reduction_vs_intermediate;
  j["headline_means"] = {{"linear", headline_mean_linear}, {"quantile", headline_mean_quantile}};
  j["diagnostics"] = {{"rhat_worst", rhat_worst}, {"ess_min", ess_min}};
  j["config"] = config_echo;
  j["complete"] = complete;
  return j;
}

KernelDensity kernel_density(std::span<const double> values, std::size_t grid_points) {
  if (values.size() < 2) throw Error(errc::empty_input, "kernel density needs n >= 2");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = sd_of(values);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.349);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
  const double n = static_cast<double>(values.size());
  const double bw = 0.9 * spread * std::pow(n, -0.2);

  KernelDensity kd;
  kd.bandwidth = bw;
  kd.grid.resize(grid_points);
  kd.density.resize(grid_points);
  const double lo = sorted.front() - 3.0 * bw;
  const double hi = sorted.back() + 3.0 * bw;
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = lo + static_cast<double>(g) * step;
    double acc = 0.0;
    for (double v : values) {
      const double u = (x - v) / bw;
      acc += std::exp(-0.5 * u * u);
    }
    kd.grid[g] = x;
    kd.density[g] = acc * norm;
  }
  return kd;
}

namespace {

PipelineReport run_impl(const PipelineConfig& config, bool stop_after_step1,
                        std::optional<double> reference_sd_override,
                        const std::optional<ScoreSet>& preloaded_scores) {
  config.validate();
  fs::create_directories(config.output_dir);
  const std::string dir = config.output_dir;

  RunLog log;
  log.lines << "seed\t" << config.model.seed << "\n"
            << "simd\t" << kernels::backend_name(kernels::active_backend()) << "\n"
            << "threads\t" << (std::getenv("TWEEDIE_SHRINK_THREADS")
                                   ? std::getenv("TWEEDIE_SHRINK_THREADS")
                                   : "auto")
            << "\n";
  PipelineReport report;
  report.config_echo = config_to_json(config);
  report.display_hist = config.display_hist;
  report.skipped = {{"table1_raw", "not reached"},      {"table2_scores", "not reached"},
                    {"table3_posterior", "not reached"}, {"table4_aic", "not reached"},
                    {"table5_corrected", "not reached"}};

  auto fail = [&](Stage which, const Error& e) -> StageError {
    StageError wrapped = StageError(which, e);
    for (auto& [name, reason] : report.skipped)
      if (reason == "not reached") reason = std::string("failed at ") + stage_name(which);
    write_report(report, dir);
    io::write_text(join(dir, "run_log.txt"), log.lines.str());
    return wrapped;
  };
  auto guarded = [&](Stage which, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw fail(which, e);
    } catch (const nlohmann::json::exception& e) {
      throw fail(which, Error(errc::io_failure, e.what()));
    }
  };

  bool have_sample = false;
  if (!preloaded_scores) {
    guarded(Stage::ingest, [&] {
      LoadResult loaded = load_samples(config.input_path, config.column, config.delimiter);
      report.sample = std::move(loaded.sample);
      io::write_sample_csv(report.sample, join(dir, "sample.csv"));
      report.table1 = summary_stats(report.sample);
      report.skipped.erase("table1_raw");
      log.mark("ingest (skipped_rows=" + std::to_string(loaded.skipped_rows) + ")");
    });
    have_sample = true;

    guarded(Stage::transform, [&] {
      report.zscores = make_input_scores(report.sample, config);
      io::write_scores_csv(report.zscores, join(dir, "scores.csv"));
      report.table2 = summary_stats(report.zscores.scores);
      report.skipped.erase("table2_scores");
      log.mark("transform");
    });
  } else {
    report.zscores = *preloaded_scores;
    report.table2 = summary_stats(report.zscores.scores);
    report.skipped["table1_raw"] = "step2: raw sample not available";
    report.skipped.erase("table2_scores");
  }

  ScoreSet step2_input;
  double intermediate_sd = 0.0;
  if (!stop_after_step1 && preloaded_scores) {
    // step 2 from file: scores are already the medians
    step2_input = report.zscores;
    intermediate_sd = sd_of(step2_input.scores);
    report.table3 = summary_stats(step2_input.scores);
    report.skipped.erase("table3_posterior");
  } else {
    guarded(Stage::posterior, [&] {
      PosteriorDraws draws = run_mcmc(report.zscores, config.model);
      report.posterior = summarize(draws);
      report.rhat_worst = report.posterior.rhat_worst;
      report.ess_min = report.posterior.ess_min;
      io::write_posterior_summary_csv(report.posterior, join(dir, "medians.csv"));
      if (config.emit_traces) io::write_trace_csv(draws, join(dir, "trace.csv"));
      report.table3 = summary_stats(report.posterior.medians);
      report.skipped.erase("table3_posterior");
      log.mark("posterior");
    });
    intermediate_sd = report.table3->sd;
  }

  if (stop_after_step1) {
    report.skipped["table4_aic"] = "not run (step1)";
    report.skipped["table5_corrected"] = "not run (step1)";
    write_report(report, dir);
    io::write_text(join(dir, "run_log.txt"), log.lines.str());
    return report;
  }

  guarded(Stage::transform, [&] {
    const auto& medians = preloaded_scores ? step2_input.scores : report.posterior.medians;
    if (config.standardize_scores) {
      const double center = mean_of(medians);
      const double scale = robust_scale(medians).s_r;
      report.xstar = standardize(medians, center, scale, Provenance::posterior_median);
    } else {
      report.xstar.scores = medians;
      report.xstar.center = 0.0;
      report.xstar.scale = 1.0;
      report.xstar.provenance = Provenance::posterior_median;
    }
    io::write_scores_csv(report.xstar, join(dir, "standardized_scores.csv"));
    log.mark("standardize");
  });

  guarded(Stage::lindsey, [&] {
    LindseyConfig lcfg = config.lindsey;
    BinScheme scheme = lcfg.range ? BinScheme::bins(lcfg.n_bins, lcfg.range->first,
                                                    lcfg.range->second)
                                  : BinScheme::bins(lcfg.n_bins);
    const Histogram hist = histogram(report.xstar.scores, scheme);
    io::write_histogram_csv(hist, join(dir, "score_hist.csv"));
    OrderSelection sel = select_order(hist, lcfg);
    io::write_aic_csv(sel, join(dir, "aic.csv"));
    io::write_fit_json(sel.best, join(dir, "fit.json"));
    report.table4 = sel.aic_table;
    report.selected_order = sel.best.order;
    report.fit = std::move(sel.best);
    report.skipped.erase("table4_aic");
    log.mark("lindsey");
  });

  guarded(Stage::tweedie, [&] {
    const double z_sd = reference_sd_override.value_or(sd_of(report.zscores.scores));
    report.correction = correct_scores(report.xstar, report.fit, config.tweedie, z_sd);
    report.table5 = report.correction.summary;
    report.skipped.erase("table5_corrected");

    const auto decomposition =
        decompose_variance(report.table5->sd, z_sd, intermediate_sd > 0 ? intermediate_sd : z_sd);
    report.permanent_share = decomposition.permanent_share;
    report.sd_reduction_vs_intermediate = decomposition.reduction_vs_intermediate;

    const double corrected_mean = report.table5->mean;
    if (have_sample) {
      const double center = mean_of(report.sample.values);
      const double scale = sd_of(report.sample.values);
      report.headline_mean_linear = back_transform_linear(corrected_mean, center, scale);
      report.headline_mean_quantile = back_transform_quantile(corrected_mean, report.sample);
    } else {
      report.headline_mean_linear = corrected_mean;
      report.headline_mean_quantile = corrected_mean;
    }

    io::write_correction_csv(report.correction, join(dir, "corrected.csv"));
    io::write_text(join(dir, "correction_summary.json"),
                   io::correction_summary_json(
                       report.correction, io::BackTransformedMeans{report.headline_mean_linear,
                                                                   report.headline_mean_quantile})
                           .dump(2) +
                       "\n");
    log.mark("tweedie");
  });

  guarded(Stage::figures, [&] {
    report.complete = true;
    emit_figures(report, dir);
    log.mark("figures");
  });

  write_report(report, dir);
  io::write_text(join(dir, "run_log.txt"), log.lines.str());
  return report;
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config) {
  return run_impl(config, false, std::nullopt, std::nullopt);
}

PipelineReport run_step1(const PipelineConfig& config) {
  return run_impl(config, true, std::nullopt, std::nullopt);
}

PipelineReport run_step2(const PipelineConfig& config, std::optional<double> reference_sd) {
  ScoreSet scores = stage(Stage::ingest, [&] {
    try {
      return io::read_scores_csv(config.input_path);
    } catch (const Error&) {
      // fall back to a generic numeric column (e.g. a medians.csv)
      LoadResult loaded = load_samples(config.input_path, config.column, config.delimiter);
      ScoreSet s;
      s.scores = std::move(loaded.sample.values);
      s.provenance = Provenance::posterior_median;
      return s;
    }
  });
  return run_impl(config, false, reference_sd, scores);
}

std::vector<std::string> emit_figures(const PipelineReport& report,
                                      const std::string& output_dir) {
  if (!report.complete)
    throw StageError(Stage::figures, Error(errc::invalid_argument, "report is incomplete"));
  fs::create_directories(output_dir);
  std::vector<std::string> paths;

  // (a) raw-data histogram with a Gaussian-kernel density curve
  {
    const std::string path = join(output_dir, "figure_density.csv");
    std::ostringstream out;
    out << "kind,x,value\n";
    if (report.sample.n() >= 2) {
      const Histogram hist = histogram(report.sample.values, BinScheme::bins(100));
      const double total = static_cast<double>(hist.total_count());
      for (std::size_t k = 0; k < hist.n_bins(); ++k)
        out << "hist," << io::format_double(hist.midpoints[k]) << ','
            << io::format_double(static_cast<double>(hist.counts[k]) / (total * hist.width))
            << '\n';
      const KernelDensity kd = kernel_density(report.sample.values);
      for (std::size_t g = 0; g < kd.grid.size(); ++g)
        out << "kde," << io::format_double(kd.grid[g]) << ','
            << io::format_double(kd.density[g]) << '\n';
    } else {
      // step-2 runs have no raw sample; fall back to the score scale
      const KernelDensity kd = kernel_density(report.zscores.scores);
      for (std::size_t g = 0; g < kd.grid.size(); ++g)
        out << "kde," << io::format_double(kd.grid[g]) << ','
            << io::format_double(kd.density[g]) << '\n';
    }
    io::write_text(path, out.str());
    paths.push_back(path);
  }

  // (b) score histogram with the fitted Poisson-regression curve
  {
    const std::string path = join(output_dir, "figure_fit.csv");
    std::ostringstream out;
    out << "kind,x,value\n";
    const Histogram& hist = report.fit.histogram;
    for (std::size_t k = 0; k < hist.n_bins(); ++k)
      out << "hist," << io::format_double(hist.midpoints[k]) << ',' << hist.counts[k] << '\n';
    for (std::size_t k = 0; k < hist.n_bins(); ++k)
      out << "fitted," << io::format_double(hist.midpoints[k]) << ','
          << io::format_double(std::exp(report.fit.eta(hist.midpoints[k]))) << '\n';
    const double lo = hist.lo(), hi = hist.hi();
    for (int g = 0; g < 256; ++g) {
      const double x = lo + (hi - lo) * static_cast<double>(g) / 255.0;
      out << "curve," << io::format_double(x) << ','
          << io::format_double(std::exp(report.fit.eta(x))) << '\n';
    }
    io::write_text(path, out.str());
    paths.push_back(path);
  }

  // (c) original vs corrected scores on a shared bin scheme
  {
    const std::string path = join(output_dir, "figure_overlay.csv");
    const Histogram orig = histogram(report.xstar.scores, report.display_hist);
    Histogram corr = histogram(report.correction.corrected_means,
                               BinScheme::width(orig.width, orig.lo(), orig.hi()));
    std::ostringstream out;
    out << "midpoint,count_original,count_corrected\n";
    for (std::size_t k = 0; k < orig.n_bins(); ++k)
      out << io::format_double(orig.midpoints[k]) << ',' << orig.counts[k] << ','
          << corr.counts[k] << '\n';
    io::write_text(path, out.str());
    paths.push_back(path);
  }
  return paths;
}

PipelineReport load_report_data(const std::string& run_dir) {
  PipelineReport report;
  std::ifstream in(join(run_dir, "report.json"));
  if (!in) throw Error(errc::missing_file, "no report.json in " + run_dir);
  const nlohmann::json j = nlohmann::json::parse(in);
  report.config_echo = j.at("config");
  const PipelineConfig config = config_from_json(report.config_echo);
  report.display_hist = config.display_hist;

  if (fs::exists(join(run_dir, "sample.csv"))) {
    LoadResult loaded = load_samples(join(run_dir, "sample.csv"), "value");
    report.sample = std::move(loaded.sample);
  }
  report.zscores = io::read_scores_csv(join(run_dir, "scores.csv"));
  report.xstar = io::read_scores_csv(join(run_dir, "standardized_scores.csv"));
  report.fit = io::read_fit_json(join(run_dir, "fit.json"));
  report.correction =
      correct_scores(report.xstar, report.fit, config.tweedie, sd_of(report.zscores.scores));
  report.complete = j.at("complete").get<bool>();
  return report;
}

}  // namespace tshrink
