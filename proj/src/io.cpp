#include "tshrink/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tshrink::io {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw Error(errc::io_failure, "cannot write " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(errc::io_failure, "double formatting failed");
  return std::string(buf, ptr);
}

void write_text(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

void write_sample_csv(const Sample& sample, const std::string& path) {
  auto out = open_out(path);
  out << "index,value\n";
  for (std::size_t i = 0; i < sample.n(); ++i)
    out << i << ',' << format_double(sample.values[i]) << '\n';
}

void write_histogram_csv(const Histogram& hist, const std::string& path) {
  auto out = open_out(path);
  out << "midpoint,count\n";
  for (std::size_t k = 0; k < hist.n_bins(); ++k)
    out << format_double(hist.midpoints[k]) << ',' << hist.counts[k] << '\n';
}

void write_scores_csv(const ScoreSet& scores, const std::string& path) {
  auto out = open_out(path);
  out << "index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    out << i << ',' << format_double(scores.scores[i]) << '\n';

  nlohmann::json meta{{"center", scores.center},
                      {"scale", scores.scale},
                      {"provenance", provenance_name(scores.provenance)}};
  write_text(path + ".meta.json", meta.dump(2) + "\n");
}

ScoreSet read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::missing_file, "cannot open " + path);
  ScoreSet scores;
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "index,score")
    throw Error(errc::missing_column, path + " is not an index,score file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(errc::io_failure, "bad score row in " + path);
    scores.scores.push_back(std::stod(line.substr(comma + 1)));
  }
  std::ifstream meta_in(path + ".meta.json");
  if (meta_in) {
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    scores.center = meta.at("center").get<double>();
    scores.scale = meta.at("scale").get<double>();
    scores.provenance = provenance_from_name(meta.at("provenance").get<std::string>());
  }
  return scores;
}

void write_posterior_summary_csv(const PosteriorSummary& summary, const std::string& path) {
  auto out = open_out(path);
  out << "index,median,mean,sd\n";
  for (std::size_t i = 0; i < summary.medians.size(); ++i) {
    out << i << ',' << format_double(summary.medians[i]) << ',' << format_double(summary.means[i])
        << ',' << format_double(summary.sds[i]) << '\n';
  }
}

void write_trace_csv(const PosteriorDraws& draws, const std::string& path, bool include_units) {
  auto out = open_out(path);
  out << "parameter,chain,iteration,value\n";
  const std::size_t per_chain = draws.kept_per_chain();
  auto emit = [&](const std::string& name, std::span<const double> series) {
    for (std::size_t k = 0; k < series.size(); ++k)
      out << name << ',' << draws.chain_ids[k] << ',' << k % per_chain << ','
          << format_double(series[k]) << '\n';
  };
  emit("sigma", draws.sigma);
  emit("mu0", draws.mu0);
  emit("tau0", draws.tau0);
  if (include_units) {
    for (std::size_t i = 0; i < draws.n_units(); ++i)
      emit("mu[" + std::to_string(i) + "]", draws.unit_draws(i));
  }
}

void write_aic_csv(const OrderSelection& selection, const std::string& path) {
  auto out = open_out(path);
  out << "order,aic,converged\n";
  for (const auto& [order, converged] : selection.converged) {
    out << order << ',';
    const auto it = selection.aic_table.find(order);
    out << (it != selection.aic_table.end() ? format_double(it->second) : "nan");
    out << ',' << (converged ? 1 : 0) << '\n';
  }
}

nlohmann::json fit_to_json(const LogDensityFit& fit) {
  return nlohmann::json{{"coeffs", fit.coeffs},
                        {"basis_center", fit.basis_center},
                        {"basis_halfwidth", fit.basis_halfwidth},
                        {"order", fit.order},
                        {"log_lik", fit.log_lik},
                        {"aic", fit.aic},
                        {"deviance", fit.deviance},
                        {"converged", fit.converged},
                        {"histogram",
                         {{"edges", fit.histogram.edges},
                          {"counts", fit.histogram.counts},
                          {"width", fit.histogram.width},
                          {"out_of_range", fit.histogram.out_of_range}}}};
}

LogDensityFit fit_from_json(const nlohmann::json& j) {
  LogDensityFit fit;
  fit.coeffs = j.at("coeffs").get<std::vector<double>>();
  fit.basis_center = j.at("basis_center").get<double>();
  fit.basis_halfwidth = j.at("basis_halfwidth").get<double>();
  fit.order = j.at("order").get<int>();
  fit.log_lik = j.at("log_lik").get<double>();
  fit.aic = j.at("aic").get<double>();
  fit.deviance = j.at("deviance").get<double>();
  fit.converged = j.at("converged").get<bool>();
  const auto& h = j.at("histogram");
  fit.histogram.edges = h.at("edges").get<std::vector<double>>();
  fit.histogram.counts = h.at("counts").get<std::vector<std::int64_t>>();
  fit.histogram.width = h.at("width").get<double>();
  fit.histogram.out_of_range = h.at("out_of_range").get<std::size_t>();
  fit.histogram.midpoints.resize(fit.histogram.counts.size());
  for (std::size_t k = 0; k < fit.histogram.midpoints.size(); ++k)
    fit.histogram.midpoints[k] = (fit.histogram.edges[k] + fit.histogram.edges[k + 1]) / 2;
  return fit;
}

void write_fit_json(const LogDensityFit& fit, const std::string& path) {
  write_text(path, fit_to_json(fit).dump(2) + "\n");
}

LogDensityFit read_fit_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::missing_file, "cannot open " + path);
  return fit_from_json(nlohmann::json::parse(in));
}

void write_correction_csv(const CorrectionResult& result, const std::string& path) {
  auto out = open_out(path);
  out << "index,input_score,corrected_mean,corrected_var,clamped,extrapolated\n";
  for (std::size_t i = 0; i < result.corrected_means.size(); ++i) {
    out << i << ',' << format_double(result.input_scores.scores[i]) << ','
        << format_double(result.corrected_means[i]) << ','
        << format_double(result.corrected_vars[i]) << ',' << int(result.clamped[i]) << ','
        << int(result.extrapolated[i]) << '\n';
  }
}

nlohmann::json summary_stats_to_json(const SummaryStats& stats) {
  return nlohmann::json{{"min", stats.min}, {"q1", stats.q1},   {"mean", stats.mean},
                        {"q3", stats.q3},   {"max", stats.max}, {"sd", stats.sd}};
}

nlohmann::json correction_summary_json(const CorrectionResult& result,
                                       const std::optional<BackTransformedMeans>& headline) {
  std::size_t n_clamped = 0, n_extrapolated = 0;
  for (auto f : result.clamped) n_clamped += f;
  for (auto f : result.extrapolated) n_extrapolated += f;
  nlohmann::json j{{"summary", summary_stats_to_json(result.summary)},
                   {"permanent_share", result.permanent_share},
                   {"sd_reduction_vs_input", result.sd_reduction_vs_input},
                   {"n_clamped", n_clamped},
                   {"n_extrapolated", n_extrapolated},
                   {"input_center", result.input_scores.center},
                   {"input_scale", result.input_scores.scale}};
  if (headline) {
    j["back_transformed_mean"] = {{"linear", headline->linear},
                                  {"quantile", headline->quantile}};
  }
  return j;
}

}  // namespace tshrink::io
