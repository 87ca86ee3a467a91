#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tshrink/common.hpp"
#include "tshrink/transform.hpp"

namespace tshrink {

/// Settings for the hierarchical Student-t model
///   y_i ~ t_nu(mu_i, sigma),  mu_i ~ N(mu0, 1/tau0),
///   p(sigma) ~ 1/sigma,       mu0 ~ N(hyper_loc_mean, hyper_loc_var),
///   tau0 ~ Gamma(hyper_prec_shape, hyper_prec_rate).
/// The second argument of the location prior is a precision, following the
/// BUGS convention, which keeps every full conditional in standard form.
struct ModelConfig {
  double nu = 4.0;
  int n_iter = 11000;
  int n_burn = 1000;
  int n_chains = 2;
  std::uint64_t seed = 0;
  double hyper_loc_mean = 0.0;
  double hyper_loc_var = 1e6;
  double hyper_prec_shape = 0.01;
  double hyper_prec_rate = 0.01;

  // test hooks
  bool gaussian_likelihood = false;  // nu -> inf limit: mixing weights pinned at 1
  std::optional<double> fixed_sigma;
  std::optional<double> fixed_mu0;
  std::optional<double> fixed_tau0;

  void validate() const;
  int kept_per_chain() const { return n_iter - n_burn; }
};

/// Column-major draw matrix: rows are kept iterations (chains stacked),
/// columns are units, so one unit's draws are contiguous.
class DrawMatrix {
public:
  DrawMatrix() = default;
  DrawMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double at(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }
  std::span<const double> column(std::size_t c) const { return {&data_[c * rows_], rows_}; }
  std::span<double> column(std::size_t c) { return {&data_[c * rows_], rows_}; }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct PosteriorDraws {
  DrawMatrix mu;               // kept_total x n
  std::vector<double> sigma;   // kept_total
  std::vector<double> mu0;     // kept_total
  std::vector<double> tau0;    // kept_total
  std::vector<int> chain_ids;  // kept_total
  ModelConfig config;

  std::size_t n_units() const { return mu.cols(); }
  std::size_t kept_total() const { return mu.rows(); }
  std::size_t kept_per_chain() const {
    return kept_total() / static_cast<std::size_t>(config.n_chains);
  }
  std::span<const double> unit_draws(std::size_t i) const { return mu.column(i); }
};

struct PosteriorSummary {
  std::vector<double> medians;
  std::vector<double> means;
  std::vector<double> sds;
  double rhat_worst = 0.0;
  double ess_min = 0.0;
};

/// Gibbs sampler through the scale-mixture representation of the t
/// likelihood. Deterministic given (scores, config): every (chain, unit)
/// pair owns an independent RNG substream keyed by the unit's rank in the
/// sorted input, and global reductions accumulate in that rank order, so
/// permuting the inputs permutes the outputs (distinct values; tied values
/// swap streams).
PosteriorDraws run_mcmc(const ScoreSet& scores, const ModelConfig& config);

/// Fraction of draws strictly greater than m.
double posterior_exceedance(std::span<const double> draws, double m);

/// Sample median of the kept draws (type-7 interpolation for even counts).
double posterior_median(std::span<const double> draws);

/// Per-unit medians/means/sds pooled across chains, plus worst split R-hat
/// and smallest effective sample size over all scalar parameters.
PosteriorSummary summarize(const PosteriorDraws& draws);

}  // namespace tshrink
