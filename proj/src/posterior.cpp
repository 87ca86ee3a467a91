#include "tshrink/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "tshrink/kernels.hpp"
#include "tshrink/rng.hpp"

namespace tshrink {
namespace {

constexpr std::uint64_t kUnitDomain = 0x756e6974;    // "unit"
constexpr std::uint64_t kGlobalDomain = 0x676c6f62;  // "glob"

double draw_gamma(Xoshiro256pp& rng, double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

double draw_normal(Xoshiro256pp& rng, double mean, double sd) {
  std::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

double draw_uniform(Xoshiro256pp& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

// Slice sampler (stepping out + shrinkage) on a 1-d log density.
template <typename LogDensity>
double slice_sample(Xoshiro256pp& rng, double x0, double width, const LogDensity& logf) {
  const double fx0 = logf(x0);
  const double log_level = fx0 + std::log(1.0 - draw_uniform(rng));
  double lo = x0 - width * draw_uniform(rng);
  double hi = lo + width;
  for (int step = 0; step < 100 && logf(lo) > log_level; ++step) lo -= width;
  for (int step = 0; step < 100 && logf(hi) > log_level; ++step) hi += width;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double x = lo + draw_uniform(rng) * (hi - lo);
    if (logf(x) > log_level) return x;
    (x < x0 ? lo : hi) = x;
  }
  return x0;
}

int thread_cap() {
  if (const char* env = std::getenv("TWEEDIE_SHRINK_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) return static_cast<int>(cap);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct ChainResult {
  std::vector<double> mu_rowmajor;  // kept x n
  std::vector<double> sigma, mu0, tau0;
};

ChainResult run_chain(std::span<const double> y, std::span<const std::size_t> stable_order,
                      std::span<const std::size_t> rank_of, const ModelConfig& cfg, int chain,
                      double init_sigma, double init_mu0, double init_tau0) {
  const std::size_t n = y.size();
  const std::size_t kept = static_cast<std::size_t>(cfg.kept_per_chain());
  ChainResult out;
  out.mu_rowmajor.resize(kept * n);
  out.sigma.resize(kept);
  out.mu0.resize(kept);
  out.tau0.resize(kept);

  std::vector<Xoshiro256pp> unit_rng(n);
  for (std::size_t i = 0; i < n; ++i) {
    unit_rng[i] = Xoshiro256pp(
        stream_seed(cfg.seed, kUnitDomain + static_cast<std::uint64_t>(chain) * 0x10001ULL,
                    static_cast<std::uint64_t>(rank_of[i])));
  }
  Xoshiro256pp global_rng(
      stream_seed(cfg.seed, kGlobalDomain + static_cast<std::uint64_t>(chain) * 0x10001ULL, 0));

  std::vector<double> mu(y.begin(), y.end());
  std::vector<double> w(n, 1.0);
  double sigma2 = cfg.fixed_sigma ? *cfg.fixed_sigma * *cfg.fixed_sigma : init_sigma * init_sigma;
  double mu0 = cfg.fixed_mu0.value_or(init_mu0 + 0.1 * static_cast<double>(chain) * init_sigma);
  double tau0 = cfg.fixed_tau0.value_or(init_tau0);

  const double prior_loc_prec = 1.0 / cfg.hyper_loc_var;
  const double prior_loc_mean = cfg.hyper_loc_mean;
  const double nd = static_cast<double>(n);

  // Collapsed log-conditional of log(tau0) given (w, sigma2, mu0) with the
  // unit locations integrated out: y_i | . ~ N(mu0, sigma2/w_i + 1/tau0).
  // Summation follows the rank order so it is permutation-invariant.
  const auto log_tau0_collapsed = [&](double theta) {
    const double inv_tau0 = std::exp(-theta);
    double acc = cfg.hyper_prec_shape * theta - cfg.hyper_prec_rate * std::exp(theta);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t i = stable_order[r];
      const double v = sigma2 / w[i] + inv_tau0;
      const double d = y[i] - mu0;
      acc -= 0.5 * (std::log(v) + d * d / v);
    }
    return acc;
  };

  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    // mixing weights
    if (!cfg.gaussian_likelihood) {
      for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - mu[i];
        w[i] = draw_gamma(unit_rng[i], (cfg.nu + 1.0) / 2.0, (cfg.nu + r * r / sigma2) / 2.0);
      }
    }

    // blocked (tau0, mu) update: tau0 from its location-collapsed
    // conditional, then the locations given the fresh tau0. The per-site
    // tau0 conditional mixes far too slowly when the between-unit variance
    // is near zero (log tau0 degenerates into a random walk).
    if (!cfg.fixed_tau0)
      tau0 = std::exp(slice_sample(global_rng, std::log(tau0), 1.0, log_tau0_collapsed));

    for (std::size_t i = 0; i < n; ++i) {
      const double like_prec = w[i] / sigma2;
      const double prec = like_prec + tau0;
      const double mean = (like_prec * y[i] + tau0 * mu0) / prec;
      mu[i] = draw_normal(unit_rng[i], mean, 1.0 / std::sqrt(prec));
    }

    // remaining globals, reductions in rank order
    if (!cfg.fixed_sigma) {
      double ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = stable_order[r];
        const double d = y[i] - mu[i];
        ss += w[i] * d * d;
      }
      sigma2 = (ss / 2.0) / draw_gamma(global_rng, nd / 2.0, 1.0);
    }
    if (!cfg.fixed_mu0) {
      double sum_mu = 0.0;
      for (std::size_t r = 0; r < n; ++r) sum_mu += mu[stable_order[r]];
      const double prec = nd * tau0 + prior_loc_prec;
      mu0 = draw_normal(global_rng, (tau0 * sum_mu + prior_loc_prec * prior_loc_mean) / prec,
                        1.0 / std::sqrt(prec));
    }

    if (iter >= cfg.n_burn) {
      const std::size_t k = static_cast<std::size_t>(iter - cfg.n_burn);
      std::copy(mu.begin(), mu.end(), out.mu_rowmajor.begin() + k * n);
      out.sigma[k] = std::sqrt(sigma2);
      out.mu0[k] = mu0;
      out.tau0[k] = tau0;
    }
  }
  return out;
}

// row-major (kept x n) chain block -> column-major pooled matrix, tiled to
// keep both sides cache-friendly
void transpose_into(const std::vector<double>& rowmajor, std::size_t kept, std::size_t n,
                    DrawMatrix& dst, std::size_t row_offset) {
  constexpr std::size_t tile = 64;
  for (std::size_t r0 = 0; r0 < kept; r0 += tile) {
    const std::size_t r1 = std::min(kept, r0 + tile);
    for (std::size_t c0 = 0; c0 < n; c0 += tile) {
      const std::size_t c1 = std::min(n, c0 + tile);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c)
          dst.at(row_offset + r, c) = rowmajor[r * n + c];
    }
  }
}

struct SeqView {
  std::span<const double> data;
};

// split R-hat over a set of sequences (chain halves)
double split_rhat(std::span<const SeqView> seqs) {
  const std::size_t m = seqs.size();
  const double L = static_cast<double>(seqs[0].data.size());
  double grand = 0.0, w = 0.0, b = 0.0;
  std::vector<double> means(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = kernels::sum(seqs[j].data) / L;
    grand += means[j];
  }
  grand /= static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (double v : seqs[j].data) {
      const double d = v - means[j];
      acc += d * d;
    }
    w += acc / (L - 1.0);
    b += (means[j] - grand) * (means[j] - grand);
  }
  w /= static_cast<double>(m);
  b *= L / static_cast<double>(m - 1);
  if (!(w > 0.0)) return 1.0;  // constant draws
  const double var_plus = (L - 1.0) / L * w + b / L;
  return std::sqrt(var_plus / w);
}

// effective sample size via Geyer's initial monotone positive sequence
double ess_geyer(std::span<const SeqView> seqs, std::vector<double>& scratch) {
  const std::size_t m = seqs.size();
  const std::size_t L = seqs[0].data.size();
  const double dl = static_cast<double>(L);

  scratch.resize(m * L);
  std::vector<double> means(m), vars(m);
  double w = 0.0, grand = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = kernels::sum(seqs[j].data) / dl;
    grand += means[j];
    double* dest = &scratch[j * L];
    for (std::size_t i = 0; i < L; ++i) dest[i] = seqs[j].data[i] - means[j];
    double acc = 0.0;
    for (std::size_t i = 0; i < L; ++i) acc += dest[i] * dest[i];
    vars[j] = acc / (dl - 1.0);
    w += vars[j];
  }
  w /= static_cast<double>(m);
  grand /= static_cast<double>(m);
  if (!(w > 0.0)) return static_cast<double>(m) * dl;
  double b = 0.0;
  for (std::size_t j = 0; j < m; ++j) b += (means[j] - grand) * (means[j] - grand);
  b *= dl / std::max(1.0, static_cast<double>(m - 1));
  const double var_plus = (dl - 1.0) / dl * w + (m > 1 ? b / dl : 0.0);

  const std::size_t max_lag = std::min(L - 1, std::size_t{1000});
  auto rho_at = [&](std::size_t t) {
    double acov = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double* x = &scratch[j * L];
      acov += kernels::dot({x, L - t}, {x + t, L - t}) / dl;
    }
    acov /= static_cast<double>(m);
    return 1.0 - (w - acov) / var_plus;
  };

  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t + 1 <= max_lag; t += 2) {
    double pair = rho_at(t) + rho_at(t + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);  // monotone envelope
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return static_cast<double>(m) * dl / tau;
}

}  // namespace

void ModelConfig::validate() const {
  if (!(nu > 0.0)) throw Error(errc::invalid_config, "nu must be positive");
  if (n_burn < 0 || n_iter <= n_burn)
    throw Error(errc::invalid_config, "need n_burn < n_iter");
  if (n_chains < 1) throw Error(errc::invalid_config, "need at least one chain");
  if (!(hyper_loc_var > 0.0)) throw Error(errc::invalid_config, "hyper_loc_var must be positive");
  if (!(hyper_prec_shape > 0.0) || !(hyper_prec_rate > 0.0))
    throw Error(errc::invalid_config, "Gamma hyperprior parameters must be positive");
  if (fixed_sigma && !(*fixed_sigma > 0.0))
    throw Error(errc::invalid_config, "fixed_sigma must be positive");
  if (fixed_tau0 && !(*fixed_tau0 > 0.0))
    throw Error(errc::invalid_config, "fixed_tau0 must be positive");
}

PosteriorDraws run_mcmc(const ScoreSet& scores, const ModelConfig& config) {
  config.validate();
  const auto& y = scores.scores;
  const std::size_t n = y.size();
  if (n < 2) throw Error(errc::empty_input, "run_mcmc requires at least 2 scores");
  for (double v : y)
    if (!std::isfinite(v)) throw Error(errc::non_finite_value, "non-finite score");

  // permutation-stable unit ranks (improper-posterior guard: the scale prior
  // needs at least two distinct values)
  std::vector<std::size_t> stable_order(n);
  std::iota(stable_order.begin(), stable_order.end(), 0);
  std::sort(stable_order.begin(), stable_order.end(), [&](std::size_t a, std::size_t b) {
    return y[a] != y[b] ? y[a] < y[b] : a < b;
  });
  if (y[stable_order.front()] == y[stable_order.back()])
    throw Error(errc::degenerate_scale, "run_mcmc requires at least 2 distinct scores");
  std::vector<std::size_t> rank_of(n);
  for (std::size_t r = 0; r < n; ++r) rank_of[stable_order[r]] = r;

  // deterministic initialization
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const double init_sigma = robust_scale(y).s_r;
  const double init_mu0 = quantile_sorted(sorted, 0.5);
  const double var_y = sd_of(y) * sd_of(y);
  const double init_tau0 = var_y > 0.0 ? 1.0 / var_y : 1.0;

  const std::size_t kept = static_cast<std::size_t>(config.kept_per_chain());
  const std::size_t chains = static_cast<std::size_t>(config.n_chains);

  PosteriorDraws draws;
  draws.config = config;
  draws.mu = DrawMatrix(kept * chains, n);
  draws.sigma.resize(kept * chains);
  draws.mu0.resize(kept * chains);
  draws.tau0.resize(kept * chains);
  draws.chain_ids.resize(kept * chains);

  std::vector<ChainResult> results(chains);
  const int cap = std::min<int>(thread_cap(), config.n_chains);
  if (cap <= 1 || chains == 1) {
    for (std::size_t c = 0; c < chains; ++c)
      results[c] = run_chain(y, stable_order, rank_of, config, static_cast<int>(c), init_sigma,
                             init_mu0, init_tau0);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t c = 0; c < chains; ++c) {
      workers.emplace_back([&, c] {
        results[c] = run_chain(y, stable_order, rank_of, config, static_cast<int>(c), init_sigma,
                               init_mu0, init_tau0);
      });
      if (workers.size() == static_cast<std::size_t>(cap) || c + 1 == chains) {
        for (auto& t : workers) t.join();
        workers.clear();
      }
    }
  }

  for (std::size_t c = 0; c < chains; ++c) {
    const std::size_t offset = c * kept;
    transpose_into(results[c].mu_rowmajor, kept, n, draws.mu, offset);
    std::copy(results[c].sigma.begin(), results[c].sigma.end(), draws.sigma.begin() + offset);
    std::copy(results[c].mu0.begin(), results[c].mu0.end(), draws.mu0.begin() + offset);
    std::copy(results[c].tau0.begin(), results[c].tau0.end(), draws.tau0.begin() + offset);
    std::fill(draws.chain_ids.begin() + offset, draws.chain_ids.begin() + offset + kept,
              static_cast<int>(c));
    results[c] = ChainResult{};  // release chain buffer early
  }
  return draws;
}

double posterior_exceedance(std::span<const double> draws, double m) {
  if (draws.empty()) throw Error(errc::empty_input, "posterior_exceedance on empty draws");
  std::size_t above = 0;
  for (double v : draws)
    if (v > m) ++above;
  return static_cast<double>(above) / static_cast<double>(draws.size());
}

double posterior_median(std::span<const double> draws) {
  if (draws.empty()) throw Error(errc::empty_input, "posterior_median on empty draws");
  std::vector<double> tmp(draws.begin(), draws.end());
  const std::size_t n = tmp.size();
  const std::size_t lo = (n - 1) / 2;
  std::nth_element(tmp.begin(), tmp.begin() + lo, tmp.end());
  const double a = tmp[lo];
  if (n % 2 == 1) return a;
  const double b = *std::min_element(tmp.begin() + lo + 1, tmp.end());
  return a + 0.5 * (b - a);
}

PosteriorSummary summarize(const PosteriorDraws& draws) {
  const std::size_t total = draws.kept_total();
  if (total < 100) throw Error(errc::empty_input, "summarize needs at least 100 kept draws");
  const std::size_t n = draws.n_units();
  const std::size_t per_chain = draws.kept_per_chain();
  const std::size_t half = per_chain / 2;
  const std::size_t chains = static_cast<std::size_t>(draws.config.n_chains);
  if (half < 2) throw Error(errc::invalid_config, "too few kept draws per chain for diagnostics");

  PosteriorSummary s;
  s.medians.resize(n);
  s.means.resize(n);
  s.sds.resize(n);

  auto halves_of = [&](std::span<const double> series, std::vector<SeqView>& seqs) {
    seqs.clear();
    for (std::size_t c = 0; c < chains; ++c) {
      const double* base = series.data() + c * per_chain;
      seqs.push_back({{base, half}});
      seqs.push_back({{base + half, half}});
    }
  };

  double rhat_worst = 0.0;
  double ess_min = std::numeric_limits<double>::infinity();
  std::vector<SeqView> seqs;
  std::vector<double> scratch;
  auto account = [&](std::span<const double> series) {
    halves_of(series, seqs);
    rhat_worst = std::max(rhat_worst, split_rhat(seqs));
    ess_min = std::min(ess_min, ess_geyer(seqs, scratch));
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto col = draws.unit_draws(i);
    s.medians[i] = posterior_median(col);
    const double m = kernels::sum(col) / static_cast<double>(total);
    s.means[i] = m;
    double acc = 0.0;
    for (double v : col) {
      const double d = v - m;
      acc += d * d;
    }
    s.sds[i] = total > 1 ? std::sqrt(acc / static_cast<double>(total - 1)) : 0.0;
    account(col);
  }
  account(draws.sigma);
  account(draws.mu0);
  account(draws.tau0);

  s.rhat_worst = rhat_worst;
  s.ess_min = ess_min;
  return s;
}

}  // namespace tshrink
