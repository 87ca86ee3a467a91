#include "tshrink/lindsey.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tshrink/kernels.hpp"

namespace tshrink {
namespace {

// Cholesky solve of a small symmetric positive-definite system (at most
// 8x8 here). Returns false when a pivot collapses, i.e. the design is
// rank deficient.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double diag = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * p + k] * a[j * p + k];
    if (!(diag > 1e-12 * std::abs(a[j * p + j])) || !std::isfinite(diag)) return false;
    const double root = std::sqrt(diag);
    a[j * p + j] = root;
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = v / root;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * p + k] * b[k];
    b[i] = v / a[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < p; ++k) v -= a[k * p + ii] * b[k];
    b[ii] = v / a[ii * p + ii];
  }
  return true;
}

double poisson_deviance(std::span<const double> counts, std::span<const double> mu) {
  double dev = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (!std::isfinite(mu[k]) || mu[k] <= 0.0) return std::numeric_limits<double>::infinity();
    const double c = counts[k];
    const double term = c > 0.0 ? c * std::log(c / mu[k]) : 0.0;
    dev += 2.0 * (term - (c - mu[k]));
  }
  return dev;
}

}  // namespace

void LindseyConfig::validate() const {
  if (orders.empty()) throw Error(errc::invalid_config, "no candidate orders");
  int max_order = 0;
  for (int j : orders) {
    if (j < 1) throw Error(errc::invalid_config, "polynomial order must be >= 1");
    max_order = std::max(max_order, j);
  }
  if (n_bins < max_order + 2)
    throw Error(errc::invalid_config, "n_bins must be at least max(orders) + 2");
  if (!(irls_tol > 0.0) || irls_max_iter < 1)
    throw Error(errc::invalid_config, "bad IRLS settings");
}

double LogDensityFit::eta(double z) const {
  const double t = (z - basis_center) / basis_halfwidth;
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) acc = std::fma(acc, t, coeffs[k]);
  return acc;
}

std::vector<double> LogDensityFit::deriv1_coeffs() const {
  std::vector<double> d;
  for (std::size_t j = 1; j < coeffs.size(); ++j)
    d.push_back(static_cast<double>(j) * coeffs[j]);
  return d;
}

std::vector<double> LogDensityFit::deriv2_coeffs() const {
  std::vector<double> d;
  for (std::size_t j = 2; j < coeffs.size(); ++j)
    d.push_back(static_cast<double>(j) * static_cast<double>(j - 1) * coeffs[j]);
  return d;
}

LogDensityFit fit_poisson_poly(const Histogram& hist, int order, const LindseyConfig& config) {
  const std::size_t K = hist.n_bins();
  const std::size_t p = static_cast<std::size_t>(order) + 1;
  if (order < 1) throw Error(errc::invalid_config, "order must be >= 1");
  if (K < p) throw Error(errc::invalid_config, "need at least J + 1 bins");
  if (hist.total_count() == 0) throw Error(errc::empty_input, "histogram has no counts");

  LogDensityFit fit;
  fit.order = order;
  fit.histogram = hist;
  fit.basis_center = config.basis_center.value_or((hist.lo() + hist.hi()) / 2.0);
  fit.basis_halfwidth = config.basis_halfwidth.value_or((hist.hi() - hist.lo()) / 2.0);
  if (!(fit.basis_halfwidth > 0.0)) throw Error(errc::invalid_config, "basis halfwidth <= 0");

  // design matrix: powers of the scaled midpoints
  std::vector<double> X(K * p);
  for (std::size_t k = 0; k < K; ++k) {
    const double t = (hist.midpoints[k] - fit.basis_center) / fit.basis_halfwidth;
    double pw = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      X[k * p + j] = pw;
      pw *= t;
    }
  }

  std::vector<double> counts(K);
  for (std::size_t k = 0; k < K; ++k) counts[k] = static_cast<double>(hist.counts[k]);
  const double mean_count = kernels::sum(counts) / static_cast<double>(K);

  std::vector<double> beta(p, 0.0);
  beta[0] = std::log(mean_count + 0.5);

  std::vector<double> eta(K), mu(K);
  auto predict = [&](const std::vector<double>& b) {
    for (std::size_t k = 0; k < K; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < p; ++j) acc += b[j] * X[k * p + j];
      eta[k] = acc;
      mu[k] = std::exp(acc);
    }
  };

  predict(beta);
  double dev = poisson_deviance(counts, mu);

  std::vector<double> A(p * p), rhs(p), trial(p);
  fit.converged = false;
  for (int iter = 0; iter < config.irls_max_iter; ++iter) {
    // weighted normal equations: A = X'WX, rhs = X'W zwork, W = diag(mu)
    std::fill(A.begin(), A.end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      const double w = mu[k];
      const double zwork = eta[k] + (counts[k] - mu[k]) / mu[k];
      const double* row = &X[k * p];
      for (std::size_t i = 0; i < p; ++i) {
        const double wxi = w * row[i];
        rhs[i] += wxi * zwork;
        for (std::size_t j = 0; j <= i; ++j) A[i * p + j] += wxi * row[j];
      }
    }
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) A[i * p + j] = A[j * p + i];

    std::vector<double> chol = A;
    std::vector<double> solved = rhs;
    if (!solve_spd(chol, solved, p))
      throw Error(errc::rank_deficient,
                  "rank-deficient Poisson design (histogram too coarse or degenerate)");

    // step halving on deviance increase
    double step = 1.0;
    double dev_new = std::numeric_limits<double>::infinity();
    for (int half = 0; half < 40; ++half) {
      for (std::size_t j = 0; j < p; ++j)
        trial[j] = beta[j] + step * (solved[j] - beta[j]);
      predict(trial);
      dev_new = poisson_deviance(counts, mu);
      if (dev_new <= dev + 1e-12) break;
      step *= 0.5;
    }
    if (!(dev_new <= dev + 1e-12)) {
      predict(beta);  // restore
      break;
    }
    beta = trial;
    const double drop = dev - dev_new;
    dev = dev_new;
    if (drop < config.irls_tol) {
      fit.converged = true;
      break;
    }
  }

  fit.coeffs = beta;
  predict(beta);
  fit.deviance = dev;
  double ll = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    ll += counts[k] * eta[k] - mu[k] - std::lgamma(counts[k] + 1.0);
  fit.log_lik = ll;
  fit.aic = 2.0 * static_cast<double>(p) - 2.0 * ll;
  return fit;
}

int pick_min_aic(const std::map<int, double>& aic_table) {
  if (aic_table.empty()) throw Error(errc::empty_input, "empty AIC table");
  int best = aic_table.begin()->first;
  double best_aic = aic_table.begin()->second;
  for (const auto& [order, aic] : aic_table) {
    if (aic < best_aic) {  // ties keep the lower order (map is ordered)
      best = order;
      best_aic = aic;
    }
  }
  return best;
}

OrderSelection select_order(const Histogram& hist, const LindseyConfig& config) {
  config.validate();
  OrderSelection sel;
  std::map<int, LogDensityFit> fits;
  for (int order : config.orders) {
    try {
      LogDensityFit fit = fit_poisson_poly(hist, order, config);
      sel.aic_table[order] = fit.aic;
      sel.converged[order] = fit.converged;
      if (fit.converged) fits.emplace(order, std::move(fit));
    } catch (const Error&) {
      sel.converged[order] = false;
    }
  }
  if (fits.empty())
    throw Error(errc::non_convergence, "no candidate Poisson fit converged");

  std::map<int, double> usable;
  for (const auto& [order, fit] : fits) usable[order] = fit.aic;
  sel.best = fits.at(pick_min_aic(usable));
  return sel;
}

LogDensityDerivs log_density_derivs(const LogDensityFit& fit, double z) {
  LogDensityDerivs out;
  log_density_derivs(fit, std::span<const double>(&z, 1), std::span<double>(&out.l1, 1),
                     std::span<double>(&out.l2, 1));
  return out;
}

void log_density_derivs(const LogDensityFit& fit, std::span<const double> z,
                        std::span<double> l1, std::span<double> l2) {
  if (!fit.converged)
    throw Error(errc::non_convergence, "derivatives requested from a non-converged fit");
  const auto c1 = fit.deriv1_coeffs();
  const auto c2 = fit.deriv2_coeffs();
  kernels::poly_derivs(z, c1, c2, fit.basis_center, fit.basis_halfwidth, l1, l2);
}

}  // namespace tshrink
