#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tshrink/common.hpp"
#include "tshrink/ingest.hpp"

namespace tshrink {

struct LindseyConfig {
  int n_bins = 100;
  std::vector<int> orders = {2, 3, 4, 5, 6, 7};
  std::optional<std::pair<double, double>> range;  // default: data min/max
  double irls_tol = 1e-10;
  int irls_max_iter = 100;
  // basis override, mainly for the affine-equivalence tests
  std::optional<double> basis_center;
  std::optional<double> basis_halfwidth;

  void validate() const;
};

struct LogDensityDerivs {
  double l1 = 0.0;
  double l2 = 0.0;
};

/// Polynomial log-intensity fitted to histogram counts by Poisson IRLS.
/// Coefficients live on the affine basis t = (z - basis_center) /
/// basis_halfwidth, which keeps the normal equations well conditioned up to
/// order 7; derivatives are mapped back through the chain rule.
struct LogDensityFit {
  std::vector<double> coeffs;  // beta_0 .. beta_J on the scaled basis
  double basis_center = 0.0;
  double basis_halfwidth = 1.0;
  int order = 0;
  double log_lik = 0.0;
  double aic = 0.0;
  double deviance = 0.0;
  Histogram histogram;
  bool converged = false;

  /// Log-intensity at z (natural scale).
  double eta(double z) const;
  /// Coefficients of dP/dt and d2P/dt2 on the scaled basis.
  std::vector<double> deriv1_coeffs() const;
  std::vector<double> deriv2_coeffs() const;
};

LogDensityFit fit_poisson_poly(const Histogram& hist, int order, const LindseyConfig& config);

struct OrderSelection {
  LogDensityFit best;
  std::map<int, double> aic_table;
  std::map<int, bool> converged;
};

/// Fits every candidate order and keeps the strictly smallest AIC; exact
/// ties go to the lower order.
OrderSelection select_order(const Histogram& hist, const LindseyConfig& config);

/// Argmin-by-AIC with the lower-order tie rule, on a precomputed table.
int pick_min_aic(const std::map<int, double>& aic_table);

/// (l', l'') of the fitted log-density at z. The additive log-bin-width
/// constant between log-intensity and log-density vanishes under
/// differentiation.
LogDensityDerivs log_density_derivs(const LogDensityFit& fit, double z);

/// Batch variant, kernel-dispatched.
void log_density_derivs(const LogDensityFit& fit, std::span<const double> z,
                        std::span<double> l1, std::span<double> l2);

}  // namespace tshrink
