#include <doctest.h>

#include <cmath>
#include <random>

#include "testutil.hpp"
#include "tshrink/tweedie.hpp"

using namespace tshrink;

namespace {

LogDensityFit flat_fit(double level = 1.0, double lo = -3.0, double hi = 3.0) {
  LogDensityFit fit;
  fit.coeffs = {std::log(level)};
  fit.basis_center = (lo + hi) / 2;
  fit.basis_halfwidth = (hi - lo) / 2;
  fit.order = 0;
  fit.converged = true;
  fit.histogram.edges = {lo, hi};
  fit.histogram.midpoints = {(lo + hi) / 2};
  fit.histogram.counts = {1};
  fit.histogram.width = hi - lo;
  return fit;
}

// gaussian marginal N(m, v) as an analytic derivative source
DerivSource gaussian_marginal(double m, double v) {
  return [m, v](double z) { return LogDensityDerivs{-(z - m) / v, -1.0 / v}; };
}

ScoreSet plain_scores(std::vector<double> values) {
  ScoreSet s;
  s.scores = std::move(values);
  s.provenance = Provenance::posterior_median;
  return s;
}

}  // namespace

TEST_CASE("correct_mean leaves z unchanged when the score function vanishes") {
  TweedieConfig cfg;
  CHECK(correct_mean(1.7, LogDensityDerivs{0.0, 0.0}, cfg) == 1.7);
}

TEST_CASE("conjugate closed forms are exact") {
  TweedieConfig cfg;
  cfg.sigma2 = 0.5;
  // marginal N(0,1): tau^2 = 1 - 0.5 = 0.5
  CHECK(correct_mean(2.0, gaussian_marginal(0, 1)(2.0), cfg) == doctest::Approx(1.0).epsilon(1e-15));
  const auto [v, clamped] = correct_variance(2.0, gaussian_marginal(0, 1)(2.0), cfg);
  CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(!clamped);
}

TEST_CASE("exact-density substitution reproduces the conjugate posterior at 1e-12") {
  // y ~ N(mu, s2), mu ~ N(m, t2) -> marginal N(m, s2 + t2)
  const double s2 = 0.7, t2 = 1.3, m = 0.4;
  TweedieConfig cfg;
  cfg.sigma2 = s2;
  const auto marginal = gaussian_marginal(m, s2 + t2);
  for (int g = 0; g <= 100; ++g) {
    const double y = -4.0 + 8.0 * g / 100.0;
    const double post_mean = (t2 * y + s2 * m) / (s2 + t2);
    const double post_var = s2 * t2 / (s2 + t2);
    CHECK(std::abs(correct_mean(y, marginal(y), cfg) - post_mean) <= 1e-12);
    CHECK(std::abs(correct_variance(y, marginal(y), cfg).first - post_var) <= 1e-12);
  }
}

TEST_CASE("correct_variance boundary and clamping") {
  TweedieConfig cfg;
  cfg.sigma2 = 0.5;
  CHECK(correct_variance(0.0, LogDensityDerivs{0.0, 0.0}, cfg).first == 0.5);
  // l2 = -1/sigma2 lands exactly on complete shrinkage
  CHECK(correct_variance(0.0, LogDensityDerivs{0.0, -2.0}, cfg).first == 0.0);
  const auto [v, clamped] = correct_variance(0.0, LogDensityDerivs{0.0, -5.0}, cfg);
  CHECK(v == 0.0);
  CHECK(clamped);
  cfg.clamp_negative_variance = false;
  CHECK(correct_variance(0.0, LogDensityDerivs{0.0, -5.0}, cfg).first < 0.0);
}

TEST_CASE("flat fit is the identity correction") {
  std::mt19937_64 rng(107);
  auto values = testutil::random_vector(rng, 100, -2, 2);
  const auto scores = plain_scores(values);
  TweedieConfig cfg;
  const auto result = correct_scores(scores, flat_fit(), cfg);
  for (std::size_t i = 0; i < values.size(); ++i)
    CHECK(result.corrected_means[i] == values[i]);
  CHECK(result.permanent_share == doctest::Approx(1.0));
  CHECK(result.sd_reduction_vs_input == doctest::Approx(0.0));
}

TEST_CASE("shrinkage direction follows the score function sign") {
  std::mt19937_64 rng(109);
  for (int rep = 0; rep < 200; ++rep) {
    const double z = testutil::random_vector(rng, 1, -3, 3)[0];
    const double l1 = testutil::random_vector(rng, 1, -5, 5)[0];
    TweedieConfig cfg;
    cfg.sigma2 = std::abs(testutil::random_vector(rng, 1, 0.01, 3)[0]);
    const double corrected = correct_mean(z, LogDensityDerivs{l1, 0.0}, cfg);
    if (l1 > 0) CHECK(corrected > z);
    if (l1 < 0) CHECK(corrected < z);
  }
}

TEST_CASE("corrections vanish linearly as sigma2 goes to zero") {
  const LogDensityDerivs d{-1.4, -0.3};
  const double z = 0.9;
  TweedieConfig cfg;
  for (double s2 : {1e-2, 1e-4, 1e-6}) {
    cfg.sigma2 = s2;
    CHECK(correct_mean(z, d, cfg) - z == doctest::Approx(s2 * d.l1).epsilon(1e-12));
  }
}

TEST_CASE("quadratic log-concave fit gives a strictly increasing mean map") {
  LogDensityFit fit;
  fit.coeffs = {0.0, 0.0, -0.7};
  fit.basis_center = 0.0;
  fit.basis_halfwidth = 2.0;
  fit.order = 2;
  fit.converged = true;
  fit.histogram.edges = {-2.0, 2.0};
  fit.histogram.midpoints = {0.0};
  fit.histogram.counts = {1};
  fit.histogram.width = 4.0;
  TweedieConfig cfg;
  double prev = -std::numeric_limits<double>::infinity();
  for (int g = 0; g <= 100; ++g) {
    const double z = -2.0 + 4.0 * g / 100.0;
    const double corrected = correct_mean(z, fit, cfg);
    CHECK(corrected > prev);
    prev = corrected;
  }
}

TEST_CASE("lindsey-estimated conjugate pipeline recovers y/2") {
  std::mt19937_64 rng(113);
  std::normal_distribution<double> noise;
  std::vector<double> y(100000);
  for (auto& v : y) {
    const double mu = noise(rng);
    v = mu + noise(rng);
  }
  const auto hist = histogram(y, BinScheme::bins(100));
  LindseyConfig lcfg;
  const auto fit = fit_poisson_poly(hist, 2, lcfg);
  REQUIRE(fit.converged);
  TweedieConfig cfg;  // sigma2 = 1, the true sampling variance
  const auto result = correct_scores(plain_scores(y), fit, cfg);
  double worst = 0.0, sum_err = 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i]) > 2.0) continue;
    const double err = std::abs(result.corrected_means[i] - y[i] / 2.0);
    worst = std::max(worst, err);
    sum_err += err;
    ++m;
  }
  CHECK(sum_err / double(m) <= 0.02);
  CHECK(worst <= 0.05);
  CHECK(result.permanent_share == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("decompose_variance on a reference example") {
  const auto d = decompose_variance(0.067, 1.0, 0.117);
  CHECK(d.permanent_share == doctest::Approx(0.067));
  CHECK(d.reduction_vs_intermediate == doctest::Approx(0.4274).epsilon(1e-3));

  const auto same = decompose_variance(0.5, 1.0, 0.5);
  CHECK(same.reduction_vs_intermediate == doctest::Approx(0.0));

  CHECK_THROWS_AS(decompose_variance(0.1, 0.0, 1.0), Error);
  CHECK_THROWS_AS(decompose_variance(0.1, 1.0, 0.0), Error);
}

TEST_CASE("decompose_variance is scale-invariant") {
  std::mt19937_64 rng(127);
  for (int rep = 0; rep < 200; ++rep) {
    const double corrected = testutil::random_vector(rng, 1, 0.01, 2)[0];
    const double original = testutil::random_vector(rng, 1, 0.01, 2)[0];
    const double inter = testutil::random_vector(rng, 1, 0.01, 2)[0];
    const double c = testutil::random_vector(rng, 1, 0.1, 10)[0];
    const auto base = decompose_variance(corrected, original, inter);
    const auto scaled = decompose_variance(c * corrected, c * original, c * inter);
    CHECK(scaled.permanent_share == doctest::Approx(base.permanent_share).epsilon(1e-12));
    CHECK(scaled.reduction_vs_intermediate ==
          doctest::Approx(base.reduction_vs_intermediate).epsilon(1e-12));
  }
}

TEST_CASE("linear back-transform inverts the standardization") {
  CHECK(back_transform_linear(0.0, 414.9, 309.5) == 414.9);
  std::mt19937_64 rng(131);
  for (int rep = 0; rep < 100; ++rep) {
    const double v = testutil::random_vector(rng, 1)[0];
    const double c = testutil::random_vector(rng, 1)[0];
    const double s = testutil::random_vector(rng, 1, 0.1, 4)[0];
    const auto scores = standardize(std::vector<double>{v}, c, s);
    CHECK(back_transform_linear(scores.scores[0], c, s) == doctest::Approx(v).epsilon(1e-12));
  }
  CHECK_THROWS_AS(back_transform_linear(0.0, 0.0, -1.0), Error);
}

TEST_CASE("quantile back-transform") {
  Sample sample{{1, 2, 3, 4, 5, 6, 7, 8, 9}, "q"};
  CHECK(back_transform_quantile(0.0, sample) == doctest::Approx(5.0));  // Phi(0) = 0.5

  // monotone in the corrected score
  double prev = -1e300;
  for (double z = -3.0; z <= 3.0; z += 0.25) {
    const double q = back_transform_quantile(z, sample);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK_THROWS_AS(back_transform_quantile(0.0, Sample{}), Error);
}

TEST_CASE("correct_scores flags extrapolated evaluations") {
  auto fit = flat_fit(1.0, -1.0, 1.0);
  TweedieConfig cfg;
  const auto result = correct_scores(plain_scores({-2.0, 0.0, 2.0}), fit, cfg);
  CHECK(result.extrapolated == std::vector<std::uint8_t>{1, 0, 1});

  cfg.include_extrapolated_in_summary = false;
  const auto filtered = correct_scores(plain_scores({-2.0, 0.0, 0.5, 2.0}), fit, cfg);
  // summary excludes the two out-of-range scores
  CHECK(filtered.summary.min == doctest::Approx(0.0));
  CHECK(filtered.summary.max == doctest::Approx(0.5));
}
