#pragma once

#include <cstdint>

#include "rainbow/model.hpp"

namespace rainbow {

/// Standard normal cumulative distribution function.
[[nodiscard]] double normal_cdf(double x);

/// P(X1 <= x1, X2 <= x2) for standard normals with correlation rho.
///
/// Genz's refinement of the Drezner-Wesolowsky single-integral method with
/// 20-point Gauss-Legendre quadrature; absolute error is below 1e-14.
/// Infinite limits are accepted. Throws std::domain_error when |rho| >= 1.
[[nodiscard]] double bivariate_normal_cdf(double x1, double x2, double rho);

/// Quantities entering the n-th term of the put-on-the-min jump series.
struct SeriesTermContext {
    int n = 0;
    double b1 = 0.0, b2 = 0.0;
    double d1 = 0.0, d2 = 0.0;
    double d11 = 0.0, d22 = 0.0;
    double rho1 = 0.0, rho2 = 0.0, rho3 = 0.0;
    double sigma_sq = 0.0;  // sigma1^2 - 2 rho sigma1 sigma2 + sigma2^2
    double delta_sq = 0.0;  // delta1^2 - 2 rho_hat delta1 delta2 + delta2^2
    double scale1 = 0.0;    // sqrt(T) sqrt(sigma1^2 + n delta1^2 / T)
    double scale2 = 0.0;
    double scale = 0.0;     // sqrt(T) sqrt(sigma^2 + n delta^2 / T)
};

/// Builds the term context for n jumps at spot (s1_0, s2_0).
[[nodiscard]] SeriesTermContext make_series_term(const ModelParams& params, const OptionSpec& option,
                                                 double s1_0, double s2_0, int n);

struct SeriesOptions {
    double tol = 1e-12;  // Poisson tail mass at which the series is cut
    int max_terms = 400;
};

/// Semi-closed price of a European put-on-the-min at inception, as a
/// Poisson-weighted sum over the number of jumps up to maturity.
///
/// Throws std::invalid_argument for a non put-on-min option or nonpositive
/// spots, and NumericalError when the tail bound is not met within
/// `max_terms` terms.
[[nodiscard]] double put_on_min_value(const ModelParams& params, const OptionSpec& option,
                                      double s1_0, double s2_0, SeriesOptions opts = {});

struct McEstimate {
    double price = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo price by exact sampling of the terminal law: correlated
/// Brownian increments, a Poisson jump count and that many bivariate
/// normal jumps. Deterministic for a given (seed, workers) pair.
[[nodiscard]] McEstimate mc_reference_price(const ModelParams& params, const OptionSpec& option,
                                            double s1_0, double s2_0, std::int64_t paths,
                                            std::uint64_t seed, int workers = 1);

}  // namespace rainbow
