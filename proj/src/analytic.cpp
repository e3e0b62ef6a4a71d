#include "rainbow/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "rainbow/errors.hpp"

namespace rainbow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct GaussLegendre20 {
    // Nodes in (-1, 0) and matching weights; the rule is symmetric.
    std::array<double, 10> x{};
    std::array<double, 10> w{};

    GaussLegendre20() {
        constexpr int n = 20;
        for (int i = 0; i < n / 2; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = z;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (z * p1 - p0) / (z * z - 1.0);
                const double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-17) break;
            }
            x[i] = -z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
};

const GaussLegendre20& gauss_legendre() {
    static const GaussLegendre20 rule;
    return rule;
}

// P(X > h, Y > k) for standard normals with correlation r (Genz, BVNU).
double upper_bvn(double h, double k, double r) {
    const auto& gl = gauss_legendre();
    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = 0.5 * (h * h + k * k);
        const double asr = std::asin(r);
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            double sn = std::sin(asr * (gl.x[i] + 1.0) / 2.0);
            bvn += gl.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            sn = std::sin(asr * (-gl.x[i] + 1.0) / 2.0);
            bvn += gl.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * kTwoPi) + normal_cdf(-h) * normal_cdf(-k);
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * normal_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
        double xs = a * (gl.x[i] + 1.0);
        xs *= xs;
        double rs = std::sqrt(1.0 - xs);
        bvn += a * gl.w[i] *
               (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
        xs = as * (-gl.x[i] + 1.0) * (-gl.x[i] + 1.0) / 4.0;
        rs = std::sqrt(1.0 - xs);
        bvn += a * gl.w[i] * std::exp(-(bs / xs + hk) / 2.0) *
               (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                (1.0 + c * xs * (1.0 + d * xs)));
    }
    bvn = -bvn / kTwoPi;
    if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
    bvn = -bvn;
    if (k > h) {
        if (h < 0.0) {
            bvn += normal_cdf(k) - normal_cdf(h);
        } else {
            bvn += normal_cdf(-h) - normal_cdf(-k);
        }
    }
    return bvn;
}

// Poisson(mu) probability mass at n, evaluated in log space.
double poisson_weight(double mu, int n) {
    if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
}

// P(N > n) for N ~ Poisson(mu), summed forward to avoid cancellation.
double poisson_tail(double mu, int n) {
    if (mu == 0.0) return 0.0;
    double term = poisson_weight(mu, n + 1);
    double sum = 0.0;
    for (int k = n + 1; k < n + 100000; ++k) {
        sum += term;
        term *= mu / (k + 1);
        if (k > mu && term <= sum * 1e-17) break;
        if (term == 0.0) break;
    }
    return sum;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double bivariate_normal_cdf(double x1, double x2, double rho) {
    if (!(std::abs(rho) < 1.0)) {
        throw std::domain_error("bivariate normal CDF requires |rho| < 1");
    }
    if (std::isnan(x1) || std::isnan(x2)) {
        throw std::domain_error("bivariate normal CDF argument is NaN");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (x1 == -inf || x2 == -inf) return 0.0;
    if (x1 == inf) return normal_cdf(x2);
    if (x2 == inf) return normal_cdf(x1);
    const double value = upper_bvn(-x1, -x2, rho);
    return std::clamp(value, 0.0, 1.0);
}

SeriesTermContext make_series_term(const ModelParams& p, const OptionSpec& option, double s1_0,
                                   double s2_0, int n) {
    const double T = option.T;
    const double K = option.K;
    const double kappa1 = expected_relative_jump_size(p, Asset::One);
    const double kappa2 = expected_relative_jump_size(p, Asset::Two);

    SeriesTermContext c;
    c.n = n;
    c.sigma_sq = p.sigma1 * p.sigma1 - 2.0 * p.rho * p.sigma1 * p.sigma2 + p.sigma2 * p.sigma2;
    c.delta_sq = p.delta1 * p.delta1 - 2.0 * p.rho_hat * p.delta1 * p.delta2 + p.delta2 * p.delta2;

    const double var1 = p.sigma1 * p.sigma1 + n * p.delta1 * p.delta1 / T;
    const double var2 = p.sigma2 * p.sigma2 + n * p.delta2 * p.delta2 / T;
    const double var = c.sigma_sq + n * c.delta_sq / T;
    const double cov = p.rho * p.sigma1 * p.sigma2 + n * p.rho_hat * p.delta1 * p.delta2 / T;
    const double sqrt_t = std::sqrt(T);

    c.scale1 = sqrt_t * std::sqrt(var1);
    c.scale2 = sqrt_t * std::sqrt(var2);
    c.scale = sqrt_t * std::sqrt(var);

    c.b1 = (std::log(s1_0 / K) + (p.r - 0.5 * p.sigma1 * p.sigma1 - p.lambda * kappa1) * T +
            n * p.gamma1) / c.scale1;
    c.b2 = (std::log(s2_0 / K) + (p.r - 0.5 * p.sigma2 * p.sigma2 - p.lambda * kappa2) * T +
            n * p.gamma2) / c.scale2;
    c.d1 = -c.b1 - c.scale1;
    c.d2 = -c.b2 - c.scale2;

    c.d11 = (std::log(s2_0 / s1_0) + (-0.5 * c.sigma_sq + p.lambda * (kappa1 - kappa2)) * T -
             n * (p.gamma1 - p.gamma2 + p.delta1 * p.delta1 - p.rho_hat * p.delta1 * p.delta2)) /
            c.scale;
    c.d22 = -c.d11 - c.scale;

    c.rho1 = std::sqrt(var1) / std::sqrt(var) - cov / std::sqrt(var * var1);
    c.rho2 = std::sqrt(var2) / std::sqrt(var) - cov / std::sqrt(var * var2);
    c.rho3 = cov / std::sqrt(var1 * var2);
    return c;
}

double put_on_min_value(const ModelParams& p, const OptionSpec& option, double s1_0, double s2_0,
                        SeriesOptions opts) {
    if (option.payoff_kind != PayoffKind::PutOnMin) {
        throw std::invalid_argument("semi-closed formula exists only for the put-on-the-min");
    }
    if (!(s1_0 > 0.0) || !(s2_0 > 0.0)) {
        throw std::invalid_argument("spot prices must be positive");
    }
    if (!(opts.tol > 0.0)) throw std::invalid_argument("series tolerance must be positive");

    const double T = option.T;
    const double K = option.K;
    const double mu = p.lambda * T;
    const double disc_k = std::exp(-p.r * T) * K;
    const double kappa1 = expected_relative_jump_size(p, Asset::One);
    const double kappa2 = expected_relative_jump_size(p, Asset::Two);

    double value = 0.0;
    for (int n = 0; n <= opts.max_terms; ++n) {
        const SeriesTermContext c = make_series_term(p, option, s1_0, s2_0, n);
        const double fwd1 = s1_0 * std::exp(-p.lambda * kappa1 * T + n * p.gamma1 +
                                            0.5 * n * p.delta1 * p.delta1);
        const double fwd2 = s2_0 * std::exp(-p.lambda * kappa2 * T + n * p.gamma2 +
                                            0.5 * n * p.delta2 * p.delta2);
        const double term = disc_k - disc_k * bivariate_normal_cdf(c.b1, c.b2, c.rho3) -
                            fwd1 * bivariate_normal_cdf(c.d11, c.d1, c.rho1) -
                            fwd2 * bivariate_normal_cdf(c.d22, c.d2, c.rho2);
        value += poisson_weight(mu, n) * term;
        if (poisson_tail(mu, n) < opts.tol) {
            return std::clamp(value, 0.0, disc_k);
        }
    }
    throw NumericalError("put-on-the-min series did not reach its tail bound within " +
                         std::to_string(opts.max_terms) + " terms");
}

namespace {

struct RunningMoments {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    void merge(const RunningMoments& o) {
        if (o.count == 0) return;
        const double n_a = static_cast<double>(count);
        const double n_b = static_cast<double>(o.count);
        const double n = n_a + n_b;
        const double delta = o.mean - mean;
        mean += delta * n_b / n;
        m2 += o.m2 + delta * delta * n_a * n_b / n;
        count += o.count;
    }
};

}  // namespace

McEstimate mc_reference_price(const ModelParams& p, const OptionSpec& option, double s1_0,
                              double s2_0, std::int64_t paths, std::uint64_t seed, int workers) {
    if (paths < 10000) throw std::invalid_argument("Monte Carlo needs at least 1e4 paths");
    if (workers < 1) throw std::invalid_argument("worker count must be positive");
    if (!(s1_0 > 0.0) || !(s2_0 > 0.0)) throw std::invalid_argument("spot prices must be positive");

    const double T = option.T;
    const double sqrt_t = std::sqrt(T);
    const double kappa1 = expected_relative_jump_size(p, Asset::One);
    const double kappa2 = expected_relative_jump_size(p, Asset::Two);
    const double drift1 = std::log(s1_0) + (p.r - 0.5 * p.sigma1 * p.sigma1 - p.lambda * kappa1) * T;
    const double drift2 = std::log(s2_0) + (p.r - 0.5 * p.sigma2 * p.sigma2 - p.lambda * kappa2) * T;
    const double rho_c = std::sqrt((1.0 - p.rho) * (1.0 + p.rho));
    const double rho_hat_c = std::sqrt((1.0 - p.rho_hat) * (1.0 + p.rho_hat));
    const double discount = std::exp(-p.r * T);

    std::vector<RunningMoments> partial(static_cast<std::size_t>(workers));

#pragma omp parallel for schedule(static) num_threads(workers)
    for (int w = 0; w < workers; ++w) {
        const std::int64_t begin = paths * w / workers;
        const std::int64_t end = paths * (w + 1) / workers;
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(w)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        std::poisson_distribution<int> jumps(p.lambda * T);
        RunningMoments acc;
        for (std::int64_t path = begin; path < end; ++path) {
            const double z1 = normal(rng);
            const double z2 = normal(rng);
            double x1 = drift1 + p.sigma1 * sqrt_t * z1;
            double x2 = drift2 + p.sigma2 * sqrt_t * (p.rho * z1 + rho_c * z2);
            const int n = p.lambda > 0.0 ? jumps(rng) : 0;
            for (int k = 0; k < n; ++k) {
                const double u1 = normal(rng);
                const double u2 = normal(rng);
                x1 += p.gamma1 + p.delta1 * u1;
                x2 += p.gamma2 + p.delta2 * (p.rho_hat * u1 + rho_hat_c * u2);
            }
            acc.add(discount * payoff(option, std::exp(x1), std::exp(x2)));
        }
        partial[static_cast<std::size_t>(w)] = acc;
    }

    RunningMoments total;
    for (const auto& part : partial) total.merge(part);
    const double variance = total.m2 / static_cast<double>(total.count - 1);
    return {total.mean, std::sqrt(variance / static_cast<double>(total.count))};
}

}  // namespace rainbow
