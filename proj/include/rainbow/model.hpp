#pragma once

#include <string_view>

namespace rainbow {

/// Risk-neutral parameters of the two-asset Merton jump-diffusion model.
///
/// Jumps arrive with intensity `lambda`; each jump adds a bivariate normal
/// vector (Y1, Y2) with means (gamma1, gamma2), standard deviations
/// (delta1, delta2) and correlation `rho_hat` to the two log-prices.
struct ModelParams {
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double rho = 0.0;
    double lambda = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double rho_hat = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double r = 0.0;

    /// Throws std::invalid_argument when a type invariant is violated.
    void validate() const;
};

enum class Asset { One, Two };

enum class PayoffKind { PutOnMin, PutOnAverage };

struct OptionSpec {
    PayoffKind payoff_kind = PayoffKind::PutOnMin;
    double K = 0.0;
    double T = 0.0;

    void validate() const;
};

enum class SetId { Set1, Set2, Set3 };

/// One of the three benchmark configurations, including the truncation
/// bound S_max used for each payoff.
struct ParameterSet {
    SetId id = SetId::Set1;
    ModelParams params;
    OptionSpec option;
    double s_max_put_on_min = 0.0;
    double s_max_put_on_average = 0.0;

    [[nodiscard]] double s_max(PayoffKind kind) const {
        return kind == PayoffKind::PutOnMin ? s_max_put_on_min : s_max_put_on_average;
    }
    /// Copy of `option` with the payoff replaced.
    [[nodiscard]] OptionSpec option_for(PayoffKind kind) const {
        OptionSpec o = option;
        o.payoff_kind = kind;
        return o;
    }
};

/// Preset parameter sets (put-on-min option by default).
[[nodiscard]] ParameterSet parameter_set(SetId id);

/// kappa_i = E[e^{Y_i} - 1] = exp(gamma_i + delta_i^2 / 2) - 1.
[[nodiscard]] double expected_relative_jump_size(const ModelParams& params, Asset i);

/// Bivariate normal density of the log-jump (eta1, eta2).
[[nodiscard]] double log_jump_density(const ModelParams& params, double eta1, double eta2);

/// Bivariate lognormal density of the multiplicative jump (y1, y2).
/// Throws std::domain_error unless y1 > 0 and y2 > 0.
[[nodiscard]] double jump_density_lognormal(const ModelParams& params, double y1, double y2);

/// Option payoff at expiry; always in [0, K].
[[nodiscard]] double payoff(const OptionSpec& option, double s1, double s2);

[[nodiscard]] std::string_view to_string(PayoffKind kind);
[[nodiscard]] std::string_view to_string(SetId id);

}  // namespace rainbow
