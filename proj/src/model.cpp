#include "rainbow/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rainbow {

void ModelParams::validate() const {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) {
        throw std::invalid_argument("volatilities must be strictly positive");
    }
    if (!(delta1 > 0.0) || !(delta2 > 0.0)) {
        throw std::invalid_argument("log-jump standard deviations must be strictly positive");
    }
    if (!(std::abs(rho) < 1.0) || !(std::abs(rho_hat) < 1.0)) {
        throw std::invalid_argument("correlations must lie in (-1, 1)");
    }
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("jump intensity must be nonnegative");
    }
    if (!std::isfinite(gamma1) || !std::isfinite(gamma2) || !std::isfinite(r)) {
        throw std::invalid_argument("non-finite model parameter");
    }
}

void OptionSpec::validate() const {
    if (!(K > 0.0)) throw std::invalid_argument("strike must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("maturity must be positive");
}

ParameterSet parameter_set(SetId id) {
    ParameterSet set;
    set.id = id;
    ModelParams& p = set.params;
    switch (id) {
        case SetId::Set1:
            p = {.sigma1 = 0.12, .sigma2 = 0.15, .rho = 0.30, .lambda = 0.60,
                 .gamma1 = -0.10, .gamma2 = 0.10, .rho_hat = -0.20,
                 .delta1 = 0.17, .delta2 = 0.13, .r = 0.05};
            set.option = {PayoffKind::PutOnMin, 100.0, 1.0};
            set.s_max_put_on_min = 5.0 * set.option.K;
            set.s_max_put_on_average = 5.0 * set.option.K;
            break;
        case SetId::Set2:
            p = {.sigma1 = 0.30, .sigma2 = 0.30, .rho = 0.50, .lambda = 2.0,
                 .gamma1 = -0.50, .gamma2 = 0.30, .rho_hat = -0.60,
                 .delta1 = 0.40, .delta2 = 0.10, .r = 0.05};
            set.option = {PayoffKind::PutOnMin, 40.0, 0.5};
            set.s_max_put_on_min = 30.0 * set.option.K;
            set.s_max_put_on_average = 15.0 * set.option.K;
            break;
        case SetId::Set3:
            p = {.sigma1 = 0.20, .sigma2 = 0.30, .rho = 0.70, .lambda = 8.0,
                 .gamma1 = -0.05, .gamma2 = -0.20, .rho_hat = 0.50,
                 .delta1 = 0.45, .delta2 = 0.06, .r = 0.05};
            set.option = {PayoffKind::PutOnMin, 40.0, 1.0};
            set.s_max_put_on_min = 50.0 * set.option.K;
            set.s_max_put_on_average = 25.0 * set.option.K;
            break;
    }
    return set;
}

double expected_relative_jump_size(const ModelParams& params, Asset i) {
    const double gamma = i == Asset::One ? params.gamma1 : params.gamma2;
    const double delta = i == Asset::One ? params.delta1 : params.delta2;
    return std::expm1(gamma + 0.5 * delta * delta);
}

namespace {

double log_normal2_density(const ModelParams& p, double eta1, double eta2) {
    const double z1 = (eta1 - p.gamma1) / p.delta1;
    const double z2 = (eta2 - p.gamma2) / p.delta2;
    const double one_minus = (1.0 - p.rho_hat) * (1.0 + p.rho_hat);
    const double quad = (z1 * z1 + z2 * z2 - 2.0 * p.rho_hat * z1 * z2) / one_minus;
    const double log_norm =
        std::log(2.0 * std::numbers::pi * p.delta1 * p.delta2) + 0.5 * std::log(one_minus);
    return -0.5 * quad - log_norm;
}

}  // namespace

double log_jump_density(const ModelParams& params, double eta1, double eta2) {
    return std::exp(log_normal2_density(params, eta1, eta2));
}

double jump_density_lognormal(const ModelParams& params, double y1, double y2) {
    if (!(y1 > 0.0) || !(y2 > 0.0)) {
        throw std::domain_error("lognormal jump density requires y1 > 0 and y2 > 0");
    }
    const double l1 = std::log(y1);
    const double l2 = std::log(y2);
    return std::exp(log_normal2_density(params, l1, l2) - l1 - l2);
}

double payoff(const OptionSpec& option, double s1, double s2) {
    switch (option.payoff_kind) {
        case PayoffKind::PutOnMin:
            return std::max(0.0, option.K - std::min(s1, s2));
        case PayoffKind::PutOnAverage:
            return std::max(0.0, option.K - 0.5 * (s1 + s2));
    }
    return 0.0;
}

std::string_view to_string(PayoffKind kind) {
    return kind == PayoffKind::PutOnMin ? "min" : "avg";
}

std::string_view to_string(SetId id) {
    switch (id) {
        case SetId::Set1: return "1";
        case SetId::Set2: return "2";
        case SetId::Set3: return "3";
    }
    return "?";
}

}  // namespace rainbow
