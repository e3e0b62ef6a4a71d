// Command-line front end: single-point pricing, temporal and total error
// studies, and the analytic / Monte Carlo reference values.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "rainbow/analytic.hpp"
#include "rainbow/errors.hpp"
#include "rainbow/harness.hpp"

namespace {

constexpr int kExitInvalidConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
    int set = 1;
    std::string payoff = "min";
    std::size_t m = 75;
    std::vector<std::size_t> n_list;
    std::vector<std::size_t> m_list{20, 40, 80, 160};
    std::vector<std::string> schemes;
    std::string out_dir = ".";
    std::uint64_t seed = 42;
    std::int64_t paths = 1'000'000;
    std::size_t reference_steps = 3000;
    double concentration = 0.0;
    double s1 = std::nan("");
    double s2 = std::nan("");
    bool no_timing = false;
};

rainbow::SetId set_id(int s) {
    switch (s) {
        case 1: return rainbow::SetId::Set1;
        case 2: return rainbow::SetId::Set2;
        case 3: return rainbow::SetId::Set3;
        default: throw std::invalid_argument("--set must be 1, 2 or 3");
    }
}

rainbow::PayoffKind payoff_kind(const std::string& p) {
    if (p == "min") return rainbow::PayoffKind::PutOnMin;
    if (p == "avg") return rainbow::PayoffKind::PutOnAverage;
    throw std::invalid_argument("--payoff must be min or avg");
}

std::vector<rainbow::Scheme> schemes_of(const Options& o) {
    std::vector<rainbow::Scheme> out;
    for (const auto& s : o.schemes) out.push_back(rainbow::parse_scheme(s));
    if (out.empty()) out.assign(std::begin(rainbow::kAllSchemes), std::end(rainbow::kAllSchemes));
    return out;
}

rainbow::ExperimentConfig experiment_of(const Options& o) {
    rainbow::ExperimentConfig cfg;
    cfg.set = set_id(o.set);
    cfg.payoff = payoff_kind(o.payoff);
    cfg.m = o.m;
    if (!o.n_list.empty()) cfg.n_list = o.n_list;
    cfg.m_list = o.m_list;
    cfg.schemes = schemes_of(o);
    cfg.reference_steps = o.reference_steps;
    cfg.problem.concentration = o.concentration;
    cfg.record_wall_time = !o.no_timing;
    return cfg;
}

std::string stem(const char* study, const Options& o, bool with_m) {
    std::string s = std::string(study) + "_set" + std::to_string(o.set) + "_" + o.payoff;
    if (with_m) s += "_m" + std::to_string(o.m);
    return s;
}

int run_price(const Options& o) {
    rainbow::PriceQuery q;
    q.set = rainbow::parameter_set(set_id(o.set));
    q.payoff = payoff_kind(o.payoff);
    q.m = o.m;
    q.N = o.n_list.empty() ? 100 : o.n_list.front();
    q.scheme = o.schemes.empty() ? rainbow::Scheme::MCS2 : rainbow::parse_scheme(o.schemes.front());
    q.s1 = std::isnan(o.s1) ? q.set.option.K : o.s1;
    q.s2 = std::isnan(o.s2) ? q.set.option.K : o.s2;
    q.problem.concentration = o.concentration;
    const double v = rainbow::price(q);
    std::cout.precision(10);
    std::cout << "set=" << o.set << " payoff=" << o.payoff << " scheme=" << rainbow::to_string(q.scheme)
              << " m=" << q.m << " N=" << q.N << " s1=" << q.s1 << " s2=" << q.s2 << " price=" << v << '\n';
    return 0;
}

int run_temporal(const Options& o) {
    const auto report = rainbow::temporal_error_study(experiment_of(o));
    const auto files = rainbow::emit_report(report, o.out_dir, stem("temporal", o, true));
    rainbow::write_csv(report, std::cout);
    std::cerr << "wrote " << files.csv.string() << " and " << files.svg.string() << '\n';
    return 0;
}

int run_total(const Options& o) {
    const auto report = rainbow::total_error_study(experiment_of(o));
    const auto files = rainbow::emit_report(report, o.out_dir, stem("total", o, false));
    rainbow::write_csv(report, std::cout);
    std::cerr << "wrote " << files.csv.string() << " and " << files.svg.string() << '\n';
    return 0;
}

int run_reference(const Options& o) {
    const auto set = rainbow::parameter_set(set_id(o.set));
    const auto option = set.option_for(payoff_kind(o.payoff));
    const double s1 = std::isnan(o.s1) ? option.K : o.s1;
    const double s2 = std::isnan(o.s2) ? option.K : o.s2;
    std::cout.precision(10);
    if (option.payoff_kind == rainbow::PayoffKind::PutOnMin) {
        std::cout << "analytic=" << rainbow::put_on_min_value(set.params, option, s1, s2) << '\n';
    }
    const auto mc = rainbow::mc_reference_price(set.params, option, s1, s2, o.paths, o.seed);
    std::cout << "monte_carlo=" << mc.price << " std_error=" << mc.std_error << " paths=" << o.paths
              << " seed=" << o.seed << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-asset Merton jump-diffusion rainbow option pricer"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value file; keys are the long option names");

    Options o;
    app.add_option("--set", o.set, "Parameter set")->check(CLI::IsMember({1, 2, 3}));
    app.add_option("--payoff", o.payoff, "Payoff: min (put-on-the-min) or avg (put-on-the-average)")
        ->check(CLI::IsMember({"min", "avg"}));
    app.add_option("--m", o.m, "Grid cells per direction")->check(CLI::Range(4, 100000));
    app.add_option("--n-list", o.n_list, "Base step counts (comma separated); price uses the first")
        ->delimiter(',');
    app.add_option("--m-list", o.m_list, "Grid sizes of the total-error study")->delimiter(',');
    app.add_option("--schemes", o.schemes, "Schemes (comma separated); price uses the first")->delimiter(',');
    app.add_option("--out-dir", o.out_dir, "Directory for CSV and SVG output");
    app.add_option("--seed", o.seed, "Monte Carlo seed");
    app.add_option("--paths", o.paths, "Monte Carlo paths")->check(CLI::Range(std::int64_t{10000}, std::int64_t{1} << 40));
    app.add_option("--reference-steps", o.reference_steps, "MCS2 steps of the temporal reference");
    app.add_option("--concentration", o.concentration, "Grid stretch parameter (0 = default)");
    app.add_option("--s1", o.s1, "First asset price (default K)");
    app.add_option("--s2", o.s2, "Second asset price (default K)");
    app.add_flag("--no-timing", o.no_timing, "Write wall_ms as 0 for byte-reproducible CSV");

    auto* price = app.add_subcommand("price", "Price at one point by bilinear read-out of V^N")->fallthrough();
    auto* temporal = app.add_subcommand("temporal-study", "Temporal errors against the MCS2 reference")->fallthrough();
    auto* total = app.add_subcommand("total-study", "Total errors against the semi-closed price")->fallthrough();
    auto* reference = app.add_subcommand("reference", "Semi-closed and Monte Carlo reference prices")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalidConfig;
    }

    try {
        if (*price) return run_price(o);
        if (*temporal) return run_temporal(o);
        if (*total) return run_total(o);
        if (*reference) return run_reference(o);
    } catch (const rainbow::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kExitInvalidConfig;
    } catch (const std::out_of_range& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kExitInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitInvalidConfig;
}
