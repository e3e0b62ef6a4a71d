#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "rainbow/grid.hpp"
#include "rainbow/jump_operator.hpp"
#include "rainbow/model.hpp"
#include "rainbow/spatial_operator.hpp"
#include "rainbow/stepping.hpp"

namespace rainbow {

struct ProblemOptions {
    /// Grid stretch parameter; <= 0 selects the payoff default.
    double concentration = 0.0;
    JumpOptions jump;
    /// OpenMP kernels in the spatial products and line solves.
    bool parallel = true;
};

/// Everything needed to time-step one (parameter set, payoff, m) case.
struct Problem {
    ParameterSet set;
    OptionSpec option;
    GridSpec spec;
    SpatialGrid grid;
    OperatorSet ops;
    std::unique_ptr<JumpOperator> jump;
    std::vector<double> v0;
    std::vector<std::size_t> roi;
    ProblemOptions options;
};

[[nodiscard]] Problem make_problem(const ParameterSet& set, PayoffKind payoff, std::size_t m,
                                   const ProblemOptions& options = {});

/// V at maturity after `steps` steps of the configured scheme.
[[nodiscard]] std::vector<double> solve(const Problem& problem, const SchemeConfig& cfg, std::size_t steps);

/// Step count used for a base count N: N for CNFI, IETR, MCS and 2N for
/// CNFE, CNAB, MCS2, SC2A, so that all schemes do equal jump-operator work.
[[nodiscard]] std::size_t fair_steps(Scheme scheme, std::size_t N);

/// Bilinear interpolation of a grid vector. Throws std::out_of_range
/// outside [0, S_max]^2.
[[nodiscard]] double bilinear_readout(const SpatialGrid& grid, std::span<const double> v, double s1, double s2);

/// Maximum of |v - ref| over the given indices.
[[nodiscard]] double max_error(std::span<const double> v, std::span<const double> ref,
                               std::span<const std::size_t> indices);

enum class ReferenceKind { Mcs2, Analytic };

[[nodiscard]] std::string_view to_string(ReferenceKind kind);

struct ExperimentConfig {
    SetId set = SetId::Set1;
    PayoffKind payoff = PayoffKind::PutOnMin;
    std::size_t m = 75;
    std::vector<std::size_t> n_list{10, 20, 40, 80, 160, 320, 640, 1000};
    std::vector<Scheme> schemes{std::begin(kAllSchemes), std::end(kAllSchemes)};
    ReferenceKind reference = ReferenceKind::Mcs2;
    std::size_t reference_steps = 3000;
    /// Grid sizes of the total-error study; N = ceil(m / 3) for each.
    std::vector<std::size_t> m_list{20, 40, 80, 160};
    ProblemOptions problem;
    /// When false, wall_ms is written as 0 so reruns give identical CSV bytes.
    bool record_wall_time = true;

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

struct ErrorRow {
    Scheme scheme = Scheme::MCS2;
    std::size_t m = 0;
    std::size_t N = 0;
    std::size_t N_prime = 0;
    double error = 0.0;
    double observed_order = 0.0;  // NaN for the first entry of a sweep
    double wall_ms = 0.0;
};

struct ErrorReport {
    std::string study;  // "temporal" or "total"
    SetId set = SetId::Set1;
    PayoffKind payoff = PayoffKind::PutOnMin;
    ReferenceKind reference = ReferenceKind::Mcs2;
    std::vector<ErrorRow> rows;

    /// Row for (scheme, m, N), or nullptr.
    [[nodiscard]] const ErrorRow* find(Scheme scheme, std::size_t m, std::size_t N) const;
};

/// Reference solutions keyed by (set, payoff, m, kind, steps); each is
/// computed once.
class ReferenceCache {
public:
    [[nodiscard]] std::shared_ptr<const std::vector<double>> get(const Problem& problem, ReferenceKind kind,
                                                                 std::size_t steps);
    [[nodiscard]] std::size_t computations() const;

private:
    using Key = std::tuple<int, int, std::size_t, int, std::size_t, double>;
    mutable std::mutex mutex_;
    std::map<Key, std::shared_ptr<const std::vector<double>>> entries_;
    std::size_t computations_ = 0;
};

/// Values of the semi-closed put-on-the-min price at the given grid nodes
/// (NaN elsewhere).
[[nodiscard]] std::vector<double> analytic_on_grid(const Problem& problem, std::span<const std::size_t> nodes);

/// Temporal errors at maturity against a fine-step reference on the same
/// grid, max-norm over the region of interest.
[[nodiscard]] ErrorReport temporal_error_study(const ExperimentConfig& config, ReferenceCache& cache);
[[nodiscard]] ErrorReport temporal_error_study(const ExperimentConfig& config);

/// Total errors against the semi-closed price for each m in config.m_list.
/// Throws std::invalid_argument for the put-on-the-average.
[[nodiscard]] ErrorReport total_error_study(const ExperimentConfig& config);

struct PriceQuery {
    ParameterSet set = parameter_set(SetId::Set1);
    PayoffKind payoff = PayoffKind::PutOnMin;
    std::size_t m = 75;
    std::size_t N = 100;  // literal number of time steps
    Scheme scheme = Scheme::MCS2;
    double s1 = 0.0;
    double s2 = 0.0;
    ProblemOptions problem;
};

/// Price at (s1, s2) by bilinear read-out of V^N. Throws std::out_of_range
/// outside the truncated domain.
[[nodiscard]] double price(const PriceQuery& query);

/// CSV with header set,payoff,scheme,m,N,N_prime,error,observed_order,wall_ms.
void write_csv(const ErrorReport& report, std::ostream& out);
/// Log-log error plot, one polyline per scheme.
[[nodiscard]] std::string render_svg(const ErrorReport& report);

struct EmittedFiles {
    std::filesystem::path csv;
    std::filesystem::path svg;
};

/// Writes <stem>.csv and <stem>.svg into `dir` (created if missing).
/// Throws std::runtime_error on I/O failure.
EmittedFiles emit_report(const ErrorReport& report, const std::filesystem::path& dir, const std::string& stem);

}  // namespace rainbow
