#include "rainbow/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rainbow/analytic.hpp"
#include "rainbow/errors.hpp"

namespace rainbow {

Problem make_problem(const ParameterSet& set, PayoffKind payoff, std::size_t m, const ProblemOptions& options) {
    Problem p;
    p.set = set;
    p.option = set.option_for(payoff);
    p.option.validate();
    p.spec = GridSpec{m, payoff, p.option.K, set.s_max(payoff), options.concentration};
    p.spec.validate();
    p.grid = build_grid(p.spec);
    p.ops = assemble(set.params, p.grid);
    p.jump = std::make_unique<JumpOperator>(set.params, p.grid, options.jump);
    p.v0 = cell_average_initial(p.grid, p.option);
    p.roi = roi_mask(p.grid, p.option.K);
    p.options = options;
    return p;
}

std::vector<double> solve(const Problem& problem, const SchemeConfig& cfg, std::size_t steps) {
    PideSystem sys(problem.ops, *problem.jump, problem.options.parallel);
    return run(cfg, sys, problem.v0, steps, problem.option.T);
}

std::size_t fair_steps(Scheme scheme, std::size_t N) {
    switch (scheme) {
        case Scheme::CNFI:
        case Scheme::IETR:
        case Scheme::MCS: return N;
        default: return 2 * N;
    }
}

double bilinear_readout(const SpatialGrid& grid, std::span<const double> v, double s1, double s2) {
    if (v.size() != grid.size()) throw std::invalid_argument("vector length does not match the grid");
    const auto locate = [](const AxisGrid& axis, double s) {
        if (!(s >= 0.0 && s <= axis.s_max())) throw std::out_of_range("query point outside the price domain");
        const auto& x = axis.nodes;
        std::size_t lo = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), s) - x.begin());
        lo = lo == 0 ? 0 : std::min(lo - 1, axis.cells() - 1);
        const double t = (s - x[lo]) / (x[lo + 1] - x[lo]);
        return std::pair{lo, t};
    };
    const auto [i, t1] = locate(grid.axis1, s1);
    const auto [j, t2] = locate(grid.axis2, s2);
    const auto at = [&](std::size_t a, std::size_t b) { return v[grid.index(a, b)]; };
    return (1.0 - t1) * (1.0 - t2) * at(i, j) + t1 * (1.0 - t2) * at(i + 1, j) + (1.0 - t1) * t2 * at(i, j + 1) +
           t1 * t2 * at(i + 1, j + 1);
}

double max_error(std::span<const double> v, std::span<const double> ref, std::span<const std::size_t> indices) {
    double e = 0.0;
    for (std::size_t k : indices) e = std::max(e, std::abs(v[k] - ref[k]));
    return e;
}

std::string_view to_string(ReferenceKind kind) { return kind == ReferenceKind::Mcs2 ? "mcs2" : "analytic"; }

void ExperimentConfig::validate() const {
    if (m < 4) throw std::invalid_argument("m must be at least 4");
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        if (n_list[k] == 0) throw std::invalid_argument("step counts must be positive");
        if (k > 0 && n_list[k] <= n_list[k - 1]) throw std::invalid_argument("N list must be strictly increasing");
    }
    for (std::size_t k = 0; k < m_list.size(); ++k) {
        if (m_list[k] < 4) throw std::invalid_argument("m values must be at least 4");
        if (k > 0 && m_list[k] <= m_list[k - 1]) throw std::invalid_argument("m list must be strictly increasing");
    }
    if (reference_steps < 2) throw std::invalid_argument("reference needs at least two steps");
}

const ErrorRow* ErrorReport::find(Scheme scheme, std::size_t m, std::size_t N) const {
    for (const auto& r : rows) {
        if (r.scheme == scheme && r.m == m && r.N == N) return &r;
    }
    return nullptr;
}

std::vector<double> analytic_on_grid(const Problem& problem, std::span<const std::size_t> nodes) {
    if (problem.option.payoff_kind != PayoffKind::PutOnMin) {
        throw std::invalid_argument("the semi-closed price exists only for the put-on-the-min");
    }
    std::vector<double> out(problem.grid.size(), std::numeric_limits<double>::quiet_NaN());
    const std::size_t n1 = problem.grid.m1() + 1;
    for (std::size_t k : nodes) {
        const double s1 = problem.grid.axis1.nodes[k % n1];
        const double s2 = problem.grid.axis2.nodes[k / n1];
        out[k] = put_on_min_value(problem.set.params, problem.option, s1, s2);
    }
    return out;
}

std::shared_ptr<const std::vector<double>> ReferenceCache::get(const Problem& problem, ReferenceKind kind,
                                                               std::size_t steps) {
    const Key key{static_cast<int>(problem.set.id), static_cast<int>(problem.option.payoff_kind), problem.spec.m,
                  static_cast<int>(kind), kind == ReferenceKind::Mcs2 ? steps : 0, problem.spec.concentration};
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    std::shared_ptr<const std::vector<double>> ref;
    if (kind == ReferenceKind::Mcs2) {
        ref = std::make_shared<const std::vector<double>>(solve(problem, SchemeConfig::make(Scheme::MCS2), steps));
    } else {
        ref = std::make_shared<const std::vector<double>>(analytic_on_grid(problem, problem.roi));
    }
    ++computations_;
    entries_.emplace(key, ref);
    return ref;
}

std::size_t ReferenceCache::computations() const {
    std::lock_guard lock(mutex_);
    return computations_;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

double order_between(double e_prev, double e, double x_prev, double x) {
    if (!(e_prev > 0.0) || !(e > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log(e_prev / e) / std::log(x / x_prev);
}

}  // namespace

ErrorReport temporal_error_study(const ExperimentConfig& config, ReferenceCache& cache) {
    config.validate();
    const ParameterSet set = parameter_set(config.set);
    const Problem problem = make_problem(set, config.payoff, config.m, config.problem);
    const auto ref = cache.get(problem, config.reference, config.reference_steps);

    ErrorReport report;
    report.study = "temporal";
    report.set = config.set;
    report.payoff = config.payoff;
    report.reference = config.reference;
    for (Scheme s : config.schemes) {
        const SchemeConfig cfg = SchemeConfig::make(s);
        double prev_error = 0.0;
        for (std::size_t k = 0; k < config.n_list.size(); ++k) {
            const std::size_t N = config.n_list[k];
            ErrorRow row;
            row.scheme = s;
            row.m = config.m;
            row.N = N;
            row.N_prime = fair_steps(s, N);
            const auto start = std::chrono::steady_clock::now();
            const std::vector<double> v = solve(problem, cfg, row.N_prime);
            row.wall_ms = config.record_wall_time ? elapsed_ms(start) : 0.0;
            row.error = max_error(v, *ref, problem.roi);
            row.observed_order = k == 0 ? std::numeric_limits<double>::quiet_NaN()
                                        : order_between(prev_error, row.error,
                                                        static_cast<double>(config.n_list[k - 1]),
                                                        static_cast<double>(N));
            prev_error = row.error;
            report.rows.push_back(row);
        }
    }
    return report;
}

ErrorReport temporal_error_study(const ExperimentConfig& config) {
    ReferenceCache cache;
    return temporal_error_study(config, cache);
}

ErrorReport total_error_study(const ExperimentConfig& config) {
    config.validate();
    if (config.payoff != PayoffKind::PutOnMin) {
        throw std::invalid_argument("total-error study needs the put-on-the-min (analytic reference)");
    }
    const ParameterSet set = parameter_set(config.set);
    ErrorReport report;
    report.study = "total";
    report.set = config.set;
    report.payoff = config.payoff;
    report.reference = ReferenceKind::Analytic;

    std::map<Scheme, double> prev_error;
    for (std::size_t k = 0; k < config.m_list.size(); ++k) {
        const std::size_t m = config.m_list[k];
        const Problem problem = make_problem(set, config.payoff, m, config.problem);
        const std::vector<double> exact = analytic_on_grid(problem, problem.roi);
        const std::size_t N = (m + 2) / 3;
        for (Scheme s : config.schemes) {
            ErrorRow row;
            row.scheme = s;
            row.m = m;
            row.N = N;
            row.N_prime = fair_steps(s, N);
            const auto start = std::chrono::steady_clock::now();
            const std::vector<double> v = solve(problem, SchemeConfig::make(s), row.N_prime);
            row.wall_ms = config.record_wall_time ? elapsed_ms(start) : 0.0;
            row.error = max_error(v, exact, problem.roi);
            row.observed_order = k == 0 ? std::numeric_limits<double>::quiet_NaN()
                                        : order_between(prev_error[s], row.error,
                                                        static_cast<double>(config.m_list[k - 1]),
                                                        static_cast<double>(m));
            prev_error[s] = row.error;
            report.rows.push_back(row);
        }
    }
    // Group rows per scheme, in sweep order.
    std::stable_sort(report.rows.begin(), report.rows.end(), [&](const ErrorRow& a, const ErrorRow& b) {
        const auto rank = [&](Scheme s) {
            return std::find(config.schemes.begin(), config.schemes.end(), s) - config.schemes.begin();
        };
        return rank(a.scheme) < rank(b.scheme);
    });
    return report;
}

double price(const PriceQuery& query) {
    const Problem problem = make_problem(query.set, query.payoff, query.m, query.problem);
    const double smax = problem.grid.s_max();
    if (!(query.s1 >= 0.0 && query.s1 <= smax && query.s2 >= 0.0 && query.s2 <= smax)) {
        throw std::out_of_range("query point outside the price domain");
    }
    const std::vector<double> v = solve(problem, SchemeConfig::make(query.scheme), query.N);
    return bilinear_readout(problem.grid, v, query.s1, query.s2);
}

// ---------------------------------------------------------------------------

namespace {

std::string format_double(double x) {
    if (std::isnan(x)) return "";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

std::string format_fixed(double x, int digits) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::fixed, digits);
    return std::string(buf.data(), res.ptr);
}

}  // namespace

void write_csv(const ErrorReport& report, std::ostream& out) {
    out << "set,payoff,scheme,m,N,N_prime,error,observed_order,wall_ms\n";
    for (const auto& r : report.rows) {
        out << to_string(report.set) << ',' << to_string(report.payoff) << ',' << to_string(r.scheme) << ','
            << r.m << ',' << r.N << ',' << r.N_prime << ',' << format_double(r.error) << ','
            << format_double(r.observed_order) << ',' << format_fixed(r.wall_ms, 3) << '\n';
    }
}

std::string render_svg(const ErrorReport& report) {
    constexpr double width = 640, height = 480;
    constexpr double left = 80, right = 150, top = 40, bottom = 60;
    constexpr std::array<const char*, 7> colors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                   "#9467bd", "#8c564b", "#e377c2"};
    const bool total = report.study == "total";

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& r : report.rows) {
        if (!(r.error > 0.0)) continue;
        const double x = std::log10(static_cast<double>(total ? r.m : r.N));
        const double y = std::log10(r.error);
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = -1;
        ymax = 0;
    }
    xmin = std::floor(xmin);
    xmax = std::max(std::ceil(xmax), xmin + 1);
    ymin = std::floor(ymin);
    ymax = std::max(std::ceil(ymax), ymin + 1);
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };
    const auto f = [](double v) { return format_fixed(v, 2); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << f(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">Set "
      << to_string(report.set) << ", put-on-the-" << (report.payoff == PayoffKind::PutOnMin ? "min" : "average")
      << ", " << report.study << " error</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double d = xmin; d <= xmax + 1e-9; d += 1.0) {
        s << "<line x1=\"" << f(px(d)) << "\" y1=\"" << top << "\" x2=\"" << f(px(d)) << "\" y2=\""
          << top + ph << "\" stroke=\"#ddd\"/>\n";
        s << "<text x=\"" << f(px(d)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">1e"
          << static_cast<int>(d) << "</text>\n";
    }
    for (double d = ymin; d <= ymax + 1e-9; d += 1.0) {
        s << "<line x1=\"" << left << "\" y1=\"" << f(py(d)) << "\" x2=\"" << left + pw << "\" y2=\""
          << f(py(d)) << "\" stroke=\"#ddd\"/>\n";
        s << "<text x=\"" << left - 8 << "\" y=\"" << f(py(d) + 4) << "\" text-anchor=\"end\">1e"
          << static_cast<int>(d) << "</text>\n";
    }
    s << "<text x=\"" << f(left + pw / 2) << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
      << (total ? "m" : "N") << "</text>\n";
    s << "<text x=\"20\" y=\"" << f(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << f(top + ph / 2) << ")\">error</text>\n";

    std::vector<Scheme> order;
    for (const auto& r : report.rows) {
        if (std::find(order.begin(), order.end(), r.scheme) == order.end()) order.push_back(r.scheme);
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
        const char* color = colors[static_cast<std::size_t>(order[k]) % colors.size()];
        std::string points;
        for (const auto& r : report.rows) {
            if (r.scheme != order[k] || !(r.error > 0.0)) continue;
            const double x = px(std::log10(static_cast<double>(total ? r.m : r.N)));
            const double y = py(std::log10(r.error));
            points += f(x) + "," + f(y) + " ";
            s << "<circle cx=\"" << f(x) << "\" cy=\"" << f(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        if (!points.empty()) points.pop_back();
        s << "<polyline points=\"" << points << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
        const double ly = top + 10 + 18 * static_cast<double>(k);
        s << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << f(ly) << "\" x2=\"" << left + pw + 40 << "\" y2=\""
          << f(ly) << "\" stroke=\"" << color << "\"/>\n";
        s << "<text x=\"" << left + pw + 45 << "\" y=\"" << f(ly + 4) << "\">" << to_string(order[k])
          << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

EmittedFiles emit_report(const ErrorReport& report, const std::filesystem::path& dir, const std::string& stem) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    EmittedFiles files{dir / (stem + ".csv"), dir / (stem + ".svg")};
    {
        std::ofstream csv(files.csv, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot open " + files.csv.string());
        write_csv(report, csv);
        if (!csv) throw std::runtime_error("write failed for " + files.csv.string());
    }
    {
        std::ofstream svg(files.svg, std::ios::binary);
        if (!svg) throw std::runtime_error("cannot open " + files.svg.string());
        svg << render_svg(report);
        if (!svg) throw std::runtime_error("write failed for " + files.svg.string());
    }
    return files;
}

}  // namespace rainbow
