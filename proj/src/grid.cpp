#include "rainbow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rainbow/errors.hpp"

namespace rainbow {

void GridSpec::validate() const {
    if (m < 4) throw std::invalid_argument("grid needs at least 4 cells per direction");
    if (!(K > 0.0)) throw std::invalid_argument("strike must be positive");
    if (!(S_max > 2.0 * K)) throw std::invalid_argument("S_max must exceed 2K");
}

double default_concentration(PayoffKind kind, double K) {
    // Put-on-the-min: clustering width around the strike. Put-on-the-average:
    // unused (the outer stretch is fixed by slope matching).
    return kind == PayoffKind::PutOnMin ? K / 5.0 : 0.0;
}

AxisGrid make_axis(std::vector<double> nodes) {
    if (nodes.size() < 2 || nodes.front() != 0.0) {
        throw std::invalid_argument("axis must start at 0 and have at least one cell");
    }
    AxisGrid axis;
    axis.nodes = std::move(nodes);
    const std::size_t m = axis.nodes.size() - 1;
    axis.mesh.resize(m);
    for (std::size_t l = 0; l < m; ++l) {
        axis.mesh[l] = axis.nodes[l + 1] - axis.nodes[l];
        if (!(axis.mesh[l] > 0.0)) throw NumericalError("grid nodes are not strictly increasing");
    }
    axis.cell_edges.resize(m + 2);
    axis.cell_edges[0] = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
        axis.cell_edges[l + 1] = 0.5 * (axis.nodes[l] + axis.nodes[l + 1]);
    }
    axis.cell_edges[m + 1] = axis.nodes[m];
    return axis;
}

namespace {

std::vector<double> put_on_min_nodes(const GridSpec& spec, double c) {
    const std::size_t m = spec.m;
    const double xi_lo = std::asinh(-spec.K / c);
    const double xi_hi = std::asinh((spec.S_max - spec.K) / c);
    std::vector<double> nodes(m + 1);
    for (std::size_t l = 0; l <= m; ++l) {
        const double xi = xi_lo + (xi_hi - xi_lo) * static_cast<double>(l) / static_cast<double>(m);
        nodes[l] = spec.K + c * std::sinh(xi);
    }
    nodes.front() = 0.0;
    nodes.back() = spec.S_max;
    return nodes;
}

// Width parameter d of s = 2K + d sinh(zeta) on (2K, S_max] such that the
// first outer mesh width equals `h0`. Returns 0 when even a uniform outer
// grid would be finer than h0.
double outer_stretch(double length, std::size_t cells, double h0) {
    const auto first_width = [&](double d) {
        return d * std::sinh(std::asinh(length / d) / static_cast<double>(cells));
    };
    if (h0 >= length / static_cast<double>(cells)) return 0.0;
    double lo = std::log(length * 1e-12);
    double hi = std::log(length * 1e12);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (first_width(std::exp(mid)) < h0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::exp(0.5 * (lo + hi));
}

std::vector<double> put_on_average_nodes(const GridSpec& spec) {
    const std::size_t m = spec.m;
    const std::size_t inner = (m + 1) / 2;
    const std::size_t outer = m - inner;
    const double two_k = 2.0 * spec.K;
    const double h0 = two_k / static_cast<double>(inner);

    std::vector<double> nodes(m + 1);
    for (std::size_t l = 0; l <= inner; ++l) {
        nodes[l] = two_k * static_cast<double>(l) / static_cast<double>(inner);
    }
    const double length = spec.S_max - two_k;
    const double d = outer_stretch(length, outer, h0);
    for (std::size_t l = 1; l <= outer; ++l) {
        const double frac = static_cast<double>(l) / static_cast<double>(outer);
        nodes[inner + l] = d > 0.0 ? two_k + d * std::sinh(frac * std::asinh(length / d))
                                   : two_k + frac * length;
    }
    nodes.back() = spec.S_max;
    return nodes;
}

// Integral of (c - x - y)_+ over [0, w1] x [0, w2].
double ramp_integral(double c, double w1, double w2) {
    const auto p = [](double t) { return t > 0.0 ? t * t * t / 6.0 : 0.0; };
    return p(c - w1 - w2) - p(c - w1) - p(c - w2) + p(c);
}

// Integral over [a, b] of (K - x)_+ * |{y in [c, d] : y > x}|, exact for the
// piecewise quadratic integrand via Simpson's rule between breakpoints.
double min_branch_integral(double K, double a, double b, double c, double d) {
    const auto f = [&](double x) {
        const double len = std::clamp(d - std::max(x, c), 0.0, d - c);
        return std::max(0.0, K - x) * len;
    };
    double breaks[5] = {a, b, a, a, a};
    int count = 2;
    for (double t : {c, d, K}) {
        if (t > a && t < b) breaks[count++] = t;
    }
    std::sort(breaks, breaks + count);
    double total = 0.0;
    for (int k = 0; k + 1 < count; ++k) {
        const double lo = breaks[k];
        const double hi = breaks[k + 1];
        if (hi <= lo) continue;
        total += (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
    }
    return total;
}

}  // namespace

AxisGrid build_axis(const GridSpec& spec) {
    spec.validate();
    if (spec.payoff_kind == PayoffKind::PutOnMin) {
        const double c = spec.concentration > 0.0 ? spec.concentration
                                                  : default_concentration(spec.payoff_kind, spec.K);
        return make_axis(put_on_min_nodes(spec, c));
    }
    return make_axis(put_on_average_nodes(spec));
}

SpatialGrid build_grid(const GridSpec& spec) {
    AxisGrid axis = build_axis(spec);
    return SpatialGrid{axis, axis};
}

bool cell_meets_kink(const OptionSpec& option, double a1, double b1, double a2, double b2) {
    const double K = option.K;
    if (option.payoff_kind == PayoffKind::PutOnAverage) {
        return a1 + a2 <= 2.0 * K && 2.0 * K < b1 + b2;
    }
    // Lines s1 = K and s2 = K only; the diagonal is left to the grid.
    return (a1 <= K && K < b1) || (a2 <= K && K < b2);
}

double payoff_integral(const OptionSpec& option, double a1, double b1, double a2, double b2) {
    const double K = option.K;
    if (option.payoff_kind == PayoffKind::PutOnAverage) {
        return 0.5 * ramp_integral(2.0 * K - a1 - a2, b1 - a1, b2 - a2);
    }
    // Split on which coordinate attains the minimum.
    return min_branch_integral(K, a1, b1, a2, b2) + min_branch_integral(K, a2, b2, a1, b1);
}

std::vector<double> cell_average_initial(const SpatialGrid& grid, const OptionSpec& option) {
    const auto& ax1 = grid.axis1;
    const auto& ax2 = grid.axis2;
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j <= grid.m2(); ++j) {
        const double a2 = ax2.cell_edges[j];
        const double b2 = ax2.cell_edges[j + 1];
        for (std::size_t i = 0; i <= grid.m1(); ++i) {
            const double a1 = ax1.cell_edges[i];
            const double b1 = ax1.cell_edges[i + 1];
            double value;
            if (cell_meets_kink(option, a1, b1, a2, b2)) {
                value = payoff_integral(option, a1, b1, a2, b2) / ((b1 - a1) * (b2 - a2));
            } else {
                value = payoff(option, ax1.nodes[i], ax2.nodes[j]);
            }
            v[grid.index(i, j)] = value;
        }
    }
    return v;
}

std::vector<std::size_t> roi_mask(const SpatialGrid& grid, double K) {
    const auto inside = [K](double s) { return 0.5 * K < s && s < 1.5 * K; };
    std::vector<std::size_t> mask;
    for (std::size_t j = 0; j <= grid.m2(); ++j) {
        if (!inside(grid.axis2.nodes[j])) continue;
        for (std::size_t i = 0; i <= grid.m1(); ++i) {
            if (inside(grid.axis1.nodes[i])) mask.push_back(grid.index(i, j));
        }
    }
    if (mask.empty()) throw NumericalError("region of interest contains no grid node");
    return mask;
}

}  // namespace rainbow
