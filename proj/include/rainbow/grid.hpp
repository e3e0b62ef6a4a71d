#pragma once

#include <cstddef>
#include <vector>

#include "rainbow/model.hpp"

namespace rainbow {

/// Nonuniform grid 0 = s_0 < s_1 < ... < s_m = S_max in one direction.
struct AxisGrid {
    std::vector<double> nodes;       // m + 1 nodes
    std::vector<double> mesh;        // mesh[l] = s_{l+1} - s_l, l = 0..m-1
    std::vector<double> cell_edges;  // m + 2 entries: 0, s_{1/2}, ..., s_{m-1/2}, S_max

    [[nodiscard]] std::size_t cells() const { return nodes.size() - 1; }
    [[nodiscard]] double s_max() const { return nodes.back(); }
    /// Half-cell width h_{l+1/2} = s_{l+1/2} - s_{l-1/2}.
    [[nodiscard]] double cell_width(std::size_t l) const { return cell_edges[l + 1] - cell_edges[l]; }
};

/// Cartesian product grid; flat index of node (i, j) is i + j * (m1 + 1).
struct SpatialGrid {
    AxisGrid axis1;
    AxisGrid axis2;

    [[nodiscard]] std::size_t m1() const { return axis1.cells(); }
    [[nodiscard]] std::size_t m2() const { return axis2.cells(); }
    [[nodiscard]] std::size_t size() const { return (m1() + 1) * (m2() + 1); }
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const { return i + j * (m1() + 1); }
    [[nodiscard]] double s_max() const { return axis1.s_max(); }
};

struct GridSpec {
    std::size_t m = 0;  // cells per direction
    PayoffKind payoff_kind = PayoffKind::PutOnMin;
    double K = 0.0;
    double S_max = 0.0;
    /// Stretch parameter of the sinh map; <= 0 selects the payoff default.
    double concentration = 0.0;

    void validate() const;
};

/// Default sinh stretch parameter for a payoff.
[[nodiscard]] double default_concentration(PayoffKind kind, double K);

/// Builds an axis from arbitrary strictly increasing nodes starting at 0.
[[nodiscard]] AxisGrid make_axis(std::vector<double> nodes);

/// Payoff-adapted axis: sinh clustering around K for the put-on-the-min,
/// uniform on [0, 2K] with a slope-matched sinh stretch beyond for the
/// put-on-the-average.
[[nodiscard]] AxisGrid build_axis(const GridSpec& spec);

/// Same axis in both directions.
[[nodiscard]] SpatialGrid build_grid(const GridSpec& spec);

/// Initial vector V(0): pointwise payoff, replaced by the exact cell average
/// wherever a node's cell meets the payoff's kink set.
[[nodiscard]] std::vector<double> cell_average_initial(const SpatialGrid& grid, const OptionSpec& option);

/// True when the cell [a1, b1) x [a2, b2) meets the set where the payoff is
/// not differentiable.
[[nodiscard]] bool cell_meets_kink(const OptionSpec& option, double a1, double b1, double a2, double b2);

/// Exact integral of the payoff over the rectangle [a1, b1] x [a2, b2].
[[nodiscard]] double payoff_integral(const OptionSpec& option, double a1, double b1, double a2, double b2);

/// Flat indices of nodes with K/2 < s1, s2 < 3K/2 (strict), ascending.
/// Throws NumericalError when no node qualifies.
[[nodiscard]] std::vector<std::size_t> roi_mask(const SpatialGrid& grid, double K);

}  // namespace rainbow
