#pragma once

#include <span>
#include <vector>

#include "rainbow/grid.hpp"
#include "rainbow/model.hpp"
#include "rainbow/sparse.hpp"
#include "rainbow/tridiagonal.hpp"

namespace rainbow {

/// Three-point stencil weights on the nodes s_{i-1}, s_i, s_{i+1}.
struct FDWeights {
    double w_minus1 = 0.0;
    double w_0 = 0.0;
    double w_plus1 = 0.0;
};

/// u'(s_i) on a nonuniform stencil with left width h_i and right width h_ip1.
[[nodiscard]] FDWeights central_first_derivative_weights(double h_i, double h_ip1);

/// u''(s_i) on a nonuniform stencil.
[[nodiscard]] FDWeights central_second_derivative_weights(double h_i, double h_ip1);

/// First-derivative matrix: zero row at s = 0, central rows in the interior
/// and the first-order backward difference at s = S_max.
[[nodiscard]] TridiagonalMatrix first_derivative_matrix(const AxisGrid& axis);

/// Second-derivative matrix: central rows in the interior, zero rows at both
/// ends (degenerate at s = 0, linear boundary condition at s = S_max).
[[nodiscard]] TridiagonalMatrix second_derivative_matrix(const AxisGrid& axis);

/// X D^(1), the one-directional factor of the mixed-derivative matrix. All
/// boundary handling of the mixed term lives here.
[[nodiscard]] TridiagonalMatrix mixed_derivative_factor(const AxisGrid& axis);

/// 1/2 sigma^2 X^2 D^(2) + (r - lambda kappa) X D^(1) - 1/2 (r + lambda) I for one asset.
[[nodiscard]] TridiagonalMatrix direction_operator(const ModelParams& params, const AxisGrid& axis,
                                                   Asset asset);

enum class OperatorPart { Mixed, Dir1, Dir2, FullD };

/// Semidiscrete convection-diffusion-reaction operator split into the mixed
/// part and one part per direction. Vectors are grid-ordered,
/// index = i + j (m1 + 1).
struct OperatorSet {
    std::size_t m1 = 0;
    std::size_t m2 = 0;
    CsrMatrix mixed;
    CsrMatrix dir1;
    CsrMatrix dir2;
    /// Per-direction tridiagonal blocks: dir1 = I (x) axis_op1, dir2 = axis_op2 (x) I.
    TridiagonalMatrix axis_op1;
    TridiagonalMatrix axis_op2;

    [[nodiscard]] std::size_t size() const { return (m1 + 1) * (m2 + 1); }
    /// mixed + dir1 + dir2 as one matrix.
    [[nodiscard]] CsrMatrix full_d() const;
};

[[nodiscard]] OperatorSet assemble(const ModelParams& params, const SpatialGrid& grid);

/// out = part * v. FullD sums Mixed, Dir1, Dir2 in that order.
/// Throws std::invalid_argument on a length mismatch.
void apply(const OperatorSet& ops, OperatorPart part, std::span<const double> v, std::span<double> out);

[[nodiscard]] std::vector<double> apply(const OperatorSet& ops, OperatorPart part, std::span<const double> v);

}  // namespace rainbow
