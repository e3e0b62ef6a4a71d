#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rainbow {

/// Tridiagonal n x n matrix; lower[0] and upper[n-1] are unused.
struct TridiagonalMatrix {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    explicit TridiagonalMatrix(std::size_t n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
    [[nodiscard]] std::size_t size() const { return diag.size(); }
};

/// LU factorization (no pivoting) of I - c * B for a tridiagonal B, reused
/// for every line of a direction-split stage.
class TridiagonalLU {
public:
    TridiagonalLU() = default;
    /// Throws NumericalError on a vanishing pivot.
    TridiagonalLU(const TridiagonalMatrix& b, double c);

    [[nodiscard]] std::size_t size() const { return pivot_inv_.size(); }

    /// In-place solve for one line whose entries are `stride` apart.
    void solve_line(double* x, std::size_t stride) const;

private:
    std::vector<double> lower_;      // multipliers l_i
    std::vector<double> upper_;      // super-diagonal of U
    std::vector<double> pivot_inv_;  // 1 / u_ii
};

/// Layout of independent lines inside a flat vector: line k starts at
/// k * line_step and its entries are `stride` apart.
struct LineLayout {
    std::size_t lines = 0;
    std::size_t line_step = 0;
    std::size_t stride = 1;
};

namespace kernels {

void solve_lines_serial(const TridiagonalLU& lu, LineLayout layout, std::span<double> x);

/// Lines distributed over OpenMP threads.
void solve_lines(const TridiagonalLU& lu, LineLayout layout, std::span<double> x);

}  // namespace kernels

}  // namespace rainbow
