#include "rainbow/tridiagonal.hpp"

#include <cmath>
#include <stdexcept>

#include "rainbow/errors.hpp"

namespace rainbow {

TridiagonalLU::TridiagonalLU(const TridiagonalMatrix& b, double c) {
    const std::size_t n = b.size();
    lower_.assign(n, 0.0);
    upper_.assign(n, 0.0);
    pivot_inv_.assign(n, 0.0);
    double prev_upper = 0.0;
    double prev_pivot_inv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a_i = i > 0 ? -c * b.lower[i] : 0.0;
        const double d_i = 1.0 - c * b.diag[i];
        const double u_i = i + 1 < n ? -c * b.upper[i] : 0.0;
        const double l_i = a_i * prev_pivot_inv;
        const double pivot = d_i - l_i * prev_upper;
        if (!(std::abs(pivot) > 1e-300)) throw NumericalError("zero pivot in tridiagonal factorization");
        lower_[i] = l_i;
        upper_[i] = u_i;
        pivot_inv_[i] = 1.0 / pivot;
        prev_upper = u_i;
        prev_pivot_inv = pivot_inv_[i];
    }
}

void TridiagonalLU::solve_line(double* x, std::size_t stride) const {
    const std::size_t n = pivot_inv_.size();
    for (std::size_t i = 1; i < n; ++i) x[i * stride] -= lower_[i] * x[(i - 1) * stride];
    x[(n - 1) * stride] *= pivot_inv_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i * stride] = (x[i * stride] - upper_[i] * x[(i + 1) * stride]) * pivot_inv_[i];
    }
}

namespace kernels {

namespace {

void check_layout(const TridiagonalLU& lu, LineLayout layout, std::span<double> x) {
    if (layout.lines == 0) return;
    const std::size_t last = (layout.lines - 1) * layout.line_step + (lu.size() - 1) * layout.stride;
    if (last >= x.size()) throw std::invalid_argument("line layout exceeds vector length");
}

}  // namespace

void solve_lines_serial(const TridiagonalLU& lu, LineLayout layout, std::span<double> x) {
    check_layout(lu, layout, x);
    for (std::size_t k = 0; k < layout.lines; ++k) {
        lu.solve_line(x.data() + k * layout.line_step, layout.stride);
    }
}

void solve_lines(const TridiagonalLU& lu, LineLayout layout, std::span<double> x) {
    check_layout(lu, layout, x);
    const auto lines = static_cast<std::ptrdiff_t>(layout.lines);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < lines; ++k) {
        lu.solve_line(x.data() + static_cast<std::size_t>(k) * layout.line_step, layout.stride);
    }
}

}  // namespace kernels

}  // namespace rainbow
