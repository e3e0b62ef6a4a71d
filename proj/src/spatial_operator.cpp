#include "rainbow/spatial_operator.hpp"

#include <stdexcept>

namespace rainbow {

FDWeights central_first_derivative_weights(double h_i, double h_ip1) {
    return {-h_ip1 / (h_i * (h_i + h_ip1)), (h_ip1 - h_i) / (h_i * h_ip1), h_i / (h_ip1 * (h_i + h_ip1))};
}

FDWeights central_second_derivative_weights(double h_i, double h_ip1) {
    return {2.0 / (h_i * (h_i + h_ip1)), -2.0 / (h_i * h_ip1), 2.0 / (h_ip1 * (h_i + h_ip1))};
}

TridiagonalMatrix first_derivative_matrix(const AxisGrid& axis) {
    const std::size_t m = axis.cells();
    TridiagonalMatrix d(m + 1);
    for (std::size_t i = 1; i < m; ++i) {
        const FDWeights w = central_first_derivative_weights(axis.mesh[i - 1], axis.mesh[i]);
        d.lower[i] = w.w_minus1;
        d.diag[i] = w.w_0;
        d.upper[i] = w.w_plus1;
    }
    const double h_m = axis.mesh[m - 1];
    d.lower[m] = -1.0 / h_m;
    d.diag[m] = 1.0 / h_m;
    return d;
}

TridiagonalMatrix second_derivative_matrix(const AxisGrid& axis) {
    const std::size_t m = axis.cells();
    TridiagonalMatrix d(m + 1);
    for (std::size_t i = 1; i < m; ++i) {
        const FDWeights w = central_second_derivative_weights(axis.mesh[i - 1], axis.mesh[i]);
        d.lower[i] = w.w_minus1;
        d.diag[i] = w.w_0;
        d.upper[i] = w.w_plus1;
    }
    return d;
}

TridiagonalMatrix mixed_derivative_factor(const AxisGrid& axis) {
    TridiagonalMatrix d = first_derivative_matrix(axis);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double s = axis.nodes[i];
        d.lower[i] *= s;
        d.diag[i] *= s;
        d.upper[i] *= s;
    }
    return d;
}

TridiagonalMatrix direction_operator(const ModelParams& params, const AxisGrid& axis, Asset asset) {
    const double sigma = asset == Asset::One ? params.sigma1 : params.sigma2;
    const double drift = params.r - params.lambda * expected_relative_jump_size(params, asset);
    const double reaction = -0.5 * (params.r + params.lambda);
    const TridiagonalMatrix d1 = first_derivative_matrix(axis);
    const TridiagonalMatrix d2 = second_derivative_matrix(axis);
    TridiagonalMatrix b(d1.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double s = axis.nodes[i];
        const double diffusion = 0.5 * sigma * sigma * s * s;
        const double convection = drift * s;
        b.lower[i] = diffusion * d2.lower[i] + convection * d1.lower[i];
        b.diag[i] = diffusion * d2.diag[i] + convection * d1.diag[i] + reaction;
        b.upper[i] = diffusion * d2.upper[i] + convection * d1.upper[i];
    }
    return b;
}

namespace {

void push_row(std::vector<Triplet>& out, std::size_t row, std::size_t col, double value) {
    if (value != 0.0) out.push_back({row, col, value});
}

}  // namespace

OperatorSet assemble(const ModelParams& params, const SpatialGrid& grid) {
    params.validate();
    OperatorSet ops;
    ops.m1 = grid.m1();
    ops.m2 = grid.m2();
    ops.axis_op1 = direction_operator(params, grid.axis1, Asset::One);
    ops.axis_op2 = direction_operator(params, grid.axis2, Asset::Two);
    const TridiagonalMatrix c1 = mixed_derivative_factor(grid.axis1);
    const TridiagonalMatrix c2 = mixed_derivative_factor(grid.axis2);
    const double mixed_coef = params.rho * params.sigma1 * params.sigma2;

    const std::size_t n1 = ops.m1 + 1;
    const std::size_t n2 = ops.m2 + 1;
    const std::size_t n = n1 * n2;
    std::vector<Triplet> t1, t2, tm;
    t1.reserve(3 * n);
    t2.reserve(3 * n);
    tm.reserve(9 * n);

    const auto band = [](const TridiagonalMatrix& a, std::size_t row, int offset) {
        if (offset < 0) return a.lower[row];
        if (offset > 0) return a.upper[row];
        return a.diag[row];
    };

    for (std::size_t j = 0; j < n2; ++j) {
        for (std::size_t i = 0; i < n1; ++i) {
            const std::size_t row = grid.index(i, j);
            for (int di = -1; di <= 1; ++di) {
                if ((di < 0 && i == 0) || (di > 0 && i + 1 == n1)) continue;
                const std::size_t ii = i + static_cast<std::size_t>(di + 1) - 1;
                push_row(t1, row, grid.index(ii, j), band(ops.axis_op1, i, di));
            }
            for (int dj = -1; dj <= 1; ++dj) {
                if ((dj < 0 && j == 0) || (dj > 0 && j + 1 == n2)) continue;
                const std::size_t jj = j + static_cast<std::size_t>(dj + 1) - 1;
                push_row(t2, row, grid.index(i, jj), band(ops.axis_op2, j, dj));
            }
            for (int dj = -1; dj <= 1; ++dj) {
                if ((dj < 0 && j == 0) || (dj > 0 && j + 1 == n2)) continue;
                const double w2 = band(c2, j, dj);
                if (w2 == 0.0) continue;
                const std::size_t jj = j + static_cast<std::size_t>(dj + 1) - 1;
                for (int di = -1; di <= 1; ++di) {
                    if ((di < 0 && i == 0) || (di > 0 && i + 1 == n1)) continue;
                    const std::size_t ii = i + static_cast<std::size_t>(di + 1) - 1;
                    push_row(tm, row, grid.index(ii, jj), mixed_coef * w2 * band(c1, i, di));
                }
            }
        }
    }
    ops.dir1 = CsrMatrix(n, n, std::move(t1));
    ops.dir2 = CsrMatrix(n, n, std::move(t2));
    ops.mixed = CsrMatrix(n, n, std::move(tm));
    return ops;
}

CsrMatrix OperatorSet::full_d() const {
    std::vector<Triplet> all = mixed.triplets();
    for (const CsrMatrix* a : {&dir1, &dir2}) {
        const auto t = a->triplets();
        all.insert(all.end(), t.begin(), t.end());
    }
    return CsrMatrix(size(), size(), std::move(all));
}

void apply(const OperatorSet& ops, OperatorPart part, std::span<const double> v, std::span<double> out) {
    if (v.size() != ops.size() || out.size() != ops.size()) {
        throw std::invalid_argument("vector length does not match the grid");
    }
    switch (part) {
        case OperatorPart::Mixed: kernels::csr_matvec(ops.mixed, v, out); return;
        case OperatorPart::Dir1: kernels::csr_matvec(ops.dir1, v, out); return;
        case OperatorPart::Dir2: kernels::csr_matvec(ops.dir2, v, out); return;
        case OperatorPart::FullD: break;
    }
    std::vector<double> a(ops.size()), b(ops.size());
    kernels::csr_matvec(ops.mixed, v, out);
    kernels::csr_matvec(ops.dir1, v, a);
    kernels::csr_matvec(ops.dir2, v, b);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (out[k] + a[k]) + b[k];
}

std::vector<double> apply(const OperatorSet& ops, OperatorPart part, std::span<const double> v) {
    std::vector<double> out(ops.size());
    apply(ops, part, v, out);
    return out;
}

}  // namespace rainbow
