#include "rainbow/sparse.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace rainbow {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols) {
    if (cols > std::numeric_limits<std::uint32_t>::max()) {
        throw std::length_error("sparse matrix too wide for 32-bit column indices");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_ptr_.assign(rows + 1, 0);
    col_index_.reserve(entries.size());
    values_.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const Triplet& t = entries[k];
        if (t.row >= rows || t.col >= cols) throw std::out_of_range("triplet outside matrix");
        if (!values_.empty() && k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
            values_.back() += t.value;
            continue;
        }
        col_index_.push_back(static_cast<std::uint32_t>(t.col));
        values_.push_back(t.value);
        ++row_ptr_[t.row + 1];
    }
    for (std::size_t r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

double CsrMatrix::coeff(std::size_t row, std::size_t col) const {
    const auto begin = col_index_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
    const auto end = col_index_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
    const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(col));
    if (it == end || *it != col) return 0.0;
    return values_[static_cast<std::size_t>(it - col_index_.begin())];
}

std::vector<Triplet> CsrMatrix::triplets() const {
    std::vector<Triplet> out;
    out.reserve(values_.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            out.push_back({r, col_index_[k], values_[k]});
        }
    }
    return out;
}

namespace kernels {

namespace {

void check_shapes(const CsrMatrix& a, std::span<const double> in, std::span<double> out) {
    if (in.size() != a.cols() || out.size() != a.rows()) {
        throw std::invalid_argument("matrix-vector length mismatch");
    }
}

inline double row_dot(const std::size_t* ptr, const std::uint32_t* col, const double* val,
                      const double* x, std::size_t r) {
    double sum = 0.0;
    for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) sum += val[k] * x[col[k]];
    return sum;
}

}  // namespace

void csr_matvec_serial(const CsrMatrix& a, std::span<const double> in, std::span<double> out) {
    check_shapes(a, in, out);
    const auto* ptr = a.row_ptr().data();
    const auto* col = a.col_index().data();
    const auto* val = a.values().data();
    for (std::size_t r = 0; r < a.rows(); ++r) out[r] = row_dot(ptr, col, val, in.data(), r);
}

void csr_matvec(const CsrMatrix& a, std::span<const double> in, std::span<double> out) {
    check_shapes(a, in, out);
    const auto* ptr = a.row_ptr().data();
    const auto* col = a.col_index().data();
    const auto* val = a.values().data();
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        out[static_cast<std::size_t>(r)] =
            row_dot(ptr, col, val, in.data(), static_cast<std::size_t>(r));
    }
}

}  // namespace kernels

}  // namespace rainbow
