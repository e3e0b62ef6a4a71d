#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rainbow {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix. Column indices within a row are sorted
/// and unique.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t nonzeros() const { return values_.size(); }

    [[nodiscard]] std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    [[nodiscard]] std::span<const std::uint32_t> col_index() const { return col_index_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }

    /// Entry (row, col), zero when not stored.
    [[nodiscard]] double coeff(std::size_t row, std::size_t col) const;

    /// Triplets of all stored entries in row-major order.
    [[nodiscard]] std::vector<Triplet> triplets() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_index_;
    std::vector<double> values_;
};

namespace kernels {

/// out = A * in, one thread.
void csr_matvec_serial(const CsrMatrix& a, std::span<const double> in, std::span<double> out);

/// out = A * in, rows distributed over OpenMP threads. Bitwise equal to the
/// serial kernel (each row is summed in the same order).
void csr_matvec(const CsrMatrix& a, std::span<const double> in, std::span<double> out);

}  // namespace kernels

}  // namespace rainbow
