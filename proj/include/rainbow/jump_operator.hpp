#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "rainbow/fft.hpp"
#include "rainbow/grid.hpp"
#include "rainbow/model.hpp"
#include "rainbow/sparse.hpp"

namespace rainbow {

/// Uniform log-price axis x_k = k dx, k = -M/2+1 .. M/2, stored at
/// positions p = k + M/2 - 1 = 0 .. M-1.
struct LogAxis {
    std::size_t M = 0;
    double dx = 0.0;
    double x_max = 0.0;

    [[nodiscard]] double x(std::size_t p) const {
        return (static_cast<double>(p) + 1.0 - static_cast<double>(M / 2)) * dx;
    }
};

struct LogGrid {
    LogAxis axis1;
    LogAxis axis2;
    [[nodiscard]] std::size_t size() const { return axis1.M * axis2.M; }
};

/// Smallest power of two M with 2 ln(S_max) / M strictly below the smallest
/// mesh width of ln s_1 < ... < ln s_m. Throws NumericalError when M would
/// exceed `max_nodes`, std::invalid_argument when S_max <= 1.
[[nodiscard]] LogAxis build_log_axis(const AxisGrid& axis, std::size_t max_nodes = std::size_t{1} << 16);

[[nodiscard]] LogGrid build_log_grid(const SpatialGrid& grid, std::size_t max_nodes = std::size_t{1} << 16);

/// Lag kernel F_{c,d} for c = -M1+1..M1-1, d = -M2+1..M2-1 together with the
/// intensity. The operator it defines is the cross-correlation
/// J_{k,l} = lambda sum_{i,j} V_{i,j} F_{i-k, j-l}.
struct ToeplitzKernel {
    std::size_t M1 = 0;
    std::size_t M2 = 0;
    double lambda = 1.0;
    std::vector<double> values;

    ToeplitzKernel() = default;
    ToeplitzKernel(std::size_t m1, std::size_t m2, double lambda_)
        : M1(m1), M2(m2), lambda(lambda_), values((2 * m1 - 1) * (2 * m2 - 1), 0.0) {}

    [[nodiscard]] std::size_t offset(std::ptrdiff_t c, std::ptrdiff_t d) const {
        const auto w = static_cast<std::ptrdiff_t>(2 * M1 - 1);
        return static_cast<std::size_t>((c + static_cast<std::ptrdiff_t>(M1) - 1) +
                                        w * (d + static_cast<std::ptrdiff_t>(M2) - 1));
    }
    [[nodiscard]] double at(std::ptrdiff_t c, std::ptrdiff_t d) const { return values[offset(c, d)]; }
    double& at(std::ptrdiff_t c, std::ptrdiff_t d) { return values[offset(c, d)]; }
    [[nodiscard]] double mass() const;
};

/// Lags where the log-jump density is below exp(-kKernelTailExponent) times
/// its peak are stored as exact zeros, so the circulant can be shorter.
inline constexpr double kKernelTailExponent = 46.0;

/// F_{c,d} = fbar(c dx1, d dx2) dx1 dx2 with fbar the log-jump density,
/// cut to zero in the far tail (see kKernelTailExponent).
[[nodiscard]] ToeplitzKernel build_kernel(const ModelParams& params, const LogGrid& lg);

/// Direct O((M1 M2)^2) evaluation of the correlation. Serial reference.
[[nodiscard]] std::vector<double> blocktoeplitz_matvec_direct(const ToeplitzKernel& kernel,
                                                              std::span<const double> v_bar);

/// Product of lambda F with a vector laid out as k + M1 l, by circulant
/// embedding and one-dimensional FFTs. Each level is embedded into length
/// 2 M, or less when the lags beyond L are exactly zero (then M + L,
/// rounded up to 2^a, 3 * 2^a or 5 * 2^a). The kernel spectrum and the
/// plans are computed once; apply() is thread-safe.
class BlockToeplitzFft {
public:
    /// threads <= 0 uses the OpenMP default; threads == 1 is fully serial.
    explicit BlockToeplitzFft(const ToeplitzKernel& kernel, int threads = 1);
    ~BlockToeplitzFft();
    BlockToeplitzFft(const BlockToeplitzFft&) = delete;
    BlockToeplitzFft& operator=(const BlockToeplitzFft&) = delete;

    [[nodiscard]] std::size_t M1() const { return M1_; }
    [[nodiscard]] std::size_t M2() const { return M2_; }
    /// Circulant lengths actually used.
    [[nodiscard]] std::size_t P1() const { return P1_; }
    [[nodiscard]] std::size_t P2() const { return P2_; }

    /// Throws std::invalid_argument on a length mismatch.
    void apply(std::span<const double> v_bar, std::span<double> out) const;

    /// `fill` writes the M2 rows (M1 values each, rows `stride` apart) of the
    /// input; `read` receives the result in the same layout.
    using RowWriter = std::function<void(double* rows, std::size_t stride)>;
    using RowReader = std::function<void(const double* rows, std::size_t stride)>;
    void apply_rows(const RowWriter& fill, const RowReader& read) const;

    /// Two-point row interpolation: row k is w_k src[lower_k] + (1 - w_k) src[lower_k + 1].
    struct RowBlend {
        std::span<const std::uint32_t> lower;
        std::span<const double> weight;
    };
    /// Same product with the rows blended on both sides: the input row q is
    /// `in` applied to the `n_src` rows written by `fill`, and `read` gets
    /// `out.lower.size()` rows, `out` applied to the result. By linearity the
    /// blends commute with the row DFTs, so only n_src forward and
    /// out.lower.size() backward row transforms are done.
    void apply_blended(const RowWriter& fill, std::size_t n_src, const RowBlend& in, const RowBlend& out,
                       const RowReader& read) const;

private:
    struct Workspace;
    struct BlendPlans;
    const BlendPlans& blend_plans(std::size_t n_src, std::size_t n_dst) const;
    std::unique_ptr<Workspace> make_workspace() const;
    std::unique_ptr<Workspace> acquire() const;
    void release(std::unique_ptr<Workspace> ws) const;

    std::size_t M1_ = 0, M2_ = 0, P1_ = 0, P2_ = 0, R_ = 0;
    int threads_ = 1;
    bool parallel_ = false;
    fft::ComplexBuffer spectrum_;
    fft::Plan rows_forward_, cols_forward_, cols_backward_, rows_backward_;
    mutable std::mutex pool_mutex_;
    mutable std::vector<std::unique_ptr<Workspace>> pool_;
    mutable std::vector<std::unique_ptr<BlendPlans>> blend_plans_;
};

/// out = lambda F v_bar through a freshly built FFT operator.
[[nodiscard]] std::vector<double> blocktoeplitz_matvec(const ToeplitzKernel& kernel, std::span<const double> v_bar);

/// One-level analogue used on the s1 = 0 and s2 = 0 edges.
class ToeplitzFft1d {
public:
    /// `lags` holds g_a for a = -M+1..M-1.
    ToeplitzFft1d(std::span<const double> lags, double lambda);
    ~ToeplitzFft1d();
    ToeplitzFft1d(const ToeplitzFft1d&) = delete;
    ToeplitzFft1d& operator=(const ToeplitzFft1d&) = delete;

    [[nodiscard]] std::size_t M() const { return M_; }
    /// out_k = lambda sum_i in_i g_{i-k}.
    void apply(std::span<const double> in, std::span<double> out) const;

private:
    std::size_t M_ = 0;
    fft::ComplexBuffer spectrum_;
    fft::Plan forward_, backward_;
};

/// Linear interpolation data for one direction. to_log: log node p lies in
/// [s_{lower}, s_{lower+1}] and gets weight `weight` on s_{lower}. from_log:
/// s-node l lies in [e^{x_lower}, e^{x_{lower+1}}] with weight on x_lower;
/// nodes outside the log hull are clamped to the nearest log node.
struct AxisTransfer {
    std::vector<std::uint32_t> to_log_lower;
    std::vector<double> to_log_weight;
    std::vector<std::uint32_t> from_log_lower;
    std::vector<double> from_log_weight;
};

[[nodiscard]] AxisTransfer build_axis_transfer(const AxisGrid& axis, const LogAxis& log_axis);

struct TransferMaps {
    AxisTransfer axis1;
    AxisTransfer axis2;
    std::size_t m1 = 0, m2 = 0, M1 = 0, M2 = 0;

    /// (M1 M2) x ((m1+1)(m2+1)) bilinear map onto the log grid.
    [[nodiscard]] CsrMatrix to_log() const;
    /// ((m1+1)(m2+1)) x (M1 M2) bilinear map back to the price grid.
    [[nodiscard]] CsrMatrix from_log() const;
};

[[nodiscard]] TransferMaps build_transfer_maps(const SpatialGrid& grid, const LogGrid& lg);

/// Treatment of log-price values beyond the truncated domain in the
/// one-dimensional edge correlations.
enum class FarField { Zero, Constant };

struct JumpOptions {
    std::size_t max_log_nodes = std::size_t{1} << 16;
    FarField edge_far_field = FarField::Constant;
    /// Use OpenMP threads inside the FFT and interpolation kernels.
    bool parallel = true;
};

/// Edge kernel data: marginal lags plus the kernel mass lying beyond either
/// end of the log axis, per output node.
struct MarginalKernel {
    std::vector<double> lags;        // g_a, a = -M+1..M-1
    std::vector<double> upper_tail;  // sum_{a >= M-k} g_a
    std::vector<double> lower_tail;  // sum_{a <= -1-k} g_a
};

[[nodiscard]] MarginalKernel build_marginal_kernel(double gamma, double delta, const LogAxis& axis);

/// Discrete jump operator A^(J) on the full price grid: interior nodes by
/// interpolation, FFT correlation and interpolation back; the edges s1 = 0 and
/// s2 = 0 by the one-dimensional analogue; lambda v at the origin.
class JumpOperator {
public:
    JumpOperator(const ModelParams& params, const SpatialGrid& grid, JumpOptions options = {});
    ~JumpOperator();

    [[nodiscard]] std::size_t size() const { return (m1_ + 1) * (m2_ + 1); }
    [[nodiscard]] double lambda() const { return lambda_; }
    [[nodiscard]] const LogGrid& log_grid() const { return log_grid_; }
    [[nodiscard]] const ToeplitzKernel& kernel() const { return kernel_; }
    [[nodiscard]] const TransferMaps& maps() const { return maps_; }
    /// Interior FFT operator; null when lambda = 0.
    [[nodiscard]] const BlockToeplitzFft* fft() const { return fft_.get(); }

    /// out = A^(J) v. Thread-safe; increments the call counter.
    void apply(std::span<const double> v, std::span<double> out) const;
    [[nodiscard]] std::vector<double> apply(std::span<const double> v) const;

    [[nodiscard]] std::uint64_t calls() const { return calls_.load(); }
    void reset_calls() { calls_.store(0); }

private:
    void apply_edge(std::span<const double> v, std::span<double> out, bool along_s2) const;

    std::size_t m1_ = 0, m2_ = 0;
    double lambda_ = 0.0;
    JumpOptions options_;
    LogGrid log_grid_;
    ToeplitzKernel kernel_;
    TransferMaps maps_;
    MarginalKernel edge1_;  // s2 = 0 edge, correlation in s1
    MarginalKernel edge2_;  // s1 = 0 edge, correlation in s2
    std::unique_ptr<BlockToeplitzFft> fft_;
    std::unique_ptr<ToeplitzFft1d> fft_edge1_;
    std::unique_ptr<ToeplitzFft1d> fft_edge2_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace rainbow
