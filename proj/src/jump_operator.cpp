#include "rainbow/jump_operator.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "rainbow/errors.hpp"

namespace rainbow {

LogAxis build_log_axis(const AxisGrid& axis, std::size_t max_nodes) {
    const std::size_t m = axis.cells();
    if (m < 2) throw std::invalid_argument("log grid needs at least two positive price nodes");
    const double x_max = std::log(axis.s_max());
    if (!(x_max > 0.0)) throw std::invalid_argument("S_max must exceed 1 for a symmetric log domain");
    double min_mesh = std::numeric_limits<double>::infinity();
    for (std::size_t l = 1; l < m; ++l) {
        min_mesh = std::min(min_mesh, std::log(axis.nodes[l + 1]) - std::log(axis.nodes[l]));
    }
    // Strict inequality, with a relative guard so that a width equal to the
    // smallest log mesh up to roundoff is not accepted.
    const double bound = min_mesh * (1.0 - 1e-12);
    std::size_t M = 2;
    while (!(2.0 * x_max / static_cast<double>(M) < bound)) {
        M *= 2;
        if (M > max_nodes) throw NumericalError("log grid would exceed the configured node cap");
    }
    return LogAxis{M, x_max / static_cast<double>(M / 2), x_max};
}

LogGrid build_log_grid(const SpatialGrid& grid, std::size_t max_nodes) {
    return LogGrid{build_log_axis(grid.axis1, max_nodes), build_log_axis(grid.axis2, max_nodes)};
}

double ToeplitzKernel::mass() const {
    double sum = 0.0;
    for (double f : values) sum += f;
    return sum;
}

ToeplitzKernel build_kernel(const ModelParams& params, const LogGrid& lg) {
    const auto& a1 = lg.axis1;
    const auto& a2 = lg.axis2;
    ToeplitzKernel k(a1.M, a2.M, params.lambda);
    const double area = a1.dx * a2.dx;
    const auto m1 = static_cast<std::ptrdiff_t>(a1.M);
    const auto m2 = static_cast<std::ptrdiff_t>(a2.M);
    const double one_minus = (1.0 - params.rho_hat) * (1.0 + params.rho_hat);
    for (std::ptrdiff_t d = -m2 + 1; d < m2; ++d) {
        const double eta2 = static_cast<double>(d) * a2.dx;
        const double z2 = (eta2 - params.gamma2) / params.delta2;
        for (std::ptrdiff_t c = -m1 + 1; c < m1; ++c) {
            const double eta1 = static_cast<double>(c) * a1.dx;
            const double z1 = (eta1 - params.gamma1) / params.delta1;
            const double quad = (z1 * z1 + z2 * z2 - 2.0 * params.rho_hat * z1 * z2) / one_minus;
            if (0.5 * quad > kKernelTailExponent) continue;
            k.at(c, d) = log_jump_density(params, eta1, eta2) * area;
        }
    }
    return k;
}

std::vector<double> blocktoeplitz_matvec_direct(const ToeplitzKernel& kernel, std::span<const double> v_bar) {
    const std::size_t M1 = kernel.M1;
    const std::size_t M2 = kernel.M2;
    if (v_bar.size() != M1 * M2) throw std::invalid_argument("log-grid vector length mismatch");
    std::vector<double> out(M1 * M2, 0.0);
    for (std::size_t l = 0; l < M2; ++l) {
        for (std::size_t k = 0; k < M1; ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < M2; ++j) {
                const auto d = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(l);
                for (std::size_t i = 0; i < M1; ++i) {
                    const auto c = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(k);
                    sum += v_bar[i + M1 * j] * kernel.at(c, d);
                }
            }
            out[k + M1 * l] = kernel.lambda * sum;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

struct BlockToeplitzFft::Workspace {
    fft::RealBuffer real;      // M2 rows of length P1
    fft::ComplexBuffer cplx;   // M2 rows of length R
    fft::ComplexBuffer cols;   // per thread: kColumnBlock columns of length P2
};

namespace {

int resolve_threads(int threads) { return threads <= 0 ? omp_get_max_threads() : threads; }

// Columns transformed together; small enough that a block stays in cache.
constexpr std::size_t kColumnBlock = 4;

}  // namespace

std::unique_ptr<BlockToeplitzFft::Workspace> BlockToeplitzFft::make_workspace() const {
    auto ws = std::make_unique<Workspace>();
    ws->real = fft::RealBuffer(M2_ * P1_);
    ws->cplx = fft::ComplexBuffer(M2_ * R_);
    ws->cols = fft::ComplexBuffer(static_cast<std::size_t>(threads_) * kColumnBlock * P2_);
    return ws;
}

namespace {

// Smallest length >= n of the form 2^a, 3 * 2^a or 5 * 2^a; FFTW is fast on
// these without measuring.
std::size_t fft_friendly_size(std::size_t n) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t f : {1, 3, 5}) {
        std::size_t k = f;
        while (k < n) k *= 2;
        best = std::min(best, k);
    }
    return best;
}

std::pair<std::size_t, std::size_t> kernel_support(const ToeplitzKernel& kernel) {
    std::size_t l1 = 0, l2 = 0;
    const auto m1 = static_cast<std::ptrdiff_t>(kernel.M1);
    const auto m2 = static_cast<std::ptrdiff_t>(kernel.M2);
    for (std::ptrdiff_t d = -m2 + 1; d < m2; ++d) {
        for (std::ptrdiff_t c = -m1 + 1; c < m1; ++c) {
            if (kernel.at(c, d) == 0.0) continue;
            l1 = std::max(l1, static_cast<std::size_t>(c < 0 ? -c : c));
            l2 = std::max(l2, static_cast<std::size_t>(d < 0 ? -d : d));
        }
    }
    return {l1, l2};
}

}  // namespace

BlockToeplitzFft::BlockToeplitzFft(const ToeplitzKernel& kernel, int threads)
    : M1_(kernel.M1), M2_(kernel.M2) {
    if (M1_ == 0 || M2_ == 0) throw std::invalid_argument("empty Toeplitz kernel");
    if (kernel.values.size() != (2 * M1_ - 1) * (2 * M2_ - 1)) {
        throw std::invalid_argument("Toeplitz kernel has the wrong number of lags");
    }
    // A circulant of length P holds every lag in [-L, L] without wrap-around
    // onto [-(M-1), M-1] once P >= M + L; beyond the support F is exactly 0.
    const auto [l1, l2] = kernel_support(kernel);
    P1_ = std::min(2 * M1_, fft_friendly_size(M1_ + l1));
    P2_ = std::min(2 * M2_, fft_friendly_size(M2_ + l2));
    R_ = P1_ / 2 + 1;
    threads_ = resolve_threads(threads);
    parallel_ = threads_ > 1;

    auto ws = make_workspace();
    fft::RealBuffer h(P2_ * P1_);
    fft::ComplexBuffer full(P2_ * R_);

    const int p1 = static_cast<int>(P1_);
    const int p2 = static_cast<int>(P2_);
    const int m2 = static_cast<int>(M2_);
    const int r = static_cast<int>(R_);
    const int blk = static_cast<int>(kColumnBlock);
    fft::Plan full_rows, full_cols;
    {
        std::lock_guard lock(fft::planner_mutex());
        const unsigned flags = FFTW_ESTIMATE;
        fft::set_planner_threads(threads_);
        rows_forward_.reset(fftw_plan_many_dft_r2c(1, &p1, m2, ws->real.data(), nullptr, 1, p1,
                                                   fft::as_fftw(ws->cplx.data()), nullptr, 1, r, flags));
        rows_backward_.reset(fftw_plan_many_dft_c2r(1, &p1, m2, fft::as_fftw(ws->cplx.data()), nullptr, 1, r,
                                                    ws->real.data(), nullptr, 1, p1, flags));
        full_rows.reset(fftw_plan_many_dft_r2c(1, &p1, p2, h.data(), nullptr, 1, p1, fft::as_fftw(full.data()),
                                               nullptr, 1, r, flags));
        full_cols.reset(fftw_plan_many_dft(1, &p2, r, fft::as_fftw(full.data()), nullptr, r, 1,
                                           fft::as_fftw(full.data()), nullptr, r, 1, FFTW_FORWARD, flags));
        // Column blocks run inside the OpenMP loop, one block per thread.
        fft::set_planner_threads(1);
        cols_forward_.reset(fftw_plan_many_dft(1, &p2, blk, fft::as_fftw(ws->cols.data()), nullptr, 1, p2,
                                               fft::as_fftw(ws->cols.data()), nullptr, 1, p2, FFTW_FORWARD,
                                               flags));
        cols_backward_.reset(fftw_plan_many_dft(1, &p2, blk, fft::as_fftw(ws->cols.data()), nullptr, 1, p2,
                                                fft::as_fftw(ws->cols.data()), nullptr, 1, p2, FFTW_BACKWARD,
                                                flags));
    }
    if (!rows_forward_ || !cols_forward_ || !cols_backward_ || !rows_backward_ || !full_rows || !full_cols) {
        throw NumericalError("FFT planning failed");
    }

    // Correlation with F is convolution with h_{a,b} = F_{-a,-b}; the lag
    // M of the circulant stays zero. Scaling by lambda / (P1 P2) is folded in.
    std::fill(h.data(), h.data() + h.size(), 0.0);
    const double scale = kernel.lambda / (static_cast<double>(P1_) * static_cast<double>(P2_));
    const auto sm1 = static_cast<std::ptrdiff_t>(M1_);
    const auto sm2 = static_cast<std::ptrdiff_t>(M2_);
    for (std::ptrdiff_t b = -sm2 + 1; b < sm2; ++b) {
        const std::size_t row = static_cast<std::size_t>((b + static_cast<std::ptrdiff_t>(P2_)) %
                                                         static_cast<std::ptrdiff_t>(P2_));
        for (std::ptrdiff_t a = -sm1 + 1; a < sm1; ++a) {
            const double f = kernel.at(-a, -b);
            if (f == 0.0) continue;  // zero lags may alias onto live ones
            const std::size_t col = static_cast<std::size_t>((a + static_cast<std::ptrdiff_t>(P1_)) %
                                                             static_cast<std::ptrdiff_t>(P1_));
            h[col + P1_ * row] = scale * f;
        }
    }
    fftw_execute(full_rows.get());
    fftw_execute(full_cols.get());

    // Spectrum stored column by column, matching the blocked column pass.
    spectrum_ = fft::ComplexBuffer(R_ * P2_);
    for (std::size_t c = 0; c < R_; ++c) {
        for (std::size_t q = 0; q < P2_; ++q) spectrum_[c * P2_ + q] = full[q * R_ + c];
    }
    pool_.push_back(std::move(ws));
}

BlockToeplitzFft::~BlockToeplitzFft() = default;

std::unique_ptr<BlockToeplitzFft::Workspace> BlockToeplitzFft::acquire() const {
    {
        std::lock_guard lock(pool_mutex_);
        if (!pool_.empty()) {
            auto ws = std::move(pool_.back());
            pool_.pop_back();
            return ws;
        }
    }
    return make_workspace();
}

void BlockToeplitzFft::release(std::unique_ptr<Workspace> ws) const {
    std::lock_guard lock(pool_mutex_);
    pool_.push_back(std::move(ws));
}

void BlockToeplitzFft::apply_rows(const RowWriter& fill, const RowReader& read) const {
    auto ws = acquire();
    double* real = ws->real.data();
    std::complex<double>* cplx = ws->cplx.data();
    std::complex<double>* cols = ws->cols.data();
    const auto m2 = static_cast<std::ptrdiff_t>(M2_);

#pragma omp parallel for schedule(static) num_threads(threads_) if (parallel_)
    for (std::ptrdiff_t q = 0; q < m2; ++q) {
        std::fill(real + static_cast<std::size_t>(q) * P1_ + M1_, real + static_cast<std::size_t>(q + 1) * P1_, 0.0);
    }
    fill(real, P1_);

    fftw_execute_dft_r2c(rows_forward_.get(), real, fft::as_fftw(cplx));

    // Column pass in blocks: gather the M2 nonzero rows, zero-pad to P2,
    // transform, multiply, transform back and keep the first M2 rows.
    const std::complex<double>* spec = spectrum_.data();
    const auto nblocks = static_cast<std::ptrdiff_t>((R_ + kColumnBlock - 1) / kColumnBlock);
    const std::complex<double> zero(0.0, 0.0);
#pragma omp parallel for schedule(static) num_threads(threads_) if (parallel_)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        const int tid = parallel_ ? omp_get_thread_num() : 0;
        std::complex<double>* blk = cols + static_cast<std::size_t>(tid) * kColumnBlock * P2_;
        const std::size_t c0 = static_cast<std::size_t>(b) * kColumnBlock;
        const std::size_t nc = std::min(kColumnBlock, R_ - c0);
        for (std::size_t q = 0; q < M2_; ++q) {
            const std::complex<double>* src = cplx + q * R_ + c0;
            for (std::size_t c = 0; c < nc; ++c) blk[c * P2_ + q] = src[c];
        }
        for (std::size_t c = 0; c < kColumnBlock; ++c) {
            std::fill(blk + c * P2_ + (c < nc ? M2_ : 0), blk + (c + 1) * P2_, zero);
        }
        fftw_execute_dft(cols_forward_.get(), fft::as_fftw(blk), fft::as_fftw(blk));
        for (std::size_t c = 0; c < nc; ++c) {
            std::complex<double>* col = blk + c * P2_;
            const std::complex<double>* s = spec + (c0 + c) * P2_;
            for (std::size_t q = 0; q < P2_; ++q) col[q] *= s[q];
        }
        fftw_execute_dft(cols_backward_.get(), fft::as_fftw(blk), fft::as_fftw(blk));
        for (std::size_t q = 0; q < M2_; ++q) {
            std::complex<double>* dst = cplx + q * R_ + c0;
            for (std::size_t c = 0; c < nc; ++c) dst[c] = blk[c * P2_ + q];
        }
    }

    fftw_execute_dft_c2r(rows_backward_.get(), fft::as_fftw(cplx), real);
    read(real, P1_);
    release(std::move(ws));
}

struct BlockToeplitzFft::BlendPlans {
    std::size_t n_src = 0, n_dst = 0;
    fft::Plan forward, backward;
};

const BlockToeplitzFft::BlendPlans& BlockToeplitzFft::blend_plans(std::size_t n_src, std::size_t n_dst) const {
    std::lock_guard pool_lock(pool_mutex_);
    for (const auto& p : blend_plans_) {
        if (p->n_src == n_src && p->n_dst == n_dst) return *p;
    }
    auto p = std::make_unique<BlendPlans>();
    p->n_src = n_src;
    p->n_dst = n_dst;
    fft::RealBuffer real(std::max(n_src, n_dst) * P1_);
    fft::ComplexBuffer cplx(std::max(n_src, n_dst) * R_);
    const int p1 = static_cast<int>(P1_);
    const int r = static_cast<int>(R_);
    {
        std::lock_guard lock(fft::planner_mutex());
        fft::set_planner_threads(threads_);
        p->forward.reset(fftw_plan_many_dft_r2c(1, &p1, static_cast<int>(n_src), real.data(), nullptr, 1, p1,
                                                fft::as_fftw(cplx.data()), nullptr, 1, r, FFTW_ESTIMATE));
        p->backward.reset(fftw_plan_many_dft_c2r(1, &p1, static_cast<int>(n_dst), fft::as_fftw(cplx.data()), nullptr,
                                                 1, r, real.data(), nullptr, 1, p1, FFTW_ESTIMATE));
        fft::set_planner_threads(1);
    }
    if (!p->forward || !p->backward) throw NumericalError("FFT planning failed");
    blend_plans_.push_back(std::move(p));
    return *blend_plans_.back();
}

void BlockToeplitzFft::apply_blended(const RowWriter& fill, std::size_t n_src, const RowBlend& in,
                                     const RowBlend& out, const RowReader& read) const {
    const std::size_t n_dst = out.lower.size();
    if (in.lower.size() != M2_ || in.weight.size() != M2_ || out.weight.size() != n_dst || n_src < 2 ||
        n_dst == 0) {
        throw std::invalid_argument("row blend does not match the log grid");
    }
    for (std::uint32_t lo : in.lower) {
        if (lo + 1 >= n_src) throw std::invalid_argument("row blend reads past the source rows");
    }
    for (std::uint32_t lo : out.lower) {
        if (lo + 1 >= M2_) throw std::invalid_argument("row blend reads past the log grid");
    }
    const BlendPlans& plans = blend_plans(n_src, n_dst);

    fft::RealBuffer src(n_src * P1_);
    fft::ComplexBuffer src_hat(n_src * R_);
    fft::ComplexBuffer dst_hat(n_dst * R_);
    fft::RealBuffer dst(n_dst * P1_);
    for (std::size_t j = 0; j < n_src; ++j) std::fill(src.data() + j * P1_ + M1_, src.data() + (j + 1) * P1_, 0.0);
    fill(src.data(), P1_);
    fftw_execute_dft_r2c(plans.forward.get(), src.data(), fft::as_fftw(src_hat.data()));

    auto ws = acquire();
    std::complex<double>* cols = ws->cols.data();
    const std::complex<double>* spec = spectrum_.data();
    const std::complex<double>* y = src_hat.data();
    std::complex<double>* z = dst_hat.data();
    const auto nblocks = static_cast<std::ptrdiff_t>((R_ + kColumnBlock - 1) / kColumnBlock);
    const std::complex<double> zero(0.0, 0.0);
#pragma omp parallel for schedule(static) num_threads(threads_) if (parallel_)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        const int tid = parallel_ ? omp_get_thread_num() : 0;
        std::complex<double>* blk = cols + static_cast<std::size_t>(tid) * kColumnBlock * P2_;
        const std::size_t c0 = static_cast<std::size_t>(b) * kColumnBlock;
        const std::size_t nc = std::min(kColumnBlock, R_ - c0);
        for (std::size_t q = 0; q < M2_; ++q) {
            const double w = in.weight[q];
            const std::complex<double>* a = y + in.lower[q] * R_ + c0;
            const std::complex<double>* a1 = a + R_;
            for (std::size_t c = 0; c < nc; ++c) blk[c * P2_ + q] = w * a[c] + (1.0 - w) * a1[c];
        }
        for (std::size_t c = 0; c < kColumnBlock; ++c) {
            std::fill(blk + c * P2_ + (c < nc ? M2_ : 0), blk + (c + 1) * P2_, zero);
        }
        fftw_execute_dft(cols_forward_.get(), fft::as_fftw(blk), fft::as_fftw(blk));
        for (std::size_t c = 0; c < nc; ++c) {
            std::complex<double>* col = blk + c * P2_;
            const std::complex<double>* s = spec + (c0 + c) * P2_;
            for (std::size_t q = 0; q < P2_; ++q) col[q] *= s[q];
        }
        fftw_execute_dft(cols_backward_.get(), fft::as_fftw(blk), fft::as_fftw(blk));
        for (std::size_t l = 0; l < n_dst; ++l) {
            const double w = out.weight[l];
            const std::size_t lo = out.lower[l];
            std::complex<double>* d = z + l * R_ + c0;
            for (std::size_t c = 0; c < nc; ++c) d[c] = w * blk[c * P2_ + lo] + (1.0 - w) * blk[c * P2_ + lo + 1];
        }
    }
    release(std::move(ws));

    fftw_execute_dft_c2r(plans.backward.get(), fft::as_fftw(dst_hat.data()), dst.data());
    read(dst.data(), P1_);
}

void BlockToeplitzFft::apply(std::span<const double> v_bar, std::span<double> out) const {
    if (v_bar.size() != M1_ * M2_ || out.size() != M1_ * M2_) {
        throw std::invalid_argument("log-grid vector length mismatch");
    }
    apply_rows(
        [&](double* rows, std::size_t stride) {
            for (std::size_t q = 0; q < M2_; ++q) {
                std::copy_n(v_bar.data() + q * M1_, M1_, rows + q * stride);
            }
        },
        [&](const double* rows, std::size_t stride) {
            for (std::size_t q = 0; q < M2_; ++q) {
                std::copy_n(rows + q * stride, M1_, out.data() + q * M1_);
            }
        });
}

std::vector<double> blocktoeplitz_matvec(const ToeplitzKernel& kernel, std::span<const double> v_bar) {
    BlockToeplitzFft op(kernel, 1);
    std::vector<double> out(kernel.M1 * kernel.M2);
    op.apply(v_bar, out);
    return out;
}

// ---------------------------------------------------------------------------

ToeplitzFft1d::ToeplitzFft1d(std::span<const double> lags, double lambda) {
    if (lags.size() % 2 == 0) throw std::invalid_argument("lag kernel must have odd length 2M-1");
    M_ = (lags.size() + 1) / 2;
    const std::size_t P = 2 * M_;
    fft::RealBuffer h(P);
    spectrum_ = fft::ComplexBuffer(M_ + 1);
    fft::ComplexBuffer scratch(M_ + 1);
    std::fill(h.data(), h.data() + P, 0.0);
    const auto m = static_cast<std::ptrdiff_t>(M_);
    const double scale = lambda / static_cast<double>(P);
    for (std::ptrdiff_t a = -m + 1; a < m; ++a) {
        const auto slot = static_cast<std::size_t>((a + static_cast<std::ptrdiff_t>(P)) % static_cast<std::ptrdiff_t>(P));
        h[slot] = scale * lags[static_cast<std::size_t>(-a + m - 1)];
    }
    const int n = static_cast<int>(P);
    {
        std::lock_guard lock(fft::planner_mutex());
        fft::set_planner_threads(1);
        forward_.reset(fftw_plan_dft_r2c_1d(n, h.data(), fft::as_fftw(scratch.data()), FFTW_ESTIMATE));
        backward_.reset(fftw_plan_dft_c2r_1d(n, fft::as_fftw(scratch.data()), h.data(), FFTW_ESTIMATE));
    }
    if (!forward_ || !backward_) throw NumericalError("FFT planning failed");
    fftw_execute_dft_r2c(forward_.get(), h.data(), fft::as_fftw(spectrum_.data()));
}

ToeplitzFft1d::~ToeplitzFft1d() = default;

void ToeplitzFft1d::apply(std::span<const double> in, std::span<double> out) const {
    if (in.size() != M_ || out.size() != M_) throw std::invalid_argument("edge vector length mismatch");
    const std::size_t P = 2 * M_;
    fft::RealBuffer buf(P);
    fft::ComplexBuffer freq(M_ + 1);
    std::copy(in.begin(), in.end(), buf.data());
    std::fill(buf.data() + M_, buf.data() + P, 0.0);
    fftw_execute_dft_r2c(forward_.get(), buf.data(), fft::as_fftw(freq.data()));
    for (std::size_t c = 0; c <= M_; ++c) freq[c] *= spectrum_[c];
    fftw_execute_dft_c2r(backward_.get(), fft::as_fftw(freq.data()), buf.data());
    std::copy_n(buf.data(), M_, out.begin());
}

// ---------------------------------------------------------------------------

AxisTransfer build_axis_transfer(const AxisGrid& axis, const LogAxis& log_axis) {
    const std::size_t m = axis.cells();
    const std::size_t M = log_axis.M;
    const auto& s = axis.nodes;
    std::vector<double> ex(M);
    for (std::size_t p = 0; p < M; ++p) ex[p] = std::exp(log_axis.x(p));

    AxisTransfer t;
    t.to_log_lower.resize(M);
    t.to_log_weight.resize(M);
    for (std::size_t p = 0; p < M; ++p) {
        const double y = ex[p];
        std::size_t lo;
        double w;
        if (y >= s[m]) {
            lo = m - 1;
            w = 0.0;
        } else {
            lo = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), y) - s.begin()) - 1;
            w = (s[lo + 1] - y) / (s[lo + 1] - s[lo]);
        }
        t.to_log_lower[p] = static_cast<std::uint32_t>(lo);
        t.to_log_weight[p] = w;
    }

    t.from_log_lower.resize(m + 1);
    t.from_log_weight.resize(m + 1);
    for (std::size_t l = 0; l <= m; ++l) {
        const double v = s[l];
        std::size_t lo;
        double w;
        if (v <= ex[0]) {
            lo = 0;
            w = 1.0;
        } else if (v >= ex[M - 1]) {
            lo = M - 2;
            w = 0.0;
        } else {
            lo = static_cast<std::size_t>(std::upper_bound(ex.begin(), ex.end(), v) - ex.begin()) - 1;
            w = (ex[lo + 1] - v) / (ex[lo + 1] - ex[lo]);
        }
        t.from_log_lower[l] = static_cast<std::uint32_t>(lo);
        t.from_log_weight[l] = w;
    }
    return t;
}

TransferMaps build_transfer_maps(const SpatialGrid& grid, const LogGrid& lg) {
    TransferMaps maps;
    maps.axis1 = build_axis_transfer(grid.axis1, lg.axis1);
    maps.axis2 = build_axis_transfer(grid.axis2, lg.axis2);
    maps.m1 = grid.m1();
    maps.m2 = grid.m2();
    maps.M1 = lg.axis1.M;
    maps.M2 = lg.axis2.M;
    return maps;
}

namespace {

void push_bilinear(std::vector<Triplet>& t, std::size_t row, std::size_t lo1, double w1, std::size_t lo2,
                   double w2, std::size_t width) {
    const double a[2] = {w1, 1.0 - w1};
    const double b[2] = {w2, 1.0 - w2};
    for (std::size_t y = 0; y < 2; ++y) {
        for (std::size_t x = 0; x < 2; ++x) {
            const double w = a[x] * b[y];
            if (w != 0.0) t.push_back({row, (lo1 + x) + width * (lo2 + y), w});
        }
    }
}

}  // namespace

CsrMatrix TransferMaps::to_log() const {
    std::vector<Triplet> t;
    t.reserve(4 * M1 * M2);
    for (std::size_t q = 0; q < M2; ++q) {
        for (std::size_t p = 0; p < M1; ++p) {
            push_bilinear(t, p + M1 * q, axis1.to_log_lower[p], axis1.to_log_weight[p], axis2.to_log_lower[q],
                          axis2.to_log_weight[q], m1 + 1);
        }
    }
    return CsrMatrix(M1 * M2, (m1 + 1) * (m2 + 1), std::move(t));
}

CsrMatrix TransferMaps::from_log() const {
    std::vector<Triplet> t;
    t.reserve(4 * (m1 + 1) * (m2 + 1));
    for (std::size_t j = 0; j <= m2; ++j) {
        for (std::size_t i = 0; i <= m1; ++i) {
            push_bilinear(t, i + (m1 + 1) * j, axis1.from_log_lower[i], axis1.from_log_weight[i],
                          axis2.from_log_lower[j], axis2.from_log_weight[j], M1);
        }
    }
    return CsrMatrix((m1 + 1) * (m2 + 1), M1 * M2, std::move(t));
}

// ---------------------------------------------------------------------------

MarginalKernel build_marginal_kernel(double gamma, double delta, const LogAxis& axis) {
    const auto M = static_cast<std::ptrdiff_t>(axis.M);
    const double dx = axis.dx;
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil((std::abs(gamma) + 40.0 * delta) / dx));
    const std::ptrdiff_t A = M + reach;
    const auto g = [&](std::ptrdiff_t a) {
        const double z = (static_cast<double>(a) * dx - gamma) / delta;
        return std::exp(-0.5 * z * z) / (delta * std::sqrt(2.0 * std::numbers::pi)) * dx;
    };
    MarginalKernel k;
    k.lags.resize(static_cast<std::size_t>(2 * M - 1));
    for (std::ptrdiff_t a = -M + 1; a < M; ++a) k.lags[static_cast<std::size_t>(a + M - 1)] = g(a);

    // suffix[a - 1] = sum_{b >= a} g_b for a = 1..A; prefix likewise for negative lags.
    std::vector<double> suffix(static_cast<std::size_t>(A) + 1, 0.0);
    for (std::ptrdiff_t a = A; a >= 1; --a) {
        suffix[static_cast<std::size_t>(a - 1)] = suffix[static_cast<std::size_t>(a)] + g(a);
    }
    std::vector<double> prefix(static_cast<std::size_t>(A) + 1, 0.0);
    for (std::ptrdiff_t a = A; a >= 1; --a) {
        prefix[static_cast<std::size_t>(a - 1)] = prefix[static_cast<std::size_t>(a)] + g(-a);
    }
    k.upper_tail.resize(axis.M);
    k.lower_tail.resize(axis.M);
    for (std::ptrdiff_t p = 0; p < M; ++p) {
        k.upper_tail[static_cast<std::size_t>(p)] = suffix[static_cast<std::size_t>(M - p - 1)];
        k.lower_tail[static_cast<std::size_t>(p)] = prefix[static_cast<std::size_t>(p)];
    }
    return k;
}

JumpOperator::JumpOperator(const ModelParams& params, const SpatialGrid& grid, JumpOptions options)
    : m1_(grid.m1()), m2_(grid.m2()), lambda_(params.lambda), options_(options) {
    params.validate();
    log_grid_ = build_log_grid(grid, options.max_log_nodes);
    kernel_ = build_kernel(params, log_grid_);
    maps_ = build_transfer_maps(grid, log_grid_);
    edge1_ = build_marginal_kernel(params.gamma1, params.delta1, log_grid_.axis1);
    edge2_ = build_marginal_kernel(params.gamma2, params.delta2, log_grid_.axis2);
    fft_ = std::make_unique<BlockToeplitzFft>(kernel_, options.parallel ? 0 : 1);
    fft_edge1_ = std::make_unique<ToeplitzFft1d>(edge1_.lags, lambda_);
    fft_edge2_ = std::make_unique<ToeplitzFft1d>(edge2_.lags, lambda_);
}

JumpOperator::~JumpOperator() = default;

std::vector<double> JumpOperator::apply(std::span<const double> v) const {
    std::vector<double> out(size());
    apply(v, out);
    return out;
}

void JumpOperator::apply(std::span<const double> v, std::span<double> out) const {
    if (v.size() != size() || out.size() != size()) {
        throw std::invalid_argument("vector length does not match the grid");
    }
    calls_.fetch_add(1);
    if (lambda_ == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const std::size_t n1 = m1_ + 1;
    const std::size_t n2 = m2_ + 1;
    const std::size_t M1 = log_grid_.axis1.M;
    const AxisTransfer& t1 = maps_.axis1;
    const AxisTransfer& t2 = maps_.axis2;
    const bool par = options_.parallel;
    // Axis 1 is interpolated here; axis 2 is blended inside the FFT product.
    const BlockToeplitzFft::RowBlend to_log{t2.to_log_lower, t2.to_log_weight};
    const BlockToeplitzFft::RowBlend from_log{std::span(t2.from_log_lower).subspan(1),
                                              std::span(t2.from_log_weight).subspan(1)};
    fft_->apply_blended(
        [&](double* rows, std::size_t stride) {
            const auto cols = static_cast<std::ptrdiff_t>(n2);
#pragma omp parallel for schedule(static) if (par)
            for (std::ptrdiff_t js = 0; js < cols; ++js) {
                const auto j = static_cast<std::size_t>(js);
                const double* vj = v.data() + n1 * j;
                double* row = rows + j * stride;
                for (std::size_t p = 0; p < M1; ++p) {
                    const std::size_t lo = t1.to_log_lower[p];
                    const double w = t1.to_log_weight[p];
                    row[p] = w * vj[lo] + (1.0 - w) * vj[lo + 1];
                }
            }
        },
        n2, to_log, from_log,
        [&](const double* rows, std::size_t stride) {
            const auto ls = static_cast<std::ptrdiff_t>(n2);
#pragma omp parallel for schedule(static) if (par)
            for (std::ptrdiff_t ll = 1; ll < ls; ++ll) {
                const auto l = static_cast<std::size_t>(ll);
                const double* u = rows + (l - 1) * stride;
                double* o = out.data() + n1 * l;
                for (std::size_t i = 1; i < n1; ++i) {
                    const std::size_t lo = t1.from_log_lower[i];
                    const double w = t1.from_log_weight[i];
                    o[i] = w * u[lo] + (1.0 - w) * u[lo + 1];
                }
            }
        });

    apply_edge(v, out, true);
    apply_edge(v, out, false);
    out[0] = lambda_ * v[0];
}

void JumpOperator::apply_edge(std::span<const double> v, std::span<double> out, bool along_s2) const {
    const std::size_t n1 = m1_ + 1;
    const std::size_t stride = along_s2 ? n1 : 1;
    const std::size_t count = along_s2 ? m2_ + 1 : n1;
    const AxisTransfer& t = along_s2 ? maps_.axis2 : maps_.axis1;
    const MarginalKernel& k = along_s2 ? edge2_ : edge1_;
    const ToeplitzFft1d& f = along_s2 ? *fft_edge2_ : *fft_edge1_;
    const std::size_t M = f.M();

    std::vector<double> e(M), corr(M);
    for (std::size_t q = 0; q < M; ++q) {
        const std::size_t lo = t.to_log_lower[q];
        const double w = t.to_log_weight[q];
        e[q] = w * v[lo * stride] + (1.0 - w) * v[(lo + 1) * stride];
    }
    f.apply(e, corr);
    if (options_.edge_far_field == FarField::Constant) {
        for (std::size_t q = 0; q < M; ++q) {
            corr[q] += lambda_ * (e[M - 1] * k.upper_tail[q] + e[0] * k.lower_tail[q]);
        }
    }
    for (std::size_t l = 1; l < count; ++l) {
        const std::size_t lo = t.from_log_lower[l];
        const double w = t.from_log_weight[l];
        out[l * stride] = w * corr[lo] + (1.0 - w) * corr[lo + 1];
    }
}

}  // namespace rainbow
