#include "rainbow/stepping.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rainbow/errors.hpp"

namespace rainbow {

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::CNFE: return "CNFE";
        case Scheme::CNFI: return "CNFI";
        case Scheme::IETR: return "IETR";
        case Scheme::CNAB: return "CNAB";
        case Scheme::MCS: return "MCS";
        case Scheme::MCS2: return "MCS2";
        case Scheme::SC2A: return "SC2A";
    }
    return "?";
}

Scheme parse_scheme(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (Scheme s : kAllSchemes) {
        if (to_string(s) == upper) return s;
    }
    throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

bool is_two_step(Scheme s) { return s == Scheme::CNAB || s == Scheme::MCS2 || s == Scheme::SC2A; }

bool is_crank_nicolson_family(Scheme s) {
    return s == Scheme::CNFE || s == Scheme::CNFI || s == Scheme::IETR || s == Scheme::CNAB;
}

SchemeConfig SchemeConfig::make(Scheme scheme) {
    SchemeConfig cfg;
    cfg.scheme = scheme;
    cfg.set_theta(scheme == Scheme::SC2A ? 0.75 : 1.0 / 3.0);
    return cfg;
}

void SchemeConfig::set_theta(double t) {
    theta = t;
    b_check[0] = 1.5 - t;
    b_check[1] = -0.5 + t;
}

void SchemeConfig::validate() const {
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    if (fixed_point_iters < 1) throw std::invalid_argument("CNFI needs at least one iteration");
}

// ---------------------------------------------------------------------------

void SplitSystem::apply_d(std::span<const double> v, std::span<double> out) const {
    std::vector<double> a(size()), b(size());
    apply_mixed(v, out);
    apply_dir(1, v, a);
    apply_dir(2, v, b);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (out[k] + a[k]) + b[k];
}

void SplitSystem::jump(std::span<const double> v, std::span<double> out) {
    ++jump_calls_;
    apply_jump(v, out);
}

struct PideSystem::CnFactor {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

PideSystem::PideSystem(const OperatorSet& ops, const JumpOperator& jump, bool parallel)
    : ops_(ops), jump_(jump), parallel_(parallel) {
    if (jump.size() != ops.size()) throw std::invalid_argument("operator sizes differ");
}

PideSystem::~PideSystem() = default;

void PideSystem::apply_mixed(std::span<const double> v, std::span<double> out) const {
    if (parallel_) {
        kernels::csr_matvec(ops_.mixed, v, out);
    } else {
        kernels::csr_matvec_serial(ops_.mixed, v, out);
    }
}

void PideSystem::apply_dir(int direction, std::span<const double> v, std::span<double> out) const {
    const CsrMatrix& a = direction == 1 ? ops_.dir1 : ops_.dir2;
    if (parallel_) {
        kernels::csr_matvec(a, v, out);
    } else {
        kernels::csr_matvec_serial(a, v, out);
    }
}

void PideSystem::apply_jump(std::span<const double> v, std::span<double> out) const { jump_.apply(v, out); }

void PideSystem::solve_cn(double c, std::span<double> x) {
    auto it = cn_.find(c);
    if (it == cn_.end()) {
        const CsrMatrix ad = ops_.full_d();
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(ad.nonzeros() + ad.rows());
        for (std::size_t r = 0; r < ad.rows(); ++r) {
            t.emplace_back(static_cast<int>(r), static_cast<int>(r), 1.0);
            for (std::size_t k = ad.row_ptr()[r]; k < ad.row_ptr()[r + 1]; ++k) {
                t.emplace_back(static_cast<int>(r), static_cast<int>(ad.col_index()[k]), -c * ad.values()[k]);
            }
        }
        const auto n = static_cast<Eigen::Index>(ad.rows());
        Eigen::SparseMatrix<double> m(n, n);
        m.setFromTriplets(t.begin(), t.end());
        m.makeCompressed();
        auto f = std::make_unique<CnFactor>();
        f->lu.compute(m);
        if (f->lu.info() != Eigen::Success) throw NumericalError("sparse LU factorization failed");
        ++factorizations_;
        it = cn_.emplace(c, std::move(f)).first;
    }
    Eigen::Map<Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd sol = it->second->lu.solve(xv);
    xv = sol;
}

void PideSystem::solve_dir(int direction, double c, std::span<double> x) {
    auto& cache = direction == 1 ? dir1_ : dir2_;
    auto it = cache.find(c);
    if (it == cache.end()) {
        it = cache.emplace(c, TridiagonalLU(direction == 1 ? ops_.axis_op1 : ops_.axis_op2, c)).first;
        ++factorizations_;
    }
    const std::size_t n1 = ops_.m1 + 1;
    const std::size_t n2 = ops_.m2 + 1;
    const LineLayout layout = direction == 1 ? LineLayout{n2, n1, 1} : LineLayout{n1, 1, n1};
    if (parallel_) {
        kernels::solve_lines(it->second, layout, x);
    } else {
        kernels::solve_lines_serial(it->second, layout, x);
    }
}

// ---------------------------------------------------------------------------

struct DenseSplitSystem::Factor {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

DenseSplitSystem::DenseSplitSystem(std::size_t n, std::vector<double> mixed, std::vector<double> dir1,
                                   std::vector<double> dir2, std::vector<double> jump)
    : n_(n), mixed_(std::move(mixed)), dir1_(std::move(dir1)), dir2_(std::move(dir2)), jump_(std::move(jump)) {
    for (const auto* a : {&mixed_, &dir1_, &dir2_, &jump_}) {
        if (a->size() != n * n) throw std::invalid_argument("dense operator has the wrong size");
    }
}

DenseSplitSystem::~DenseSplitSystem() = default;

void DenseSplitSystem::matvec(const std::vector<double>& a, std::span<const double> v, std::span<double> out) const {
    for (std::size_t r = 0; r < n_; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < n_; ++c) sum += a[r * n_ + c] * v[c];
        out[r] = sum;
    }
}

void DenseSplitSystem::apply_mixed(std::span<const double> v, std::span<double> out) const { matvec(mixed_, v, out); }

void DenseSplitSystem::apply_dir(int direction, std::span<const double> v, std::span<double> out) const {
    matvec(direction == 1 ? dir1_ : dir2_, v, out);
}

void DenseSplitSystem::apply_jump(std::span<const double> v, std::span<double> out) const { matvec(jump_, v, out); }

void DenseSplitSystem::solve(std::map<double, std::unique_ptr<Factor>>& cache,
                             const std::vector<std::vector<double>*>& parts, double c, std::span<double> x) {
    auto it = cache.find(c);
    if (it == cache.end()) {
        const auto n = static_cast<Eigen::Index>(n_);
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
        for (const auto* p : parts) {
            for (Eigen::Index r = 0; r < n; ++r) {
                for (Eigen::Index col = 0; col < n; ++col) {
                    m(r, col) -= c * (*p)[static_cast<std::size_t>(r * n + col)];
                }
            }
        }
        auto f = std::make_unique<Factor>();
        f->lu.compute(m);
        ++factorizations_;
        it = cache.emplace(c, std::move(f)).first;
    }
    Eigen::Map<Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd sol = it->second->lu.solve(xv);
    xv = sol;
}

void DenseSplitSystem::solve_cn(double c, std::span<double> x) {
    solve(cn_, {&mixed_, &dir1_, &dir2_}, c, x);
}

void DenseSplitSystem::solve_dir(int direction, double c, std::span<double> x) {
    if (direction == 1) {
        solve(f1_, {&dir1_}, c, x);
    } else {
        solve(f2_, {&dir2_}, c, x);
    }
}

// ---------------------------------------------------------------------------

namespace {

using Vec = std::vector<double>;

void require_prev(const StepperState& st, Scheme s) {
    if (!st.has_prev()) {
        throw std::invalid_argument(std::string(to_string(s)) + " step needs the state two steps back");
    }
}

// Stabilizing corrections y <- (I - c A_j)^{-1} (y - c A_j v) for j = 1, 2,
// given a1v = A_1 v and a2v = A_2 v.
void stabilizing_corrections(SplitSystem& sys, Vec& y, const Vec& a1v, const Vec& a2v, double c) {
    for (std::size_t k = 0; k < y.size(); ++k) y[k] -= c * a1v[k];
    sys.solve_dir(1, c, y);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] -= c * a2v[k];
    sys.solve_dir(2, c, y);
}

// Shared body of MCS and MCS2 after Y_0 is known. `with_jump` adds the
// integral part to the Y-hat and Y-tilde corrections (MCS).
Vec craig_sneyd_tail(SplitSystem& sys, const Vec& v, Vec y0, const Vec& a1v, const Vec& a2v, double dt,
                     double theta, bool with_jump) {
    const std::size_t n = v.size();
    const double c = theta * dt;
    Vec y = y0;
    stabilizing_corrections(sys, y, a1v, a2v, c);

    Vec w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = y[k] - v[k];
    Vec mw(n), a1w(n), a2w(n), jw(n, 0.0);
    sys.apply_mixed(w, mw);
    sys.apply_dir(1, w, a1w);
    sys.apply_dir(2, w, a2w);
    if (with_jump) sys.jump(w, jw);

    const double half_minus = (0.5 - theta) * dt;
    for (std::size_t k = 0; k < n; ++k) {
        const double dw = (mw[k] + a1w[k]) + a2w[k];
        const double y_hat = y0[k] + c * (mw[k] + jw[k]);
        y0[k] = y_hat + half_minus * (dw + jw[k]);
    }
    stabilizing_corrections(sys, y0, a1v, a2v, c);
    return y0;
}

}  // namespace

Vec imex_euler_start(SplitSystem& sys, std::span<const double> v0, double dt) {
    const std::size_t n = v0.size();
    const double h = 0.5 * dt;
    Vec v(v0.begin(), v0.end());
    Vec jv(n);
    for (int half = 0; half < 2; ++half) {
        sys.jump(v, jv);
        for (std::size_t k = 0; k < n; ++k) v[k] += h * jv[k];
        sys.solve_cn(h, v);
    }
    return v;
}

Vec cnfe_step(SplitSystem& sys, const StepperState& st) {
    const Vec& v = st.v_curr;
    const std::size_t n = v.size();
    const double dt = st.dt;
    Vec ad(n), jv(n), out(n);
    sys.apply_d(v, ad);
    sys.jump(v, jv);
    for (std::size_t k = 0; k < n; ++k) out[k] = v[k] + (0.5 * dt) * ad[k] + dt * jv[k];
    sys.solve_cn(0.5 * dt, out);
    return out;
}

Vec cnfi_step(SplitSystem& sys, const StepperState& st, const SchemeConfig& cfg) {
    const Vec& v = st.v_curr;
    const std::size_t n = v.size();
    const double dt = st.dt;
    Vec ad(n), jv(n), base(n);
    sys.apply_d(v, ad);
    sys.jump(v, jv);
    for (std::size_t k = 0; k < n; ++k) base[k] = v[k] + (0.5 * dt) * ad[k];
    // Y_0 = V^{n-1}, so A^(J) Y_0 is the product already computed.
    Vec jy = jv;
    Vec y(n);
    for (int it = 0; it < cfg.fixed_point_iters; ++it) {
        if (it > 0) sys.jump(y, jy);
        for (std::size_t k = 0; k < n; ++k) y[k] = base[k] + (0.5 * dt) * (jy[k] + jv[k]);
        sys.solve_cn(0.5 * dt, y);
    }
    return y;
}

Vec ietr_step(SplitSystem& sys, const StepperState& st) {
    const Vec& v = st.v_curr;
    const std::size_t n = v.size();
    const double dt = st.dt;
    Vec ad(n), jv(n), y0(n), diff(n), jd(n);
    sys.apply_d(v, ad);
    sys.jump(v, jv);
    for (std::size_t k = 0; k < n; ++k) {
        y0[k] = v[k] + dt * (ad[k] + jv[k]);
        diff[k] = y0[k] - v[k];
    }
    sys.jump(diff, jd);
    Vec y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = (y0[k] + (0.5 * dt) * jd[k]) - (0.5 * dt) * ad[k];
    sys.solve_cn(0.5 * dt, y);
    return y;
}

Vec cnab_step(SplitSystem& sys, const StepperState& st) {
    require_prev(st, Scheme::CNAB);
    const Vec& v = st.v_curr;
    const Vec& vp = st.v_prev;
    const std::size_t n = v.size();
    const double dt = st.dt;
    Vec ad(n), hist(n), jh(n), out(n);
    sys.apply_d(v, ad);
    for (std::size_t k = 0; k < n; ++k) hist[k] = 3.0 * v[k] - vp[k];
    sys.jump(hist, jh);
    for (std::size_t k = 0; k < n; ++k) out[k] = v[k] + (0.5 * dt) * ad[k] + (0.5 * dt) * jh[k];
    sys.solve_cn(0.5 * dt, out);
    return out;
}

Vec mcs_step(SplitSystem& sys, const StepperState& st, double theta) {
    const Vec& v = st.v_curr;
    const std::size_t n = v.size();
    const double dt = st.dt;
    Vec mv(n), a1v(n), a2v(n), jv(n), y0(n);
    sys.apply_mixed(v, mv);
    sys.apply_dir(1, v, a1v);
    sys.apply_dir(2, v, a2v);
    sys.jump(v, jv);
    for (std::size_t k = 0; k < n; ++k) y0[k] = v[k] + dt * (((mv[k] + a1v[k]) + a2v[k]) + jv[k]);
    return craig_sneyd_tail(sys, v, std::move(y0), a1v, a2v, dt, theta, true);
}

Vec mcs2_step(SplitSystem& sys, const StepperState& st, double theta) {
    require_prev(st, Scheme::MCS2);
    const Vec& v = st.v_curr;
    const Vec& vp = st.v_prev;
    const std::size_t n = v.size();
    const double dt = st.dt;
    Vec mv(n), a1v(n), a2v(n), hist(n), jh(n), y0(n);
    sys.apply_mixed(v, mv);
    sys.apply_dir(1, v, a1v);
    sys.apply_dir(2, v, a2v);
    for (std::size_t k = 0; k < n; ++k) hist[k] = 3.0 * v[k] - vp[k];
    sys.jump(hist, jh);
    for (std::size_t k = 0; k < n; ++k) {
        const double x0 = v[k] + dt * ((mv[k] + a1v[k]) + a2v[k]);
        y0[k] = x0 + (0.5 * dt) * jh[k];
    }
    return craig_sneyd_tail(sys, v, std::move(y0), a1v, a2v, dt, theta, false);
}

Vec sc2a_step(SplitSystem& sys, const StepperState& st, const SchemeConfig& cfg) {
    require_prev(st, Scheme::SC2A);
    const Vec& v = st.v_curr;
    const Vec& vp = st.v_prev;
    const std::size_t n = v.size();
    const double dt = st.dt;
    Vec hat(n), check(n);
    for (std::size_t k = 0; k < n; ++k) {
        hat[k] = cfg.b_hat[0] * v[k] + cfg.b_hat[1] * vp[k];
        check[k] = cfg.b_check[0] * v[k] + cfg.b_check[1] * vp[k];
    }
    Vec m_hat(n), j_hat(n), a1c(n), a2c(n), a1v(n), a2v(n), y(n);
    sys.apply_mixed(hat, m_hat);
    sys.jump(hat, j_hat);
    sys.apply_dir(1, check, a1c);
    sys.apply_dir(2, check, a2c);
    sys.apply_dir(1, v, a1v);
    sys.apply_dir(2, v, a2v);
    for (std::size_t k = 0; k < n; ++k) y[k] = v[k] + dt * (m_hat[k] + j_hat[k]) + dt * (a1c[k] + a2c[k]);
    stabilizing_corrections(sys, y, a1v, a2v, cfg.theta * dt);
    return y;
}

Vec step(SplitSystem& sys, const StepperState& st, const SchemeConfig& cfg) {
    switch (cfg.scheme) {
        case Scheme::CNFE: return cnfe_step(sys, st);
        case Scheme::CNFI: return cnfi_step(sys, st, cfg);
        case Scheme::IETR: return ietr_step(sys, st);
        case Scheme::CNAB: return cnab_step(sys, st);
        case Scheme::MCS: return mcs_step(sys, st, cfg.theta);
        case Scheme::MCS2: return mcs2_step(sys, st, cfg.theta);
        case Scheme::SC2A: return sc2a_step(sys, st, cfg);
    }
    throw std::invalid_argument("unknown scheme");
}

Vec run(const SchemeConfig& cfg, SplitSystem& sys, std::span<const double> v0, std::size_t N, double T) {
    cfg.validate();
    if (v0.size() != sys.size()) throw std::invalid_argument("initial vector length mismatch");
    if (N < 1) throw std::invalid_argument("at least one time step is required");
    if (is_two_step(cfg.scheme) && N < 2) throw std::invalid_argument("two-step schemes need N >= 2");
    if (!(T > 0.0)) throw std::invalid_argument("maturity must be positive");

    StepperState st;
    st.dt = T / static_cast<double>(N);
    st.v_curr.assign(v0.begin(), v0.end());

    Vec first;
    if (is_crank_nicolson_family(cfg.scheme)) {
        first = imex_euler_start(sys, st.v_curr, st.dt);
    } else if (cfg.scheme == Scheme::MCS) {
        first = mcs_step(sys, st, cfg.theta);
    } else {
        first = mcs_step(sys, st, 1.0 / 3.0);
    }
    st.n = 1;
    if (is_two_step(cfg.scheme)) st.v_prev = std::move(st.v_curr);
    st.v_curr = std::move(first);

    for (std::size_t n = 2; n <= N; ++n) {
        Vec next = step(sys, st, cfg);
        if (is_two_step(cfg.scheme)) st.v_prev = std::move(st.v_curr);
        st.v_curr = std::move(next);
        st.n = n;
    }
    for (double x : st.v_curr) {
        if (!std::isfinite(x)) throw NumericalError("time stepping produced a non-finite value");
    }
    return st.v_curr;
}

}  // namespace rainbow
