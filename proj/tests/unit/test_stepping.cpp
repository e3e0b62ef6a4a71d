#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "rainbow/stepping.hpp"

using namespace rainbow;

namespace {

using Vec = std::vector<double>;

DenseSplitSystem scalar_system(double m, double a1, double a2, double j) {
    return DenseSplitSystem(1, {m}, {a1}, {a2}, {j});
}

struct SmallProblem {
    std::size_t n = 6;
    Eigen::MatrixXd mixed, dir1, dir2, jump;
    Eigen::VectorXd v0;

    DenseSplitSystem system() const {
        auto flat = [](const Eigen::MatrixXd& a) {
            Vec out(static_cast<std::size_t>(a.size()));
            for (Eigen::Index r = 0; r < a.rows(); ++r) {
                for (Eigen::Index c = 0; c < a.cols(); ++c) out[static_cast<std::size_t>(r * a.cols() + c)] = a(r, c);
            }
            return out;
        };
        return DenseSplitSystem(n, flat(mixed), flat(dir1), flat(dir2), flat(jump));
    }

    Eigen::VectorXd exact(double T) const { return ((mixed + dir1 + dir2 + jump) * T).exp() * v0; }
};

// Two 3-point diffusions on a 2 x 3 tensor grid, a small mixed part and a
// positive jump part with row sums 0.4.
SmallProblem small_problem() {
    SmallProblem p;
    const Eigen::Index n1 = 2, n2 = 3, n = n1 * n2;
    auto lap = [](Eigen::Index k, double a) {
        Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            l(i, i) = -2.0 * a;
            if (i > 0) l(i, i - 1) = a;
            if (i + 1 < k) l(i, i + 1) = 0.8 * a;
        }
        return l;
    };
    p.dir1 = Eigen::kroneckerProduct(Eigen::MatrixXd::Identity(n2, n2), lap(n1, 1.5)).eval();
    p.dir2 = Eigen::kroneckerProduct(lap(n2, 1.0), Eigen::MatrixXd::Identity(n1, n1)).eval();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    p.mixed = Eigen::MatrixXd::Zero(n, n);
    p.jump = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < n; ++c) {
            p.mixed(r, c) = 0.2 * (u(rng) - 0.5);
            p.jump(r, c) = u(rng);
            sum += p.jump(r, c);
        }
        p.jump.row(r) *= 0.4 / sum;
        p.jump(r, r) -= 0.5;
    }
    p.v0 = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0);
    return p;
}

Vec run_scheme(Scheme s, SplitSystem& sys, const Vec& v0, std::size_t N, double T) {
    return run(SchemeConfig::make(s), sys, v0, N, T);
}

double order_estimate(Scheme s) {
    const SmallProblem p = small_problem();
    const double T = 1.0;
    const Eigen::VectorXd ref = p.exact(T);
    const Vec v0(p.v0.data(), p.v0.data() + p.v0.size());
    std::vector<double> errs;
    for (std::size_t N : {40u, 80u, 160u}) {
        DenseSplitSystem sys = p.system();
        const Vec v = run_scheme(s, sys, v0, N, T);
        double e = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) e = std::max(e, std::abs(v[k] - ref(static_cast<Eigen::Index>(k))));
        errs.push_back(e);
    }
    return std::log2(errs[1] / errs[2]);
}

}  // namespace

TEST_CASE("scheme names") {
    for (Scheme s : kAllSchemes) CHECK(parse_scheme(to_string(s)) == s);
    CHECK(parse_scheme("mcs2") == Scheme::MCS2);
    CHECK_THROWS_AS((void)parse_scheme("rk4"), std::invalid_argument);
    CHECK(is_two_step(Scheme::CNAB));
    CHECK(is_two_step(Scheme::MCS2));
    CHECK(is_two_step(Scheme::SC2A));
    CHECK_FALSE(is_two_step(Scheme::MCS));
    CHECK(is_crank_nicolson_family(Scheme::IETR));
    CHECK_FALSE(is_crank_nicolson_family(Scheme::SC2A));
}

TEST_CASE("scheme configuration") {
    CHECK(SchemeConfig::make(Scheme::MCS2).theta == doctest::Approx(1.0 / 3.0));
    const SchemeConfig sc = SchemeConfig::make(Scheme::SC2A);
    CHECK(sc.theta == 0.75);
    CHECK(sc.b_hat[0] == 1.5);
    CHECK(sc.b_hat[1] == -0.5);
    CHECK(sc.b_check[0] == doctest::Approx(0.75));
    CHECK(sc.b_check[1] == doctest::Approx(0.25));
    SchemeConfig bad = SchemeConfig::make(Scheme::CNFI);
    bad.fixed_point_iters = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("scalar hand recurrences") {
    const double m = -0.3, a1 = -1.2, a2 = -0.7, j = 0.4, dt = 0.1;
    const double d = m + a1 + a2;

    SUBCASE("IMEX Euler start") {
        DenseSplitSystem sys = scalar_system(m, a1, a2, j);
        const Vec v = imex_euler_start(sys, Vec{1.0}, dt);
        double x = 1.0;
        for (int k = 0; k < 2; ++k) x = (x + 0.05 * j * x) / (1.0 - 0.05 * d);
        CHECK(v[0] == doctest::Approx(x).epsilon(1e-15));
        CHECK(sys.jump_calls() == 2);
    }

    SUBCASE("CNFE pure decay") {
        DenseSplitSystem sys = scalar_system(0.0, -1.0, 0.0, 0.0);
        StepperState st{{1.0}, {}, 1, 0.1};
        CHECK(cnfe_step(sys, st)[0] == doctest::Approx(0.95 / 1.05).epsilon(1e-15));
        DenseSplitSystem jumps = scalar_system(0.0, 0.0, 0.0, -1.0);
        CHECK(cnfe_step(jumps, st)[0] == doctest::Approx(0.9).epsilon(1e-15));
    }

    SUBCASE("every scheme") {
        const double v = 1.3, vp = 1.1;
        const StepperState st{{v}, {vp}, 2, dt};
        const double c = 0.5 * dt;
        auto corr = [&](double y, double th) {
            const double cc = th * dt;
            y = (y - cc * a1 * v) / (1.0 - cc * a1);
            return (y - cc * a2 * v) / (1.0 - cc * a2);
        };
        const double theta = 1.0 / 3.0;

        DenseSplitSystem sys = scalar_system(m, a1, a2, j);
        CHECK(cnfe_step(sys, st)[0] == doctest::Approx((v + c * d * v + dt * j * v) / (1.0 - c * d)).epsilon(1e-14));

        double y = v;
        for (int it = 0; it < 2; ++it) y = (v + c * d * v + c * (j * y + j * v)) / (1.0 - c * d);
        CHECK(cnfi_step(sys, st, SchemeConfig::make(Scheme::CNFI))[0] == doctest::Approx(y).epsilon(1e-14));

        const double y0 = v + dt * (d + j) * v;
        CHECK(ietr_step(sys, st)[0] ==
              doctest::Approx((y0 + c * j * (y0 - v) - c * d * v) / (1.0 - c * d)).epsilon(1e-14));

        CHECK(cnab_step(sys, st)[0] ==
              doctest::Approx((v + c * d * v + c * j * (3.0 * v - vp)) / (1.0 - c * d)).epsilon(1e-14));

        {
            const double z0 = v + dt * (d + j) * v;
            const double z = corr(z0, theta);
            const double w = z - v;
            const double zh = z0 + theta * dt * (m * w + j * w);
            const double zt = zh + (0.5 - theta) * dt * (d * w + j * w);
            CHECK(mcs_step(sys, st, theta)[0] == doctest::Approx(corr(zt, theta)).epsilon(1e-14));
        }
        {
            const double z0 = v + dt * d * v + c * j * (3.0 * v - vp);
            const double z = corr(z0, theta);
            const double w = z - v;
            const double zt = z0 + theta * dt * m * w + (0.5 - theta) * dt * d * w;
            CHECK(mcs2_step(sys, st, theta)[0] == doctest::Approx(corr(zt, theta)).epsilon(1e-14));
        }
        {
            const SchemeConfig cfg = SchemeConfig::make(Scheme::SC2A);
            const double hat = 1.5 * v - 0.5 * vp;
            const double chk = 0.75 * v + 0.25 * vp;
            const double z0 = v + dt * (m + j) * hat + dt * (a1 + a2) * chk;
            CHECK(sc2a_step(sys, st, cfg)[0] == doctest::Approx(corr(z0, 0.75)).epsilon(1e-14));
        }
    }
}

TEST_CASE("CNFI with one iteration is CNFE") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 20;
    for (int trial = 0; trial < 5; ++trial) {
        Vec a[4];
        for (auto& x : a) {
            x.resize(n * n);
            for (double& e : x) e = 0.1 * u(rng);
        }
        Vec v(n);
        for (double& e : v) e = u(rng);
        DenseSplitSystem s1(n, a[0], a[1], a[2], a[3]), s2(n, a[0], a[1], a[2], a[3]);
        SchemeConfig cfg = SchemeConfig::make(Scheme::CNFI);
        cfg.fixed_point_iters = 1;
        const StepperState st{v, {}, 1, 0.05};
        CHECK(cnfi_step(s1, st, cfg) == cnfe_step(s2, st));
    }
}

TEST_CASE("two-step schemes with equal history") {
    const SmallProblem p = small_problem();
    const Vec v(p.v0.data(), p.v0.data() + p.v0.size());
    const StepperState st{v, v, 3, 0.02};
    DenseSplitSystem a = p.system(), b = p.system();
    const Vec cnab = cnab_step(a, st), cnfe = cnfe_step(b, st);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(cnab[k] == doctest::Approx(cnfe[k]).epsilon(1e-14));
}

TEST_CASE("jump products per run") {
    const SmallProblem p = small_problem();
    const Vec v0(p.v0.data(), p.v0.data() + p.v0.size());
    const std::size_t N = 7;
    auto calls = [&](Scheme s) {
        DenseSplitSystem sys = p.system();
        (void)run_scheme(s, sys, v0, N, 1.0);
        return sys.jump_calls();
    };
    CHECK(calls(Scheme::CNFE) == 2 + (N - 1));
    CHECK(calls(Scheme::CNFI) == 2 + 2 * (N - 1));
    CHECK(calls(Scheme::IETR) == 2 + 2 * (N - 1));
    CHECK(calls(Scheme::CNAB) == 2 + (N - 1));
    CHECK(calls(Scheme::MCS) == 2 * N);
    CHECK(calls(Scheme::MCS2) == 2 + (N - 1));
    CHECK(calls(Scheme::SC2A) == 2 + (N - 1));
}

TEST_CASE("runs are linear in the initial vector") {
    const SmallProblem p = small_problem();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec x(p.n), y(p.n), z(p.n);
    for (std::size_t k = 0; k < p.n; ++k) {
        x[k] = u(rng);
        y[k] = u(rng);
        z[k] = 2.0 * x[k] - 3.0 * y[k];
    }
    for (Scheme s : kAllSchemes) {
        DenseSplitSystem sys = p.system();
        const Vec rx = run_scheme(s, sys, x, 10, 0.5);
        const Vec ry = run_scheme(s, sys, y, 10, 0.5);
        const Vec rz = run_scheme(s, sys, z, 10, 0.5);
        for (std::size_t k = 0; k < p.n; ++k) CHECK(std::abs(rz[k] - (2.0 * rx[k] - 3.0 * ry[k])) < 1e-13);
    }
}

TEST_CASE("zero operator leaves the initial vector unchanged") {
    const std::size_t n = 4;
    const Vec zero(n * n, 0.0);
    const Vec v0{1.0, -2.0, 3.5, 0.25};
    for (Scheme s : kAllSchemes) {
        DenseSplitSystem sys(n, zero, zero, zero, zero);
        CHECK(run_scheme(s, sys, v0, 5, 1.0) == v0);
    }
}

TEST_CASE("scalar modes match the exact exponential to second order") {
    // Commuting scalar problem: every scheme's error at T = 1 should shrink
    // by about 4 (2 for CNFE) when dt is halved.
    const double m = 0.1, a1 = -1.0, a2 = -0.5, j = 0.3;
    const double exact = std::exp(m + a1 + a2 + j);
    for (Scheme s : kAllSchemes) {
        double e[2];
        for (int q = 0; q < 2; ++q) {
            DenseSplitSystem sys = scalar_system(m, a1, a2, j);
            e[q] = std::abs(run_scheme(s, sys, Vec{1.0}, 100u << q, 1.0)[0] - exact);
        }
        const double p = std::log2(e[0] / e[1]);
        if (s == Scheme::CNFE) {
            CHECK(p == doctest::Approx(1.0).epsilon(0.1));
        } else {
            CHECK(p == doctest::Approx(2.0).epsilon(0.05));
        }
    }
}

TEST_CASE("observed order on a small split system") {
    for (Scheme s : kAllSchemes) {
        CAPTURE(to_string(s));
        const double p = order_estimate(s);
        if (s == Scheme::CNFE) {
            CHECK(p >= 0.9);
            CHECK(p <= 1.1);
        } else {
            CHECK(p >= 1.9);
            CHECK(p <= 2.1);
        }
    }
}

TEST_CASE("argument checks") {
    DenseSplitSystem sys = scalar_system(0.0, -1.0, 0.0, 0.1);
    for (Scheme s : {Scheme::CNAB, Scheme::MCS2, Scheme::SC2A}) {
        CHECK_THROWS_AS((void)run_scheme(s, sys, Vec{1.0}, 1, 1.0), std::invalid_argument);
        CHECK_THROWS_AS((void)step(sys, StepperState{{1.0}, {}, 1, 0.1}, SchemeConfig::make(s)), std::invalid_argument);
        CHECK_NOTHROW((void)run_scheme(s, sys, Vec{1.0}, 2, 1.0));
    }
    CHECK_NOTHROW((void)run_scheme(Scheme::MCS, sys, Vec{1.0}, 1, 1.0));
    CHECK_THROWS_AS((void)run_scheme(Scheme::MCS, sys, Vec{1.0}, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)run_scheme(Scheme::MCS, sys, Vec{1.0, 2.0}, 3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)run_scheme(Scheme::MCS, sys, Vec{1.0}, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(DenseSplitSystem(2, Vec(4), Vec(4), Vec(3), Vec(4)), std::invalid_argument);
}
