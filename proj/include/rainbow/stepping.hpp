#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "rainbow/jump_operator.hpp"
#include "rainbow/spatial_operator.hpp"
#include "rainbow/tridiagonal.hpp"

namespace rainbow {

enum class Scheme { CNFE, CNFI, IETR, CNAB, MCS, MCS2, SC2A };

inline constexpr Scheme kAllSchemes[] = {Scheme::CNFE, Scheme::CNFI, Scheme::IETR, Scheme::CNAB,
                                         Scheme::MCS,  Scheme::MCS2, Scheme::SC2A};

[[nodiscard]] std::string_view to_string(Scheme s);
/// Case-insensitive; throws std::invalid_argument for unknown names.
[[nodiscard]] Scheme parse_scheme(std::string_view name);

/// CNAB, MCS2 and SC2A use V^{n-2}.
[[nodiscard]] bool is_two_step(Scheme s);
/// CNFE, CNFI, IETR and CNAB solve with I - dt/2 A^(D); they start with IMEX Euler.
[[nodiscard]] bool is_crank_nicolson_family(Scheme s);

struct SchemeConfig {
    Scheme scheme = Scheme::MCS2;
    double theta = 1.0 / 3.0;
    int fixed_point_iters = 2;  // CNFI only
    double b_hat[2] = {1.5, -0.5};
    double b_check[2] = {1.5 - 1.0 / 3.0, -0.5 + 1.0 / 3.0};

    /// Defaults: theta = 1/3 (3/4 for SC2A), two CNFI iterations.
    [[nodiscard]] static SchemeConfig make(Scheme scheme);
    /// Resets theta and the SC2A coefficients that depend on it.
    void set_theta(double t);
    void validate() const;
};

/// Linear system V' = (A^(M) + A_1 + A_2 + A^(J)) V as seen by the schemes:
/// products with each part and solves with the implicit stage matrices.
/// Factorizations are computed on first use and cached by coefficient.
class SplitSystem {
public:
    virtual ~SplitSystem() = default;

    [[nodiscard]] virtual std::size_t size() const = 0;
    virtual void apply_mixed(std::span<const double> v, std::span<double> out) const = 0;
    /// direction is 1 or 2.
    virtual void apply_dir(int direction, std::span<const double> v, std::span<double> out) const = 0;
    virtual void apply_jump(std::span<const double> v, std::span<double> out) const = 0;
    /// In place: x <- (I - c A^(D))^{-1} x.
    virtual void solve_cn(double c, std::span<double> x) = 0;
    /// In place: x <- (I - c A_j)^{-1} x.
    virtual void solve_dir(int direction, double c, std::span<double> x) = 0;

    /// Number of A^(J) products so far.
    [[nodiscard]] std::uint64_t jump_calls() const { return jump_calls_; }
    /// Number of factorizations computed so far (CN and directional).
    [[nodiscard]] std::uint64_t factorizations() const { return factorizations_; }

    /// out = (A^(M) + A_1 + A_2) v, summed in that order.
    void apply_d(std::span<const double> v, std::span<double> out) const;
    /// Counted A^(J) product.
    void jump(std::span<const double> v, std::span<double> out);

protected:
    std::uint64_t factorizations_ = 0;

private:
    std::uint64_t jump_calls_ = 0;
};

/// Split system of the discretized PIDE: sparse spatial parts, the FFT jump
/// operator, one sparse LU for the Crank-Nicolson matrix and one
/// tridiagonal LU per direction (all lines in a direction share it).
class PideSystem final : public SplitSystem {
public:
    PideSystem(const OperatorSet& ops, const JumpOperator& jump, bool parallel = true);
    ~PideSystem() override;

    [[nodiscard]] std::size_t size() const override { return ops_.size(); }
    void apply_mixed(std::span<const double> v, std::span<double> out) const override;
    void apply_dir(int direction, std::span<const double> v, std::span<double> out) const override;
    void apply_jump(std::span<const double> v, std::span<double> out) const override;
    void solve_cn(double c, std::span<double> x) override;
    void solve_dir(int direction, double c, std::span<double> x) override;

private:
    struct CnFactor;
    const OperatorSet& ops_;
    const JumpOperator& jump_;
    bool parallel_;
    std::map<double, std::unique_ptr<CnFactor>> cn_;
    std::map<double, TridiagonalLU> dir1_, dir2_;
};

/// Dense split system for small test problems; solves with partial-pivot LU.
class DenseSplitSystem final : public SplitSystem {
public:
    /// Matrices are n x n, row-major.
    DenseSplitSystem(std::size_t n, std::vector<double> mixed, std::vector<double> dir1, std::vector<double> dir2,
                     std::vector<double> jump);
    ~DenseSplitSystem() override;

    [[nodiscard]] std::size_t size() const override { return n_; }
    void apply_mixed(std::span<const double> v, std::span<double> out) const override;
    void apply_dir(int direction, std::span<const double> v, std::span<double> out) const override;
    void apply_jump(std::span<const double> v, std::span<double> out) const override;
    void solve_cn(double c, std::span<double> x) override;
    void solve_dir(int direction, double c, std::span<double> x) override;

private:
    struct Factor;
    void matvec(const std::vector<double>& a, std::span<const double> v, std::span<double> out) const;
    void solve(std::map<double, std::unique_ptr<Factor>>& cache, const std::vector<std::vector<double>*>& parts,
               double c, std::span<double> x);

    std::size_t n_;
    std::vector<double> mixed_, dir1_, dir2_, jump_;
    std::map<double, std::unique_ptr<Factor>> cn_, f1_, f2_;
};

/// V^{n-1} (and V^{n-2} for two-step schemes) plus the step size.
struct StepperState {
    std::vector<double> v_curr;
    std::vector<double> v_prev;
    std::size_t n = 0;
    double dt = 0.0;
    [[nodiscard]] bool has_prev() const { return !v_prev.empty(); }
};

/// Two IMEX Euler half-steps from V^0.
[[nodiscard]] std::vector<double> imex_euler_start(SplitSystem& sys, std::span<const double> v0, double dt);

[[nodiscard]] std::vector<double> cnfe_step(SplitSystem& sys, const StepperState& st);
[[nodiscard]] std::vector<double> cnfi_step(SplitSystem& sys, const StepperState& st, const SchemeConfig& cfg);
[[nodiscard]] std::vector<double> ietr_step(SplitSystem& sys, const StepperState& st);
[[nodiscard]] std::vector<double> cnab_step(SplitSystem& sys, const StepperState& st);
[[nodiscard]] std::vector<double> mcs_step(SplitSystem& sys, const StepperState& st, double theta);
[[nodiscard]] std::vector<double> mcs2_step(SplitSystem& sys, const StepperState& st, double theta);
[[nodiscard]] std::vector<double> sc2a_step(SplitSystem& sys, const StepperState& st, const SchemeConfig& cfg);

/// One step of the configured scheme from `st` (no starting procedure).
/// Throws std::invalid_argument when a two-step scheme lacks V^{n-2}.
[[nodiscard]] std::vector<double> step(SplitSystem& sys, const StepperState& st, const SchemeConfig& cfg);

/// V^N after N steps of size T / N, the first of which is the scheme's
/// starting procedure. Throws NumericalError on a non-finite result.
[[nodiscard]] std::vector<double> run(const SchemeConfig& cfg, SplitSystem& sys, std::span<const double> v0,
                                      std::size_t N, double T);

}  // namespace rainbow
