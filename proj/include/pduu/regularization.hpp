#pragma once

#include <array>
#include <functional>
#include <vector>

#include "pduu/errors.hpp"
#include "pduu/optimizer.hpp"

namespace pduu {

struct RegConfig {
    double beta_tik = 1.0;
    double beta_l0 = 0.0;
    double eps0 = 0.5;
    /// Number of l0 continuation stages after the Tikhonov stage.
    int K_cont = 3;

    /// Throws ArgumentError.
    void validate() const;
};

/// Coefficients (a0, a1, a2, a3) of p3(d) = a0 + a1 d + a2 d^2 + a3 d^3 with
/// p3(eps0/2) = 1/2, p3'(eps0/2) = 1/eps0, p3(2 eps0) = 1, p3'(2 eps0) = 0.
std::array<double, 4> p3_coefficients(double eps0);

/// Smoothed indicator: d/eps0 below eps0/2, p3 up to 2 eps0, 1 above.
/// Throws ArgumentError unless d lies in [0, 1].
double f_eps0(double d, double eps0);
double f_eps0_derivative(double d, double eps0);

struct RegValue {
    double value = 0.0;
    Vector gradient;
};

/// R(d) = beta_tik d^T K d + beta_l0 (M 1)^T f(d) with P1 stiffness K and
/// consistent mass M assembled once.
class Regularizer {
public:
    explicit Regularizer(const Mesh& mesh);

    RegValue evaluate(const NodalField& d, const RegConfig& cfg) const;
    const SparseOperator& stiffness() const { return k_; }
    const Vector& mass_weights() const { return mass_row_sums_; }

private:
    SparseOperator k_;
    Vector mass_row_sums_;
};

RegValue eval_R(const Mesh& mesh, const NodalField& d, const RegConfig& cfg);

/// Fraction of nodes with 0.05 < d < 0.95.
double sparsity_metric(const NodalField& d);

/// Stage 0: (beta_tik, beta_l0) = (1, 0). Stage i = 1..K_cont: (0, 1) with
/// eps0 = 2^{-i}.
std::vector<RegConfig> continuation_schedule(int K_cont);

struct StageOutcome {
    OptimizeResult result;
    /// Objective value reported for the stage (usually result.J).
    double J = 0.0;
};

struct StageRecord {
    int stage = 0;
    RegConfig config;
    double J = 0.0;
    double sparsity = 0.0;
    int iterations = 0;
    OptimizeStatus status = OptimizeStatus::Converged;
    NodalField design;
};

struct ContinuationResult {
    NodalField design;
    std::vector<StageRecord> history;
};

class ContinuationError : public Error {
public:
    ContinuationError(const std::string& what, std::vector<StageRecord> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<StageRecord>& history() const noexcept { return history_; }

private:
    std::vector<StageRecord> history_;
};

using StageOptimizer = std::function<StageOutcome(const NodalField& d0, const RegConfig& stage)>;

/// Runs the schedule, warm-starting each stage from the previous optimum. A
/// stage fails when its line search breaks down before any step is accepted;
/// MaxIters and later line-search stalls keep the best iterate and go on.
ContinuationResult continuation_run(const NodalField& d_init, int K_cont, const StageOptimizer& optimize);

}  // namespace pduu
