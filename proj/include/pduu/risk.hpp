#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "pduu/eigensolver.hpp"
#include "pduu/prior.hpp"
#include "pduu/regularization.hpp"
#include "pduu/sensitivities.hpp"

namespace pduu {

struct RiskWeights {
    double beta_V = 0.0;
    double beta_R = 0.0;
    /// Forwarded to Q = beta_M Q_M - Q_T; must match the forward model.
    double beta_M = 1.0;

    void validate() const;
};

/// Everything objective_J needs besides the design: the forward model, the
/// prior, eigensolver settings and the regularization operators.
struct RiskContext {
    std::shared_ptr<const ForwardModel> model;
    std::shared_ptr<const MaternPrior> prior;
    std::shared_ptr<const Regularizer> regularizer;
    RandomizedEigenOptions eigen;

    static RiskContext build(std::shared_ptr<const ForwardModel> model, std::shared_ptr<const MaternPrior> prior,
                             const RandomizedEigenOptions& eigen);
};

struct RiskEvaluation {
    NodalField d;
    double Q_bar = 0.0;
    Vector grad_bar;
    /// C grad_bar.
    Vector cov_grad;
    /// Sorted by magnitude, descending.
    Vector eigenvalues;
    /// C^{-1}-orthonormal columns.
    Eigen::MatrixXd eigenvectors;
    double E_quad = 0.0;
    double V_quad = 0.0;
    double R = 0.0;
    Vector R_gradient;
    double J_total = 0.0;
    int N = 0;
    int oversampling = 0;
    RiskWeights weights;
    RegConfig reg;
    /// States and factorizations at (d, m_bar).
    std::shared_ptr<const AdjointWorkspace> workspace;
};

/// Top-N pairs of H psi = lambda C^{-1} psi at (d, m_bar) where H is the
/// m-Hessian of Q.
EigenPairs eigensolve_hc(const AdjointWorkspace& ws, const MaternPrior& prior, const RandomizedEigenOptions& opts);

/// Q_bar + 1/2 sum lambda_n.
double taylor_mean(const RiskEvaluation& eval);
/// <grad, C grad> + 1/2 sum lambda_n^2; logs a warning when negative.
double taylor_variance(const RiskEvaluation& eval, const MaternPrior& prior);

/// Runs the full pipeline at d; J = E_quad + beta_V V_quad + beta_R R(d).
RiskEvaluation objective_J(const NodalField& d, const RiskWeights& weights, const RegConfig& reg,
                           const RiskContext& ctx);

/// dJ/dd with eigenvectors held fixed:
///   grad_bar + sum_n (1/2 + beta_V lambda_n) dlambda_n + 2 beta_V H C grad_bar + beta_R dR.
/// Throws StalenessError if d differs from the evaluation point.
Vector grad_d_Jquad(const NodalField& d, const RiskEvaluation& eval, const RiskWeights& weights);

struct McEstimate {
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_failed = 0;
};

/// Sample mean and unbiased variance of q(m_k) with m_k drawn from the prior
/// using per-sample seeds mix_seed(seed, k). Samples raising
/// PorosityRangeError are skipped and counted; more than 0.1% failures throws
/// SolverError. Sums are reduced in sample order.
McEstimate mc_estimate(const std::function<double(const NodalField&)>& q, const MaternPrior& prior,
                       std::size_t n_samples, std::uint64_t seed, int workers = 1);

/// Monte Carlo estimate of Q(d, m) over the prior.
McEstimate mc_estimate(const NodalField& d, std::size_t n_samples, std::uint64_t seed, const RiskContext& ctx);

}  // namespace pduu
