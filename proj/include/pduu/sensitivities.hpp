#pragma once

#include <array>
#include <variant>

#include "pduu/forward.hpp"

namespace pduu {

/// Factorized system matrix that can solve with A or A^T.
class FactoredSystem {
public:
    FactoredSystem() = default;
    FactoredSystem(const SparseOperator& a, bool symmetric);

    Vector solve(const Vector& b) const;
    Vector solve_transposed(const Vector& b) const;
    const SparseOperator& matrix() const;

private:
    std::variant<std::monostate, SpdSolver, LuSolver> impl_;
};

/// Forward states, adjoints and factorizations of both subsystems at one
/// (d, m). Derivatives are those of the assembled algebraic system, so they
/// agree with finite differences of ForwardModel::eval_Q to rounding.
///
/// With q_s the subsystem QoIs and Q = beta_M q_mech - q_thermal:
///   adjoint        A^T lambda = W x + w
///   gradient       dQ/dphi = q_phi(x) + b_phi(lambda) - A_phi(lambda, x)
///   Hessian action incremental state A x' = b'[v] - A'[v] x and
///                  incremental adjoint A^T lambda' = W x' + W'[v] x + w'[v] - A'[v]^T lambda
/// Results are returned with respect to m (chain factor 0.8 per derivative).
class AdjointWorkspace {
public:
    AdjointWorkspace(const ForwardModel& model, NodalField d, NodalField m);

    const ForwardModel& model() const { return *model_; }
    const NodalField& design() const { return d_; }
    const NodalField& parameter() const { return m_; }
    const NodalField& porosity() const { return phi_; }

    const QoiValues& qoi() const { return qoi_; }
    double value() const { return qoi_.Q; }
    /// dQ/dm.
    const Vector& gradient() const { return gradient_; }
    /// (d^2 Q / dm^2) v.
    Vector hessian_apply(const Vector& v) const;
    /// Gradient with respect to d of psi^T (d^2 Q/dm^2) psi at fixed psi.
    Vector curvature_gradient(const Vector& psi) const;

private:
    struct Part {
        const AffineSubsystem* system = nullptr;
        double weight = 0.0;
        FactoredSystem solver;
        Vector state;
        Vector adjoint;
    };

    Vector hessian_apply_phi(const Vector& dir) const;
    Vector curvature_gradient_phi(const Vector& dir) const;

    const ForwardModel* model_;
    NodalField d_;
    NodalField m_;
    NodalField phi_;
    QoiValues qoi_{};
    std::array<Part, 2> parts_;
    Vector gradient_;
};

/// dQ/dm at (d, m).
Vector grad_m_Q(const ForwardModel& model, const NodalField& d, const NodalField& m);

/// (d^2 Q/dm^2) v at (d, m).
Vector hess_m_action(const ForwardModel& model, const NodalField& d, const NodalField& m, const Vector& v);

}  // namespace pduu
