#include "pduu/sensitivities.hpp"

#include "pduu/errors.hpp"

namespace pduu {

FactoredSystem::FactoredSystem(const SparseOperator& a, bool symmetric) {
    if (symmetric) impl_.emplace<SpdSolver>(a);
    else impl_.emplace<LuSolver>(a);
}

Vector FactoredSystem::solve(const Vector& b) const {
    if (auto* s = std::get_if<SpdSolver>(&impl_)) return s->solve(b);
    if (auto* l = std::get_if<LuSolver>(&impl_)) return l->solve(b);
    throw SolverError("solve on an empty factorization", INFINITY);
}

Vector FactoredSystem::solve_transposed(const Vector& b) const {
    if (auto* s = std::get_if<SpdSolver>(&impl_)) return s->solve(b);
    if (auto* l = std::get_if<LuSolver>(&impl_)) return l->solve_transposed(b);
    throw SolverError("solve on an empty factorization", INFINITY);
}

const SparseOperator& FactoredSystem::matrix() const {
    if (auto* s = std::get_if<SpdSolver>(&impl_)) return s->matrix();
    if (auto* l = std::get_if<LuSolver>(&impl_)) return l->matrix();
    throw SolverError("empty factorization", INFINITY);
}

AdjointWorkspace::AdjointWorkspace(const ForwardModel& model, NodalField d, NodalField m)
    : model_(&model), d_(std::move(d)), m_(std::move(m)) {
    const PorosityField phi = porosity_map(d_, m_);
    phi_ = phi.fluid();

    parts_[0].system = &model.thermal();
    parts_[0].weight = -1.0;
    parts_[1].system = &model.mechanical();
    parts_[1].weight = model.params().beta_M;

    Vector grad_phi = Vector::Zero(phi_.size());
    double q[2];
    for (std::size_t k = 0; k < parts_.size(); ++k) {
        Part& p = parts_[k];
        const AffineSubsystem& sys = *p.system;
        p.solver = FactoredSystem(sys.matrix(phi_), sys.symmetric());
        p.state = p.solver.solve(sys.rhs(phi_));
        q[k] = sys.objective(p.state, phi_);
        p.adjoint = p.solver.solve_transposed(sys.objective_gradient(p.state, phi_));
        grad_phi += p.weight * (sys.objective_sensitivity(p.state) + sys.rhs_sensitivity(p.adjoint) -
                                sys.matrix_sensitivity(p.adjoint, p.state));
    }
    qoi_.Q_T = q[0];
    qoi_.Q_M = q[1];
    qoi_.Q = model.params().beta_M * qoi_.Q_M - qoi_.Q_T;
    gradient_ = kPorosityChain * grad_phi;
}

Vector AdjointWorkspace::hessian_apply_phi(const Vector& dir) const {
    Vector out = Vector::Zero(phi_.size());
    for (const Part& p : parts_) {
        const AffineSubsystem& sys = *p.system;
        const SparseOperator da = sys.matrix_derivative(dir);
        const Vector dx = p.solver.solve(sys.rhs_derivative(dir) - da * p.state);
        const Vector rhs = sys.objective_hessian_apply(dx, phi_) + sys.objective_mixed_apply(p.state, dir) -
                           da.transpose() * p.adjoint;
        const Vector dadj = p.solver.solve_transposed(rhs);
        out += p.weight * (sys.objective_form_sensitivity(p.state, dx) + sys.objective_linear_sensitivity(dx) +
                           sys.rhs_sensitivity(dadj) - sys.matrix_sensitivity(dadj, p.state) -
                           sys.matrix_sensitivity(p.adjoint, dx));
    }
    return out;
}

Vector AdjointWorkspace::hessian_apply(const Vector& v) const {
    if (v.size() != phi_.size()) throw ArgumentError("Hessian direction has the wrong size");
    if (v.squaredNorm() == 0.0) return Vector::Zero(v.size());
    return kPorosityChain * kPorosityChain * hessian_apply_phi(v);
}

// Gradient of F(phi) = D^2 Q(phi)[dir, dir] via a Lagrangian over the states
// (x, x', lambda) with multipliers (alpha, beta, gamma):
//   A gamma      = -2 A'[dir] x'
//   A^T beta     = 2 (W x' + W'[dir] x + w'[dir] - A'[dir]^T lambda)
//   A^T alpha    = 2 W'[dir] x' - A'[dir]^T beta + W gamma
//   grad F = W_phi(x',x') + b_phi(alpha) - A_phi(alpha,x) - A_phi(beta,x')
//            + W_phi(gamma,x) + w_phi(gamma) - A_phi(lambda,gamma)
Vector AdjointWorkspace::curvature_gradient_phi(const Vector& dir) const {
    Vector out = Vector::Zero(phi_.size());
    for (const Part& p : parts_) {
        const AffineSubsystem& sys = *p.system;
        const SparseOperator da = sys.matrix_derivative(dir);
        const SparseOperator dat = da.transpose();
        const Vector& x = p.state;
        const Vector& lambda = p.adjoint;
        const Vector dx = p.solver.solve(sys.rhs_derivative(dir) - da * x);
        const Vector w_dir = sys.objective_mixed_apply(Vector::Zero(x.size()), dir);
        const Vector gamma = p.solver.solve(-2.0 * (da * dx));
        const Vector beta = p.solver.solve_transposed(
            2.0 * (sys.objective_hessian_apply(dx, phi_) + sys.objective_mixed_apply(x, dir) - dat * lambda));
        const Vector alpha = p.solver.solve_transposed(2.0 * (sys.objective_mixed_apply(dx, dir) - w_dir) -
                                                       dat * beta + sys.objective_hessian_apply(gamma, phi_));
        out += p.weight * (sys.objective_form_sensitivity(dx, dx) + sys.rhs_sensitivity(alpha) -
                           sys.matrix_sensitivity(alpha, x) - sys.matrix_sensitivity(beta, dx) +
                           sys.objective_form_sensitivity(gamma, x) + sys.objective_linear_sensitivity(gamma) -
                           sys.matrix_sensitivity(lambda, gamma));
    }
    return out;
}

Vector AdjointWorkspace::curvature_gradient(const Vector& psi) const {
    if (psi.size() != phi_.size()) throw ArgumentError("direction has the wrong size");
    if (psi.squaredNorm() == 0.0) return Vector::Zero(psi.size());
    return kPorosityChain * kPorosityChain * kPorosityChain * curvature_gradient_phi(psi);
}

Vector grad_m_Q(const ForwardModel& model, const NodalField& d, const NodalField& m) {
    return AdjointWorkspace(model, d, m).gradient();
}

Vector hess_m_action(const ForwardModel& model, const NodalField& d, const NodalField& m, const Vector& v) {
    return AdjointWorkspace(model, d, m).hessian_apply(v);
}

}  // namespace pduu
