#pragma once

#include <memory>

#include "pduu/fem.hpp"

namespace pduu {

struct BoundaryConditions {
    double T_hot = 300.0;   // K, Outer ambient
    double T_cold = 270.0;  // K, Inner ambient
    double conv_coeff = 15.0;  // W/(m^2 K)
    Eigen::Vector2d traction{0.0, -1e3};  // Pa, applied on Outer
};

struct ModelParams {
    double kappa_s = 2.0;      // W/(m K)
    double kappa_f = 0.06;     // W/(m K)
    double h_exchange = 10.0;  // W/(m^3 K)
    double C_compress = 1e-6;  // 1/Pa
    double mu = 1e6;           // Pa
    double K_bulk = 2e6;       // Pa
    double beta_M = 1.0;
    BoundaryConditions bc;

    /// Plane-strain convention lambda = K - mu.
    double lambda_lame() const { return K_bulk - mu; }
    /// Throws ArgumentError on nonpositive moduli or conductivities.
    void validate() const;
};

/// Nodal fluid volume fraction with 0 < phi_f < 1 at every vertex.
class PorosityField {
public:
    explicit PorosityField(NodalField phi_f);
    const NodalField& fluid() const { return phi_f_; }
    NodalField solid() const { return NodalField::Ones(phi_f_.size()) - phi_f_; }
    Eigen::Index size() const { return phi_f_.size(); }

private:
    NodalField phi_f_;
};

inline constexpr double kPorosityMin = 0.1;
inline constexpr double kPorositySpan = 0.8;
/// Chain factor d(phi_f)/dm of the linear porosity map.
inline constexpr double kPorosityChain = kPorositySpan;

/// phi_f = 0.1 + 0.8 (d + m); throws PorosityRangeError outside (0.01, 0.99)
/// naming the worst vertex.
PorosityField porosity_map(const NodalField& d, const NodalField& m);

struct ForwardState {
    NodalField T_s;
    NodalField T_f;
    NodalField u_x;
    NodalField u_y;
    NodalField p;
};

/// Discrete system A(phi) x = b(phi) with A and b affine in the nodal
/// porosity, together with a quantity of interest
///   q(x, phi) = 1/2 x^T W(phi) x + w(phi)^T x
/// that is quadratic in the state and affine in phi. All "sensitivity"
/// members return nodal gradients (one entry per mesh vertex) with respect to
/// phi at fixed state vectors. Because everything is affine in phi, the
/// derivative operators do not depend on the base point.
class AffineSubsystem {
public:
    virtual ~AffineSubsystem() = default;

    virtual Eigen::Index size() const = 0;
    virtual bool symmetric() const = 0;

    virtual SparseOperator matrix(const NodalField& phi) const = 0;
    virtual Vector rhs(const NodalField& phi) const = 0;
    /// dA[dir], db[dir].
    virtual SparseOperator matrix_derivative(const NodalField& dir) const = 0;
    virtual Vector rhs_derivative(const NodalField& dir) const = 0;

    virtual double objective(const Vector& x, const NodalField& phi) const = 0;
    /// W(phi) y.
    virtual Vector objective_hessian_apply(const Vector& y, const NodalField& phi) const = 0;
    /// W(phi) x + w(phi).
    Vector objective_gradient(const Vector& x, const NodalField& phi) const;
    /// W'[dir] x + w'[dir].
    virtual Vector objective_mixed_apply(const Vector& x, const NodalField& dir) const = 0;

    /// d/dphi (x^T A y).
    virtual Vector matrix_sensitivity(const Vector& x, const Vector& y) const = 0;
    /// d/dphi (x^T b).
    virtual Vector rhs_sensitivity(const Vector& x) const = 0;
    /// d/dphi (x^T W y).
    virtual Vector objective_form_sensitivity(const Vector& x, const Vector& y) const = 0;
    /// d/dphi (w^T y).
    virtual Vector objective_linear_sensitivity(const Vector& y) const = 0;
    /// d/dphi q(x, phi) at fixed x.
    Vector objective_sensitivity(const Vector& x) const;

protected:
    virtual Vector objective_linear(const NodalField& phi) const = 0;
};

/// Two-temperature steady conduction with interphase exchange and
/// porosity-weighted convection on both boundaries. State [T_s; T_f].
class ThermalSubsystem final : public AffineSubsystem {
public:
    ThermalSubsystem(std::shared_ptr<const Mesh> mesh, const ModelParams& params);

    Eigen::Index size() const override { return 2 * n_; }
    bool symmetric() const override { return true; }
    SparseOperator matrix(const NodalField& phi) const override;
    Vector rhs(const NodalField& phi) const override;
    SparseOperator matrix_derivative(const NodalField& dir) const override;
    Vector rhs_derivative(const NodalField& dir) const override;
    double objective(const Vector& x, const NodalField& phi) const override;
    Vector objective_hessian_apply(const Vector& y, const NodalField& phi) const override;
    Vector objective_mixed_apply(const Vector& x, const NodalField& dir) const override;
    Vector matrix_sensitivity(const Vector& x, const Vector& y) const override;
    Vector rhs_sensitivity(const Vector& x) const override;
    Vector objective_form_sensitivity(const Vector& x, const Vector& y) const override;
    Vector objective_linear_sensitivity(const Vector& y) const override;

    /// Block operator with solid weight ws and fluid weight wf on the
    /// diffusion and boundary terms. Exchange blocks are added when requested.
    SparseOperator blocks(const NodalField& ws, const NodalField& wf, double boundary_coeff,
                          bool with_exchange) const;
    /// Convection load [T_hot g_out(ws) + T_cold g_in(ws); same for wf] * coeff.
    Vector loads(const NodalField& ws, const NodalField& wf, double coeff) const;

protected:
    Vector objective_linear(const NodalField& phi) const override;

private:
    Vector form_sensitivity(const Vector& x, const Vector& y, double boundary_coeff) const;
    Vector load_sensitivity(const Vector& x, double coeff) const;

    std::shared_ptr<const Mesh> mesh_;
    ModelParams params_;
    Eigen::Index n_;
    SparseOperator mass_;
};

/// Equal-order P1 displacement/pressure system
///   [ K_e   G(2phi-1) ] [u]   [F]
///   [ D     C M       ] [p] = [0]
/// with the Inner boundary clamped. Vectors are in the reduced (free dof)
/// numbering; use expand/restrict to move between layouts.
class MechanicalSubsystem final : public AffineSubsystem {
public:
    MechanicalSubsystem(std::shared_ptr<const Mesh> mesh, const ModelParams& params);

    Eigen::Index size() const override { return static_cast<Eigen::Index>(free_dofs_.size()); }
    bool symmetric() const override { return false; }
    SparseOperator matrix(const NodalField& phi) const override;
    Vector rhs(const NodalField& phi) const override;
    SparseOperator matrix_derivative(const NodalField& dir) const override;
    Vector rhs_derivative(const NodalField& dir) const override;
    double objective(const Vector& x, const NodalField& phi) const override;
    Vector objective_hessian_apply(const Vector& y, const NodalField& phi) const override;
    Vector objective_mixed_apply(const Vector& x, const NodalField& dir) const override;
    Vector matrix_sensitivity(const Vector& x, const Vector& y) const override;
    Vector rhs_sensitivity(const Vector& x) const override;
    Vector objective_form_sensitivity(const Vector& x, const Vector& y) const override;
    Vector objective_linear_sensitivity(const Vector& y) const override;

    /// Full layout [u_x; u_y; p] (3n) from reduced vector.
    Vector expand(const Vector& reduced) const;
    Vector restrict_to_free(const Vector& full) const;

    /// Full-layout elasticity operator (2n x 2n), divergence (n x 2n) and traction load (2n).
    const SparseOperator& elasticity() const { return k_full_; }
    const SparseOperator& divergence() const { return d_full_; }
    const Vector& traction_load() const { return f_full_; }
    /// Coupling block G(s) in full layout (2n x n).
    SparseOperator coupling(const NodalField& s) const;

protected:
    Vector objective_linear(const NodalField& phi) const override;

private:
    SparseOperator reduce(const SparseOperator& full3n) const;
    SparseOperator coupling_block(const NodalField& s) const;

    std::shared_ptr<const Mesh> mesh_;
    ModelParams params_;
    Eigen::Index n_;
    std::vector<int> free_dofs_;   // reduced -> full
    std::vector<int> full_to_free_;  // full -> reduced or -1
    SparseOperator k_full_;
    SparseOperator d_full_;
    Vector f_full_;
    SparseOperator base_reduced_;  // [K 0; D CM] restricted
    SparseOperator w_reduced_;     // [K 0; 0 0] restricted
    Vector w_lin_reduced_;         // [F; 0] restricted
};

struct QoiValues {
    double Q_T;
    double Q_M;
    double Q;
};

/// Forward model context: mesh + parameters. Immutable; solves allocate their
/// own workspace.
class ForwardModel {
public:
    ForwardModel(std::shared_ptr<const Mesh> mesh, const ModelParams& params);

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    const ModelParams& params() const { return params_; }
    const ThermalSubsystem& thermal() const { return thermal_; }
    const MechanicalSubsystem& mechanical() const { return mechanical_; }
    Eigen::Index num_vertices() const { return static_cast<Eigen::Index>(mesh_->num_vertices()); }

    void solve_thermal(const PorosityField& phi, ForwardState& state) const;
    void solve_mechanical(const PorosityField& phi, ForwardState& state) const;
    ForwardState solve(const PorosityField& phi) const;

    double eval_QT(const ForwardState& state, const PorosityField& phi) const;
    double eval_QM(const ForwardState& state) const;

    QoiValues evaluate(const NodalField& d, const NodalField& m, ForwardState* state = nullptr) const;
    /// beta_M Q_M - Q_T.
    double eval_Q(const NodalField& d, const NodalField& m) const;

    Vector thermal_vector(const ForwardState& state) const;
    Vector mechanical_vector(const ForwardState& state) const;  // reduced layout

private:
    std::shared_ptr<const Mesh> mesh_;
    ModelParams params_;
    ThermalSubsystem thermal_;
    MechanicalSubsystem mechanical_;
};

}  // namespace pduu
