#pragma once

#include <functional>
#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "pduu/mesh.hpp"

namespace pduu {

using Vector = Eigen::VectorXd;
/// One real per mesh vertex.
using NodalField = Eigen::VectorXd;
using SparseOperator = Eigen::SparseMatrix<double>;
using Tensor2 = Eigen::Matrix2d;

/// Relative residual every direct solve must reach. A solve whose residual
/// stalls above it is still accepted when its normwise backward error is at
/// the rounding level (1e-14); otherwise SolverError is thrown.
inline constexpr double kSolveTolerance = 1e-10;

NodalField interpolate(const Mesh& mesh, const std::function<double(const Point2&)>& fn);

/// Consistent P1 mass matrix.
SparseOperator assemble_mass(const Mesh& mesh);

/// Row sums of the consistent mass matrix.
Vector lumped_mass(const Mesh& mesh);

/// K_ij = \int c (Theta grad phi_j) . grad phi_i with c evaluated at the
/// element centroid. Throws CoefficientRangeError unless c > 0 everywhere.
SparseOperator assemble_weighted_stiffness(const Mesh& mesh, const NodalField& coeff,
                                           const Tensor2& aniso = Tensor2::Identity());

/// Same bilinear form without the positivity check; the coefficient may be any
/// signed nodal field (used for derivative directions).
SparseOperator assemble_stiffness_form(const Mesh& mesh, const NodalField& coeff,
                                       const Tensor2& aniso = Tensor2::Identity());

/// Exact edge integration of P1 products, or the trapezoid rule (diagonal
/// boundary mass).
enum class EdgeQuadrature { Exact, Lumped };

struct RobinTerms {
    SparseOperator matrix;
    Vector load;
};

/// B_ij = \int_{Gamma_tag} c w phi_i phi_j and g_i = \int_{Gamma_tag} c w T_amb phi_i
/// for P1 weight w.
RobinTerms assemble_robin(const Mesh& mesh, BoundaryTag tag, const NodalField& weight,
                          double coefficient, double ambient, EdgeQuadrature rule = EdgeQuadrature::Exact);

/// d/dc_k (x^T K(c) y) for the centroid-coefficient stiffness form.
Vector stiffness_sensitivity(const Mesh& mesh, const Vector& x, const Vector& y,
                             const Tensor2& aniso = Tensor2::Identity());

/// d/dw_k (x^T B(w) y) for the Robin boundary form with unit coefficient.
Vector robin_sensitivity(const Mesh& mesh, BoundaryTag tag, const Vector& x, const Vector& y,
                         EdgeQuadrature rule = EdgeQuadrature::Exact);

/// d/dw_k (x^T g(w)) for the Robin load with unit coefficient and unit ambient.
Vector robin_load_sensitivity(const Mesh& mesh, BoundaryTag tag, const Vector& x,
                              EdgeQuadrature rule = EdgeQuadrature::Exact);

/// Load vector of a P1 source interpolated at the nodes: M * f_h.
Vector interpolated_load(const Mesh& mesh, const std::function<double(const Point2&)>& fn);

/// L2 norm of (u_h - u_exact) with a degree-4 element quadrature.
double l2_error(const Mesh& mesh, const NodalField& uh,
                const std::function<double(const Point2&)>& exact);

/// Cached LDL^T factorization of a symmetric positive-definite operator.
class SpdSolver {
public:
    SpdSolver() = default;
    explicit SpdSolver(const SparseOperator& a) { factorize(a); }

    void factorize(const SparseOperator& a);
    /// Solves A x = b and checks the relative residual; throws SolverError.
    Vector solve(const Vector& b) const;
    const SparseOperator& matrix() const { return a_; }

private:
    SparseOperator a_;
    std::shared_ptr<Eigen::SimplicialLDLT<SparseOperator>> llt_;
};

/// Cached LU factorization for general square operators with transposed
/// solves. Rows and columns are equilibrated before factorization.
class LuSolver {
public:
    LuSolver() = default;
    explicit LuSolver(const SparseOperator& a) { factorize(a); }

    void factorize(const SparseOperator& a);
    Vector solve(const Vector& b) const;
    Vector solve_transposed(const Vector& b) const;
    const SparseOperator& matrix() const { return a_; }

private:
    SparseOperator a_;
    Vector row_scale_;
    Vector col_scale_;
    std::shared_ptr<Eigen::SparseLU<SparseOperator, Eigen::COLAMDOrdering<int>>> lu_;
};

/// One-shot SPD solve with relative residual <= 1e-10.
Vector solve_spd(const SparseOperator& a, const Vector& b);

}  // namespace pduu
