#pragma once

#include <cstdint>

#include "pduu/fem.hpp"

namespace pduu {

/// Discrete Matern field for the uncertain parameter m.
///
/// The elliptic operator is assembled as
///   A = gamma * K_Theta + delta * M + (sqrt(delta*gamma)/1.42) * B_boundary,
/// where B_boundary is the Robin mass over the whole boundary. The nodal
/// covariance is C = A^{-1} M A^{-1}; samples are m_bar + A^{-1} G xi with
/// G G^T = M built from element-wise Cholesky factors of the consistent mass.
class MaternPrior {
public:
    MaternPrior(const Mesh& mesh, double gamma, double delta, const Tensor2& theta, NodalField mean);

    double gamma() const { return gamma_; }
    double delta() const { return delta_; }
    const Tensor2& theta() const { return theta_; }
    double robin_coefficient() const;
    const NodalField& mean() const { return mean_; }
    const SparseOperator& operator_A() const { return a_; }
    const SparseOperator& mass() const { return m_; }
    Eigen::Index dimension() const { return a_.rows(); }

    /// C v = A^{-1} M A^{-1} v.
    Vector apply_covariance(const Vector& v) const;
    /// C^{-1} v = A M^{-1} A v.
    Vector apply_precision(const Vector& v) const;
    /// A^{-1} v.
    Vector solve_operator(const Vector& v) const;

    /// Length of the standard-normal vector consumed per sample.
    Eigen::Index noise_dimension() const { return g_.cols(); }
    /// m_bar + A^{-1} G xi for a given standard-normal xi.
    NodalField sample_from_noise(const Vector& xi) const;
    /// Deterministic in `seed`.
    NodalField sample(std::uint64_t seed) const;

private:
    double gamma_;
    double delta_;
    Tensor2 theta_;
    NodalField mean_;
    SparseOperator a_;
    SparseOperator m_;
    SparseOperator g_;
    SpdSolver a_solver_;
    SpdSolver m_solver_;
};

MaternPrior build_prior(const Mesh& mesh, double gamma, double delta, const Tensor2& theta,
                        const NodalField& mean);

/// Draws a standard-normal vector from a seeded 64-bit Mersenne twister.
Vector standard_normal(Eigen::Index n, std::uint64_t seed);

/// SplitMix64 finalizer, used to derive per-sample seeds from a root seed.
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace pduu
