#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "pduu/fem.hpp"

namespace pduu {

using LinearMap = std::function<Vector(const Vector&)>;

/// Symmetric pencil H psi = lambda B psi given through its actions. B must be
/// symmetric positive-definite; b_inverse applies B^{-1}.
struct GeneralizedPencil {
    Eigen::Index dimension = 0;
    LinearMap h;
    LinearMap b;
    LinearMap b_inverse;
};

struct RandomizedEigenOptions {
    int rank = 25;
    int oversampling = 10;
    int power_iterations = 0;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// Eigenvalues sorted by magnitude, descending; columns of `vectors` are
/// B-orthonormal. Fewer than `rank` pairs come back only when the sketch
/// range is numerically smaller than the request.
struct EigenPairs {
    Vector values;
    Eigen::MatrixXd vectors;
};

/// Double-pass randomized generalized eigensolver.
///   Y = B^{-1} H Omega, Q = B-orthonormal basis of range(Y),
///   T = Q^T H Q = V diag(lambda) V^T, psi = Q V.
/// Each power iteration replaces Y by B^{-1} H Q. Throws ArgumentError when
/// the rank exceeds the dimension.
EigenPairs randomized_eigensolve(const GeneralizedPencil& pencil, const RandomizedEigenOptions& opts);

/// B-orthonormalizes the columns of y (two passes of classical Gram-Schmidt).
/// Columns that collapse below `drop_tol` of their original B-norm are dropped.
Eigen::MatrixXd b_orthonormalize(const Eigen::MatrixXd& y, const LinearMap& b, double drop_tol = 1e-12);

}  // namespace pduu
