#include "pduu/prior.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "pduu/errors.hpp"

namespace pduu {
namespace {

SparseOperator boundary_mass(const Mesh& mesh, double coefficient) {
    const NodalField ones = NodalField::Ones(static_cast<Eigen::Index>(mesh.num_vertices()));
    SparseOperator b = assemble_robin(mesh, BoundaryTag::Outer, ones, coefficient, 0.0).matrix;
    b += assemble_robin(mesh, BoundaryTag::Inner, ones, coefficient, 0.0).matrix;
    return b;
}

// G with G G^T = M: block column per element holding the Cholesky factor of
// the element mass matrix.
SparseOperator mass_factor(const Mesh& mesh) {
    Eigen::Matrix3d ref;
    ref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    const Eigen::Matrix3d lref = ref.llt().matrixL();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(6 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double s = std::sqrt(mesh.geometry(t).area / 12.0);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j <= i; ++j)
                trip.emplace_back(tri[i], static_cast<int>(3 * t) + j, s * lref(i, j));
    }
    SparseOperator g(static_cast<Eigen::Index>(mesh.num_vertices()),
                     static_cast<Eigen::Index>(3 * mesh.num_triangles()));
    g.setFromTriplets(trip.begin(), trip.end());
    g.makeCompressed();
    return g;
}

}  // namespace

MaternPrior::MaternPrior(const Mesh& mesh, double gamma, double delta, const Tensor2& theta, NodalField mean)
    : gamma_(gamma), delta_(delta), theta_(theta), mean_(std::move(mean)) {
    if (!(gamma > 0.0) || !(delta > 0.0)) {
        std::ostringstream os;
        os << "Matern prior needs gamma > 0 and delta > 0 (got " << gamma << ", " << delta << ")";
        throw ArgumentError(os.str());
    }
    if (std::abs(theta(0, 1) - theta(1, 0)) > 1e-14 * theta.norm() || !(theta(0, 0) > 0.0) ||
        !(theta.determinant() > 0.0)) {
        throw ArgumentError("anisotropy tensor must be symmetric positive-definite");
    }
    if (static_cast<std::size_t>(mean_.size()) != mesh.num_vertices())
        throw ArgumentError("prior mean size does not match the mesh");

    const NodalField ones = NodalField::Ones(static_cast<Eigen::Index>(mesh.num_vertices()));
    m_ = assemble_mass(mesh);
    a_ = gamma_ * assemble_weighted_stiffness(mesh, ones, theta_) + delta_ * m_ +
         boundary_mass(mesh, robin_coefficient());
    a_.makeCompressed();
    g_ = mass_factor(mesh);
    a_solver_.factorize(a_);
    m_solver_.factorize(m_);
}

double MaternPrior::robin_coefficient() const { return std::sqrt(delta_ * gamma_) / 1.42; }

Vector MaternPrior::solve_operator(const Vector& v) const { return a_solver_.solve(v); }

Vector MaternPrior::apply_covariance(const Vector& v) const {
    if (v.size() != dimension()) throw ArgumentError("covariance input has the wrong size");
    return a_solver_.solve(m_ * a_solver_.solve(v));
}

Vector MaternPrior::apply_precision(const Vector& v) const {
    if (v.size() != dimension()) throw ArgumentError("precision input has the wrong size");
    return a_ * m_solver_.solve(a_ * v);
}

NodalField MaternPrior::sample_from_noise(const Vector& xi) const {
    if (xi.size() != noise_dimension()) throw ArgumentError("noise vector has the wrong size");
    return mean_ + a_solver_.solve(g_ * xi);
}

NodalField MaternPrior::sample(std::uint64_t seed) const {
    return sample_from_noise(standard_normal(noise_dimension(), seed));
}

MaternPrior build_prior(const Mesh& mesh, double gamma, double delta, const Tensor2& theta, const NodalField& mean) {
    return MaternPrior(mesh, gamma, delta, theta, mean);
}

Vector standard_normal(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = dist(rng);
    return xi;
}

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace pduu
