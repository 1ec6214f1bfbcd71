#include "pduu/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "pduu/errors.hpp"

namespace pduu {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseOperator from_triplets(Eigen::Index n, const Triplets& trip) {
    SparseOperator a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    return a;
}

void check_size(const Mesh& mesh, const Vector& v, const char* what) {
    if (static_cast<std::size_t>(v.size()) != mesh.num_vertices()) {
        std::ostringstream os;
        os << what << " has " << v.size() << " entries, mesh has " << mesh.num_vertices() << " vertices";
        throw ArgumentError(os.str());
    }
}

double centroid_value(const std::array<int, 3>& tri, const Vector& c) {
    return (c[tri[0]] + c[tri[1]] + c[tri[2]]) / 3.0;
}

// Unit-coefficient element stiffness (Theta grad phi_j) . grad phi_i * area.
Eigen::Matrix3d element_stiffness(const ElementGeometry& g, const Tensor2& aniso) {
    return g.area * (g.grad.transpose() * aniso * g.grad);
}

double relative_residual(const SparseOperator& a, const Vector& x, const Vector& b) {
    const double nb = b.norm();
    const double nr = (a * x - b).norm();
    return nb > 0 ? nr / nb : nr;
}

// Normwise backward error ||r|| / (||A|| ||x|| + ||b||) in the infinity norm.
// When the residual criterion is out of reach because rounding x itself
// leaves a residual of order eps ||A|| ||x||, a backward error at this level
// still certifies a backward-stable solve.
constexpr double kBackwardErrorFloor = 1e-14;

bool solve_accepted(const SparseOperator& a, const Vector& x, const Vector& b, double res) {
    if (res <= kSolveTolerance) return true;
    Vector row_abs = Vector::Zero(a.rows());
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (SparseOperator::InnerIterator it(a, k); it; ++it) row_abs[it.row()] += std::abs(it.value());
    const double denom = row_abs.maxCoeff() * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
    return (a * x - b).lpNorm<Eigen::Infinity>() <= kBackwardErrorFloor * denom;
}

}  // namespace

NodalField interpolate(const Mesh& mesh, const std::function<double(const Point2&)>& fn) {
    NodalField out(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) out[static_cast<Eigen::Index>(i)] = fn(mesh.vertex(i));
    return out;
}

SparseOperator assemble_mass(const Mesh& mesh) {
    Triplets trip;
    trip.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double a = mesh.geometry(t).area / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], i == j ? 2 * a : a);
    }
    return from_triplets(static_cast<Eigen::Index>(mesh.num_vertices()), trip);
}

Vector lumped_mass(const Mesh& mesh) {
    Vector m = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double a = mesh.geometry(t).area / 3.0;
        for (int v : mesh.triangle(t)) m[v] += a;
    }
    return m;
}

SparseOperator assemble_stiffness_form(const Mesh& mesh, const NodalField& coeff, const Tensor2& aniso) {
    check_size(mesh, coeff, "stiffness coefficient");
    Triplets trip;
    trip.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double c = centroid_value(tri, coeff);
        const Eigen::Matrix3d ke = c * element_stiffness(mesh.geometry(t), aniso);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], ke(i, j));
    }
    return from_triplets(static_cast<Eigen::Index>(mesh.num_vertices()), trip);
}

SparseOperator assemble_weighted_stiffness(const Mesh& mesh, const NodalField& coeff, const Tensor2& aniso) {
    check_size(mesh, coeff, "stiffness coefficient");
    for (Eigen::Index i = 0; i < coeff.size(); ++i) {
        if (!(coeff[i] > 0.0)) {
            std::ostringstream os;
            os << "stiffness coefficient must be positive; vertex " << i << " has " << coeff[i];
            throw CoefficientRangeError(os.str());
        }
    }
    return assemble_stiffness_form(mesh, coeff, aniso);
}

RobinTerms assemble_robin(const Mesh& mesh, BoundaryTag tag, const NodalField& weight, double coefficient,
                          double ambient, EdgeQuadrature rule) {
    if (tag != BoundaryTag::Outer && tag != BoundaryTag::Inner) throw ArgumentError("unknown boundary tag");
    check_size(mesh, weight, "Robin weight");
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    Triplets trip;
    Vector load = Vector::Zero(n);
    for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
        const auto& facet = mesh.facets()[f];
        if (facet.tag != tag) continue;
        const int a = facet.vertices[0];
        const int b = facet.vertices[1];
        const double l = coefficient * mesh.facet_length(f);
        const double wa = weight[a];
        const double wb = weight[b];
        if (rule == EdgeQuadrature::Lumped) {
            trip.emplace_back(a, a, 0.5 * l * wa);
            trip.emplace_back(b, b, 0.5 * l * wb);
            load[a] += ambient * 0.5 * l * wa;
            load[b] += ambient * 0.5 * l * wb;
            continue;
        }
        trip.emplace_back(a, a, l * (wa / 4.0 + wb / 12.0));
        trip.emplace_back(b, b, l * (wa / 12.0 + wb / 4.0));
        trip.emplace_back(a, b, l * (wa + wb) / 12.0);
        trip.emplace_back(b, a, l * (wa + wb) / 12.0);
        load[a] += ambient * l * (wa / 3.0 + wb / 6.0);
        load[b] += ambient * l * (wa / 6.0 + wb / 3.0);
    }
    return {from_triplets(n, trip), load};
}

Vector stiffness_sensitivity(const Mesh& mesh, const Vector& x, const Vector& y, const Tensor2& aniso) {
    check_size(mesh, x, "x");
    check_size(mesh, y, "y");
    Vector s = Vector::Zero(x.size());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const Eigen::Vector3d xe(x[tri[0]], x[tri[1]], x[tri[2]]);
        const Eigen::Vector3d ye(y[tri[0]], y[tri[1]], y[tri[2]]);
        const double e = xe.dot(element_stiffness(mesh.geometry(t), aniso) * ye) / 3.0;
        for (int v : tri) s[v] += e;
    }
    return s;
}

Vector robin_sensitivity(const Mesh& mesh, BoundaryTag tag, const Vector& x, const Vector& y, EdgeQuadrature rule) {
    check_size(mesh, x, "x");
    check_size(mesh, y, "y");
    Vector s = Vector::Zero(x.size());
    for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
        const auto& facet = mesh.facets()[f];
        if (facet.tag != tag) continue;
        const int a = facet.vertices[0];
        const int b = facet.vertices[1];
        const double l = mesh.facet_length(f);
        if (rule == EdgeQuadrature::Lumped) {
            s[a] += 0.5 * l * x[a] * y[a];
            s[b] += 0.5 * l * x[b] * y[b];
            continue;
        }
        const double cross_term = (x[a] * y[b] + x[b] * y[a]) / 12.0;
        s[a] += l * (x[a] * y[a] / 4.0 + cross_term + x[b] * y[b] / 12.0);
        s[b] += l * (x[a] * y[a] / 12.0 + cross_term + x[b] * y[b] / 4.0);
    }
    return s;
}

Vector robin_load_sensitivity(const Mesh& mesh, BoundaryTag tag, const Vector& x, EdgeQuadrature rule) {
    check_size(mesh, x, "x");
    Vector s = Vector::Zero(x.size());
    for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
        const auto& facet = mesh.facets()[f];
        if (facet.tag != tag) continue;
        const int a = facet.vertices[0];
        const int b = facet.vertices[1];
        const double l = mesh.facet_length(f);
        if (rule == EdgeQuadrature::Lumped) {
            s[a] += 0.5 * l * x[a];
            s[b] += 0.5 * l * x[b];
            continue;
        }
        s[a] += l * (x[a] / 3.0 + x[b] / 6.0);
        s[b] += l * (x[a] / 6.0 + x[b] / 3.0);
    }
    return s;
}

Vector interpolated_load(const Mesh& mesh, const std::function<double(const Point2&)>& fn) {
    return assemble_mass(mesh) * interpolate(mesh, fn);
}

double l2_error(const Mesh& mesh, const NodalField& uh, const std::function<double(const Point2&)>& exact) {
    check_size(mesh, uh, "field");
    // Dunavant degree-4 rule (barycentric orbit generators, weights sum to 1).
    struct Orbit {
        double a, b, w;
    };
    static constexpr Orbit orbits[] = {
        {0.445948490915965, 0.108103018168070, 0.223381589678011},
        {0.091576213509771, 0.816847572980459, 0.109951743655322},
    };
    double err2 = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const Point2& p0 = mesh.vertex(tri[0]);
        const Point2& p1 = mesh.vertex(tri[1]);
        const Point2& p2 = mesh.vertex(tri[2]);
        double acc = 0.0;
        for (const auto& o : orbits) {
            const std::array<Eigen::Vector3d, 3> bary = {Eigen::Vector3d(o.b, o.a, o.a), Eigen::Vector3d(o.a, o.b, o.a),
                                                         Eigen::Vector3d(o.a, o.a, o.b)};
            for (const auto& l : bary) {
                Point2 p = l[0] * p0 + l[1] * p1 + l[2] * p2;
                double diff = l[0] * uh[tri[0]] + l[1] * uh[tri[1]] + l[2] * uh[tri[2]] - exact(p);
                acc += o.w * diff * diff;
            }
        }
        err2 += acc * mesh.geometry(t).area;
    }
    return std::sqrt(err2);
}

void SpdSolver::factorize(const SparseOperator& a) {
    if (a.rows() != a.cols()) throw ArgumentError("SPD solve needs a square operator");
    a_ = a;
    llt_ = std::make_shared<Eigen::SimplicialLDLT<SparseOperator>>(a_);
    if (llt_->info() != Eigen::Success) throw SolverError("LDLT factorization failed", INFINITY);
    const Vector d = llt_->vectorD();
    if ((d.array() <= 0.0).any()) {
        throw SolverError("operator is not positive definite (nonpositive pivot)", INFINITY);
    }
}

Vector SpdSolver::solve(const Vector& b) const {
    if (!llt_) throw SolverError("solve before factorization", INFINITY);
    if (b.size() != a_.rows()) throw ArgumentError("right-hand side size does not match operator");
    if (b.squaredNorm() == 0.0) return Vector::Zero(b.size());
    Vector x = llt_->solve(b);
    double res = relative_residual(a_, x, b);
    for (int it = 0; it < 3 && res > kSolveTolerance; ++it) {
        x += llt_->solve(b - a_ * x);
        res = relative_residual(a_, x, b);
    }
    if (!solve_accepted(a_, x, b, res)) {
        std::ostringstream os;
        os << "SPD solve stalled at relative residual " << res;
        throw SolverError(os.str(), res);
    }
    return x;
}

void LuSolver::factorize(const SparseOperator& a) {
    if (a.rows() != a.cols()) throw ArgumentError("LU solve needs a square operator");
    a_ = a;
    a_.makeCompressed();
    const Eigen::Index n = a_.rows();
    row_scale_ = Vector::Zero(n);
    col_scale_ = Vector::Zero(n);
    for (Eigen::Index k = 0; k < a_.outerSize(); ++k)
        for (SparseOperator::InnerIterator it(a_, k); it; ++it)
            row_scale_[it.row()] = std::max(row_scale_[it.row()], std::abs(it.value()));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(row_scale_[i] > 0.0)) throw SolverError("LU factorization: structurally singular row", INFINITY);
        row_scale_[i] = 1.0 / row_scale_[i];
    }
    for (Eigen::Index k = 0; k < a_.outerSize(); ++k)
        for (SparseOperator::InnerIterator it(a_, k); it; ++it)
            col_scale_[it.col()] = std::max(col_scale_[it.col()], std::abs(row_scale_[it.row()] * it.value()));
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(col_scale_[j] > 0.0)) throw SolverError("LU factorization: structurally singular column", INFINITY);
        col_scale_[j] = 1.0 / col_scale_[j];
    }
    SparseOperator scaled = row_scale_.asDiagonal() * a_ * col_scale_.asDiagonal();
    scaled.makeCompressed();
    lu_ = std::make_shared<Eigen::SparseLU<SparseOperator, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(scaled);
    lu_->factorize(scaled);
    if (lu_->info() != Eigen::Success) throw SolverError("LU factorization failed: " + lu_->lastErrorMessage(), INFINITY);
}

// A = R^{-1} S C^{-1} with S = R A C factorized.
//   A x = b    <=>  S y = R b,      x = C y
//   A^T x = b  <=>  S^T y = C b,    x = R y
Vector LuSolver::solve(const Vector& b) const {
    if (!lu_) throw SolverError("solve before factorization", INFINITY);
    if (b.size() != a_.rows()) throw ArgumentError("right-hand side size does not match operator");
    if (b.squaredNorm() == 0.0) return Vector::Zero(b.size());
    auto step = [&](const Vector& r) -> Vector {
        return col_scale_.cwiseProduct(lu_->solve(Vector(row_scale_.cwiseProduct(r))));
    };
    Vector x = step(b);
    double res = relative_residual(a_, x, b);
    for (int it = 0; it < 3 && res > kSolveTolerance; ++it) {
        x += step(b - a_ * x);
        res = relative_residual(a_, x, b);
    }
    if (!solve_accepted(a_, x, b, res)) {
        std::ostringstream os;
        os << "LU solve stalled at relative residual " << res;
        throw SolverError(os.str(), res);
    }
    return x;
}

Vector LuSolver::solve_transposed(const Vector& b) const {
    if (!lu_) throw SolverError("solve before factorization", INFINITY);
    if (b.size() != a_.rows()) throw ArgumentError("right-hand side size does not match operator");
    if (b.squaredNorm() == 0.0) return Vector::Zero(b.size());
    const SparseOperator at = a_.transpose();
    auto step = [&](const Vector& r) -> Vector {
        return row_scale_.cwiseProduct(lu_->transpose().solve(Vector(col_scale_.cwiseProduct(r))));
    };
    Vector x = step(b);
    double res = relative_residual(at, x, b);
    for (int it = 0; it < 3 && res > kSolveTolerance; ++it) {
        x += step(b - at * x);
        res = relative_residual(at, x, b);
    }
    if (!solve_accepted(at, x, b, res)) {
        std::ostringstream os;
        os << "transposed LU solve stalled at relative residual " << res;
        throw SolverError(os.str(), res);
    }
    return x;
}

Vector solve_spd(const SparseOperator& a, const Vector& b) { return SpdSolver(a).solve(b); }

}  // namespace pduu
