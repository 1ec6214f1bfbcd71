#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "pduu/errors.hpp"
#include "pduu/prior.hpp"

using namespace pduu;

namespace {

MaternPrior make_prior(const Mesh& mesh, double gamma, double delta) {
    return build_prior(mesh, gamma, delta, Tensor2::Identity(),
                       NodalField::Zero(static_cast<Eigen::Index>(mesh.num_vertices())));
}

Vector random_vector(Eigen::Index n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = N(rng);
    return v;
}

Eigen::MatrixXd dense_covariance(const MaternPrior& prior) {
    const Eigen::MatrixXd a(prior.operator_A());
    const Eigen::MatrixXd m(prior.mass());
    const Eigen::MatrixXd ai = a.inverse();
    return ai * m * ai;
}

}  // namespace

TEST_CASE("operator assembly with unit parameters") {
    const Mesh mesh = build_lshape_mesh(0.25);
    const MaternPrior prior = make_prior(mesh, 1.0, 1.0);
    const Eigen::Index n = prior.dimension();
    CHECK(prior.robin_coefficient() == doctest::Approx(1.0 / 1.42).epsilon(1e-15));

    const NodalField ones = NodalField::Ones(n);
    SparseOperator b = assemble_robin(mesh, BoundaryTag::Outer, ones, 1.0 / 1.42, 0.0).matrix +
                       assemble_robin(mesh, BoundaryTag::Inner, ones, 1.0 / 1.42, 0.0).matrix;
    const SparseOperator expected = assemble_weighted_stiffness(mesh, ones) + assemble_mass(mesh) + b;
    const Eigen::MatrixXd diff = Eigen::MatrixXd(prior.operator_A()) - Eigen::MatrixXd(expected);
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12);

    const MaternPrior p2 = make_prior(mesh, 3.0, 7.0);
    const double rc = std::sqrt(21.0) / 1.42;
    const Vector lhs = p2.operator_A() * ones;
    const Vector rhs = 7.0 * (p2.mass() * ones) +
                       assemble_robin(mesh, BoundaryTag::Outer, ones, rc, 0.0).matrix * ones +
                       assemble_robin(mesh, BoundaryTag::Inner, ones, rc, 0.0).matrix * ones;
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("operator is SPD on a 2x2 square") {
    const MaternPrior prior = make_prior(build_unit_square_mesh(2, 2), 4.0, 40.0);
    const Eigen::MatrixXd a(prior.operator_A());
    CHECK((a - a.transpose()).norm() <= 1e-14 * a.norm());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("parameter validation") {
    const Mesh mesh = build_unit_square_mesh(2, 2);
    const NodalField mean = NodalField::Zero(9);
    CHECK_THROWS_AS(build_prior(mesh, 0.0, 1.0, Tensor2::Identity(), mean), ArgumentError);
    CHECK_THROWS_AS(build_prior(mesh, 1.0, -1.0, Tensor2::Identity(), mean), ArgumentError);
    Tensor2 bad;
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(build_prior(mesh, 1.0, 1.0, bad, mean), ArgumentError);
    Tensor2 asym;
    asym << 1.0, 0.1, 0.0, 1.0;
    CHECK_THROWS_AS(build_prior(mesh, 1.0, 1.0, asym, mean), ArgumentError);
    CHECK_THROWS_AS(build_prior(mesh, 1.0, 1.0, Tensor2::Identity(), NodalField::Zero(4)), ArgumentError);
}

TEST_CASE("covariance application") {
    const Mesh small = build_unit_square_mesh(2, 2);
    const MaternPrior ps = make_prior(small, 1.0, 2.0);
    const Eigen::MatrixXd c = dense_covariance(ps);
    const Vector v = random_vector(9, 1);
    CHECK((ps.apply_covariance(v) - c * v).norm() <= 1e-8 * (c * v).norm());
    CHECK(ps.apply_covariance(Vector::Zero(9)).norm() == 0.0);

    const Mesh mesh = build_lshape_mesh(0.125);
    const MaternPrior prior = make_prior(mesh, 4.0, 40.0);
    const Eigen::Index n = prior.dimension();
    const Vector u = random_vector(n, 2);
    const Vector w = random_vector(n, 3);
    const double uw = u.dot(prior.apply_covariance(w));
    const double wu = w.dot(prior.apply_covariance(u));
    CHECK(std::abs(uw - wu) <= 1e-9 * std::abs(uw));

    // linearity and inverse relation with the precision operator
    const Vector lin = prior.apply_covariance(2.0 * u - w) - 2.0 * prior.apply_covariance(u) + prior.apply_covariance(w);
    CHECK(lin.norm() <= 1e-12 * prior.apply_covariance(u).norm());
    CHECK((prior.apply_precision(prior.apply_covariance(u)) - u).norm() <= 1e-8 * u.norm());
    CHECK_THROWS_AS(prior.apply_covariance(Vector::Zero(3)), ArgumentError);
}

TEST_CASE("sampling factor reproduces the covariance exactly") {
    const Mesh mesh = build_lshape_mesh(0.25);
    const MaternPrior prior = make_prior(mesh, 2.0, 5.0);
    const Eigen::Index n = prior.dimension();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < prior.noise_dimension(); ++j) {
        const Vector s = prior.sample_from_noise(Vector::Unit(prior.noise_dimension(), j));
        acc += s * s.transpose();
    }
    const Eigen::MatrixXd c = dense_covariance(prior);
    CHECK((acc - c).norm() <= 1e-10 * c.norm());
}

TEST_CASE("samples are deterministic in the seed") {
    const Mesh mesh = build_lshape_mesh(0.125);
    NodalField mean = NodalField::Constant(static_cast<Eigen::Index>(mesh.num_vertices()), 0.01);
    const MaternPrior prior(mesh, 4.0, 40.0, Tensor2::Identity(), mean);
    const NodalField a = prior.sample(42);
    const NodalField b = prior.sample(42);
    CHECK(a == b);
    CHECK(a != prior.sample(43));
    CHECK(mix_seed(7, 1) != mix_seed(7, 2));
    CHECK(mix_seed(7, 1) == mix_seed(7, 1));
}

TEST_CASE("empirical moments") {
    const Mesh mesh = build_lshape_mesh(0.125);
    const MaternPrior prior = make_prior(mesh, 4.0, 40.0);
    const Eigen::Index n = prior.dimension();

    const int ns = 5000;
    Vector sum = Vector::Zero(n), sq = Vector::Zero(n);
    Vector sum2000 = Vector::Zero(n), sq2000 = Vector::Zero(n);
    for (int k = 0; k < ns; ++k) {
        const NodalField s = prior.sample(mix_seed(99, static_cast<std::uint64_t>(k)));
        sum += s;
        sq += s.cwiseAbs2();
        if (k < 2000) {
            sum2000 += s;
            sq2000 += s.cwiseAbs2();
        }
    }
    // mean within 4 standard errors at >= 95% of nodes (2000 samples)
    int ok = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = sum2000[i] / 2000.0;
        const double var = (sq2000[i] - 2000.0 * mean * mean) / 1999.0;
        if (std::abs(mean) <= 4.0 * std::sqrt(var / 2000.0)) ++ok;
    }
    CHECK(ok >= static_cast<int>(std::ceil(0.95 * static_cast<double>(n))));

    // variance against diag(C) from unit-vector applications (5000 samples)
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double cii = prior.apply_covariance(Vector::Unit(n, i))[i];
        const double mean = sum[i] / ns;
        const double var = (sq[i] - ns * mean * mean) / (ns - 1);
        worst = std::max(worst, std::abs(var - cii) / cii);
    }
    CHECK(worst <= 0.15);
}

TEST_CASE("larger reaction weight lowers the peak variance") {
    const Mesh mesh = build_lshape_mesh(0.125);
    const Eigen::Index n = static_cast<Eigen::Index>(mesh.num_vertices());
    double previous = INFINITY;
    for (double delta : {10.0, 40.0, 160.0}) {
        const MaternPrior prior = make_prior(mesh, 4.0, delta);
        double peak = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) peak = std::max(peak, prior.apply_covariance(Vector::Unit(n, i))[i]);
        CHECK(peak < previous);
        previous = peak;
    }
}
