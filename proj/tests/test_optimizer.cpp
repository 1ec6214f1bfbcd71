#include <doctest.h>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "pduu/errors.hpp"
#include "pduu/optimizer.hpp"

using namespace pduu;

namespace {

ObjectiveFunction bowl(double target) {
    return [target](const Vector& d, Vector& g) {
        g = 2.0 * (d.array() - target).matrix();
        return (d.array() - target).square().sum();
    };
}

double rosenbrock(const Vector& d, Vector& g) {
    const double x = d[0], y = d[1];
    g.resize(2);
    g[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
    g[1] = 200.0 * (y - x * x);
    return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
}

}  // namespace

TEST_CASE("box projection") {
    Vector d(5);
    d << -0.5, 0.0, 0.3, 1.0, 1.7;
    Vector expected(5);
    expected << 0.0, 0.0, 0.3, 1.0, 1.0;
    CHECK(project_box(d) == expected);
    CHECK(project_box(d, 0.2, 0.4) == (Vector(5) << 0.2, 0.2, 0.3, 0.4, 0.4).finished());
}

TEST_CASE("separable bowl converges to the interior minimizer") {
    OptimizeOptions o;
    const OptimizeResult r = minimize(bowl(0.5), Vector::Constant(20, 0.1), o);
    CHECK(r.status == OptimizeStatus::Converged);
    CHECK(r.iterations <= 30);
    CHECK((r.d_opt.array() - 0.5).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("target outside the box lands on the bound") {
    OptimizeOptions o;
    const OptimizeResult r = minimize(bowl(1.5), Vector::Constant(10, 0.2), o);
    CHECK(r.status == OptimizeStatus::Converged);
    CHECK((r.d_opt.array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(r.log.back().n_active_bounds == 10);
}

TEST_CASE("Rosenbrock on the unit square") {
    OptimizeOptions o;
    o.max_iters = 500;
    o.grad_tol = 1e-12;
    Vector d0(2);
    d0 << 0.1, 0.9;
    const OptimizeResult r = minimize(rosenbrock, d0, o);
    CHECK(r.J <= 1e-6);
    CHECK(std::abs(r.d_opt[0] - 1.0) <= 1e-3);
    CHECK(std::abs(r.d_opt[1] - 1.0) <= 1e-3);
}

TEST_CASE("iterates stay feasible and J is non-increasing") {
    const Eigen::Index n = 30;
    const Vector target = fixtures::normal_vector(n, 3);  // many components outside [0, 1]
    std::vector<Vector> seen;
    auto f = [&](const Vector& d, Vector& g) {
        seen.push_back(d);
        const Vector r = d - target;
        g = 2.0 * r + 0.4 * d.array().sin().matrix();
        return r.squaredNorm() - 0.4 * d.array().cos().sum();
    };
    OptimizeOptions o;
    const OptimizeResult r = minimize(f, Vector::Constant(n, 0.5), o);
    for (const Vector& d : seen) {
        CHECK(d.minCoeff() >= 0.0);
        CHECK(d.maxCoeff() <= 1.0);
    }
    REQUIRE(r.J_history.size() >= 2);
    for (std::size_t i = 1; i < r.J_history.size(); ++i) CHECK(r.J_history[i] <= r.J_history[i - 1]);
    CHECK(r.J_history.size() == r.grad_norm_history.size());
    CHECK(r.J == r.J_history.back());
    CHECK(r.status == OptimizeStatus::Converged);
}

TEST_CASE("interior quadratic matches the dense solution") {
    const int n = 25;
    Eigen::MatrixXd q(n, n);
    const Vector v = fixtures::normal_vector(n * n, 4);
    for (int i = 0; i < n * n; ++i) q(i % n, i / n) = v[i];
    q = q * q.transpose() / n + Eigen::MatrixXd::Identity(n, n);
    // minimizer chosen well inside the box
    const Vector x_star = (0.5 + 0.3 * fixtures::normal_vector(n, 5).array().tanh()).matrix();
    const Vector b = q * x_star;
    auto f = [&](const Vector& d, Vector& g) {
        g = q * d - b;
        return 0.5 * d.dot(q * d) - b.dot(d);
    };
    OptimizeOptions o;
    o.grad_tol = 1e-14;
    o.max_iters = 500;
    const OptimizeResult r = minimize(f, Vector::Constant(n, 0.5), o);
    const Vector dense = q.ldlt().solve(b);
    CHECK((r.d_opt - dense).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("iteration cap and status strings") {
    OptimizeOptions o;
    o.max_iters = 2;
    o.grad_tol = 1e-300;
    o.step_tol = 1e-300;
    Vector d0(2);
    d0 << 0.1, 0.9;
    const OptimizeResult r = minimize(rosenbrock, d0, o);
    CHECK(r.status == OptimizeStatus::MaxIters);
    CHECK(r.iterations == 2);
    CHECK(to_string(OptimizeStatus::Converged) == "converged");
    CHECK(to_string(OptimizeStatus::MaxIters) != to_string(OptimizeStatus::LineSearchFailure));
}

TEST_CASE("options and start point validation") {
    OptimizeOptions o;
    o.max_iters = -1;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
    o = OptimizeOptions{};
    o.memory = 0;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
    o = OptimizeOptions{};
    o.lower = 1.0;
    o.upper = 0.0;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
    o = OptimizeOptions{};
    o.grad_tol = 0.0;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
    o = OptimizeOptions{};
    o.armijo = 1.5;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
    CHECK_THROWS_AS(minimize(bowl(0.5), Vector::Constant(3, 1.2), OptimizeOptions{}), ArgumentError);
}
