#include <doctest.h>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "pduu/errors.hpp"
#include "pduu/log.hpp"

using namespace pduu;
using fixtures::normal_vector;

namespace {

RiskEvaluation stub_eval(double q_bar, const Vector& grad, const Vector& lambdas) {
    RiskEvaluation ev;
    ev.Q_bar = q_bar;
    ev.grad_bar = grad;
    ev.eigenvalues = lambdas;
    ev.N = static_cast<int>(lambdas.size());
    return ev;
}

// Standard error of an unbiased sample variance under Gaussian data.
double variance_std_error(double var, std::size_t n) { return var * std::sqrt(2.0 / static_cast<double>(n - 1)); }

struct SmallPrior {
    Mesh mesh = build_lshape_mesh(0.125);
    MaternPrior prior{mesh, 4.0, 40.0, Tensor2::Identity(),
                      NodalField::Zero(static_cast<Eigen::Index>(mesh.num_vertices()))};
};

}  // namespace

TEST_CASE("Taylor mean arithmetic") {
    Vector l(3);
    l << 2.0, 1.0, 0.5;
    CHECK(taylor_mean(stub_eval(1.0, Vector(), l)) == doctest::Approx(2.75).epsilon(1e-15));
    CHECK(taylor_mean(stub_eval(1.0, Vector(), Vector())) == 1.0);
}

TEST_CASE("Taylor variance arithmetic and scaling") {
    SmallPrior sp;
    const Eigen::Index n = sp.prior.dimension();
    Vector l(2);
    l << 2.0, 1.0;
    CHECK(taylor_variance(stub_eval(0.0, Vector::Zero(n), l), sp.prior) == doctest::Approx(2.5).epsilon(1e-15));

    const Vector g = normal_vector(n, 3);
    Vector l3(3);
    l3 << 0.3, -0.2, 0.05;
    const double v1 = taylor_variance(stub_eval(1.0, g, l3), sp.prior);
    const double alpha = -3.7;
    const double va = taylor_variance(stub_eval(alpha, alpha * g, alpha * l3), sp.prior);
    CHECK(std::abs(va - alpha * alpha * v1) <= 1e-10 * va);
}

TEST_CASE("linear stub: Taylor moments match Monte Carlo") {
    SmallPrior sp;
    const Eigen::Index n = sp.prior.dimension();
    const Vector g = normal_vector(n, 4);
    const double c = 2.5;
    auto q = [&](const NodalField& m) { return c + g.dot(m); };

    const RiskEvaluation ev = stub_eval(c, g, Vector());
    const double mean = taylor_mean(ev);
    const double var = taylor_variance(ev, sp.prior);
    CHECK(var == doctest::Approx(g.dot(sp.prior.apply_covariance(g))).epsilon(1e-14));

    const McEstimate mc = mc_estimate(q, sp.prior, 5000, 123);
    CHECK(mc.n_samples == 5000);
    CHECK(mc.n_failed == 0);
    CHECK(std::abs(mc.mean - mean) <= 3.0 * mc.std_error);
    CHECK(std::abs(mc.variance - var) <= 3.0 * variance_std_error(var, 5000));
}

TEST_CASE("quadratic stub: full-rank Taylor moments are exact") {
    SmallPrior sp;
    const Eigen::Index n = sp.prior.dimension();
    const Vector g = normal_vector(n, 5, 0.5);
    Eigen::MatrixXd h(n, n);
    {
        const Vector r = normal_vector(n * n, 6);
        for (Eigen::Index i = 0; i < n * n; ++i) h(i % n, i / n) = r[i];
        h = 0.5 * (h + h.transpose()).eval() * 40.0;
    }
    const double c = -1.0;
    auto q = [&](const NodalField& m) { return c + g.dot(m) + 0.5 * m.dot(h * m); };

    // dense oracle: C = A^{-1} M A^{-1}
    const Eigen::MatrixXd a(sp.prior.operator_A());
    const Eigen::MatrixXd ai = a.inverse();
    const Eigen::MatrixXd cov = ai * Eigen::MatrixXd(sp.prior.mass()) * ai;
    const Eigen::MatrixXd hc = h * cov;
    const double mean_exact = c + 0.5 * hc.trace();
    const double var_exact = g.dot(cov * g) + 0.5 * (hc * hc).trace();

    GeneralizedPencil pencil;
    pencil.dimension = n;
    pencil.h = [&](const Vector& v) -> Vector { return h * v; };
    pencil.b = [&](const Vector& v) { return sp.prior.apply_precision(v); };
    pencil.b_inverse = [&](const Vector& v) { return sp.prior.apply_covariance(v); };
    RandomizedEigenOptions o;
    o.rank = static_cast<int>(n);
    o.seed = 8;
    const EigenPairs e = randomized_eigensolve(pencil, o);
    REQUIRE(e.values.size() == n);

    const RiskEvaluation ev = stub_eval(c, g, e.values);
    CHECK(taylor_mean(ev) == doctest::Approx(mean_exact).epsilon(1e-8));
    CHECK(taylor_variance(ev, sp.prior) == doctest::Approx(var_exact).epsilon(1e-8));

    const McEstimate mc = mc_estimate(q, sp.prior, 20000, 77);
    CHECK(std::abs(mc.mean - mean_exact) <= 3.0 * mc.std_error);
    // non-Gaussian Q: use the empirical fourth moment for the variance error bar
    double m4 = 0.0;
    for (std::size_t k = 0; k < 20000; ++k) {
        const double dq = q(sp.prior.sample(mix_seed(77, k))) - mc.mean;
        m4 += dq * dq * dq * dq;
    }
    m4 /= 20000.0;
    const double var_se = std::sqrt((m4 - mc.variance * mc.variance) / 20000.0);
    CHECK(std::abs(mc.variance - var_exact) <= 3.0 * var_se);
}

TEST_CASE("Monte Carlo estimator") {
    SmallPrior sp;
    const McEstimate k = mc_estimate([](const NodalField&) { return 4.25; }, sp.prior, 100, 1);
    CHECK(k.mean == 4.25);
    CHECK(k.variance == 0.0);
    CHECK(k.std_error == 0.0);

    CHECK_THROWS_AS(mc_estimate([](const NodalField&) { return 0.0; }, sp.prior, 1, 1), ArgumentError);

    const Vector g = normal_vector(sp.prior.dimension(), 9);
    auto q = [&](const NodalField& m) { return g.dot(m); };
    const McEstimate a = mc_estimate(q, sp.prior, 4000, 10);
    const McEstimate b = mc_estimate(q, sp.prior, 8000, 11);
    CHECK(a.std_error / b.std_error == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));

    const McEstimate a2 = mc_estimate(q, sp.prior, 4000, 10, 3);
    CHECK(a.mean == a2.mean);
    CHECK(a.variance == a2.variance);
}

TEST_CASE("Monte Carlo failure accounting") {
    SmallPrior sp;
    std::size_t calls = 0;
    // the k-th sample is identified through its seed-derived value
    const NodalField first = sp.prior.sample(mix_seed(5, 0));
    auto fail_first = [&](const NodalField& m) -> double {
        ++calls;
        if (m == first) throw PorosityRangeError("synthetic", 0, 1.5);
        return m.sum();
    };
    log::set_sink([](log::Level, const std::string&) {});
    const McEstimate ok = mc_estimate(fail_first, sp.prior, 2000, 5);
    CHECK(ok.n_failed == 1);
    CHECK(calls == 2000);
    CHECK_THROWS_AS(mc_estimate(fail_first, sp.prior, 500, 5), SolverError);
    log::set_sink({});
}

TEST_CASE("objective pipeline on the forward model") {
    const auto model = fixtures::model(0.125);
    const RiskContext ctx = fixtures::context(model, 5, 10);
    const Eigen::Index n = model->num_vertices();
    const NodalField d = fixtures::varied_design(n, 2);

    const RiskEvaluation e0 = objective_J(d, RiskWeights{0.0, 0.0, 1.0}, RegConfig{}, ctx);
    CHECK(e0.J_total == taylor_mean(e0));
    CHECK(e0.E_quad == e0.Q_bar + 0.5 * e0.eigenvalues.sum());
    CHECK(e0.V_quad == e0.grad_bar.dot(e0.cov_grad) + 0.5 * e0.eigenvalues.squaredNorm());
    CHECK(e0.Q_bar == model->eval_Q(d, ctx.prior->mean()));
    CHECK(e0.N == 5);
    CHECK(e0.oversampling == 10);
    for (Eigen::Index i = 0; i + 1 < e0.eigenvalues.size(); ++i)
        CHECK(std::abs(e0.eigenvalues[i]) >= std::abs(e0.eigenvalues[i + 1]));
    for (Eigen::Index i = 0; i < e0.N; ++i)
        for (Eigen::Index j = 0; j < e0.N; ++j) {
            const double ip = e0.eigenvectors.col(i).dot(ctx.prior->apply_precision(e0.eigenvectors.col(j)));
            CHECK(std::abs(ip - (i == j ? 1.0 : 0.0)) <= 1e-8);
        }

    const RiskEvaluation e1 = objective_J(d, RiskWeights{0.0, 0.0, 1.0}, RegConfig{}, ctx);
    CHECK(e1.J_total == e0.J_total);

    const RiskWeights w{100.0, 3.0, 1.0};
    const RiskEvaluation e2 = objective_J(d, w, RegConfig{}, ctx);
    CHECK(e2.J_total == doctest::Approx(e2.E_quad + 100.0 * e2.V_quad + 3.0 * e2.R).epsilon(1e-15));

    const NodalField flat = NodalField::Constant(n, 0.4);
    const RiskEvaluation e3 = objective_J(flat, RiskWeights{0.0, 5.0, 1.0}, RegConfig{}, ctx);
    CHECK(std::abs(e3.R) <= 1e-12);
    CHECK(e3.J_total == doctest::Approx(e3.E_quad).epsilon(1e-15));
}

TEST_CASE("objective argument checks") {
    const auto model = fixtures::model(0.25);
    const RiskContext ctx = fixtures::context(model, 2, 5);
    const Eigen::Index n = model->num_vertices();
    NodalField d = NodalField::Constant(n, 0.5);
    CHECK_THROWS_AS(objective_J(d, RiskWeights{-1.0, 0.0, 1.0}, RegConfig{}, ctx), ArgumentError);
    CHECK_THROWS_AS(objective_J(d, RiskWeights{0.0, -1.0, 1.0}, RegConfig{}, ctx), ArgumentError);
    CHECK_THROWS_AS(objective_J(d, RiskWeights{0.0, 0.0, 2.0}, RegConfig{}, ctx), ArgumentError);
    d[0] = 1.2;
    CHECK_THROWS_AS(objective_J(d, RiskWeights{}, RegConfig{}, ctx), ArgumentError);
}

TEST_CASE("forward-model Monte Carlo is reproducible") {
    const auto model = fixtures::model(0.125);
    const RiskContext ctx = fixtures::context(model, 3, 5);
    const NodalField d = NodalField::Constant(model->num_vertices(), 0.5);
    const McEstimate a = mc_estimate(d, 40, 99, ctx);
    const McEstimate b = mc_estimate(d, 40, 99, ctx);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
    CHECK(a.n_failed == 0);
    CHECK(a.std_error > 0.0);
}
