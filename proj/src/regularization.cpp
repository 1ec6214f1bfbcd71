#include "pduu/regularization.hpp"

#include <cmath>
#include <sstream>

#include "pduu/log.hpp"

namespace pduu {
namespace {

// p3 is the cubic Hermite interpolant on [eps0/2, 2 eps0]; with the slopes
// above it reduces to 1 - (b - d)^3 / (2 L^3), b = 2 eps0, L = 1.5 eps0.
void check_eps0(double eps0) {
    if (!(eps0 > 0.0 && eps0 <= 0.5)) {
        std::ostringstream os;
        os << "eps0 must lie in (0, 0.5], got " << eps0;
        throw ArgumentError(os.str());
    }
}

double p3_eval(const std::array<double, 4>& a, double d) { return a[0] + d * (a[1] + d * (a[2] + d * a[3])); }
double p3_slope(const std::array<double, 4>& a, double d) { return a[1] + d * (2.0 * a[2] + 3.0 * d * a[3]); }

void warn_if_not_monotone(double eps0, const std::array<double, 4>& a) {
    const double lo = 0.5 * eps0;
    const double hi = 2.0 * eps0;
    for (int i = 0; i <= 64; ++i) {
        const double d = lo + (hi - lo) * i / 64.0;
        if (p3_slope(a, d) < -1e-12) {
            std::ostringstream os;
            os << "p3 is not monotone on its branch for eps0 = " << eps0;
            log::warning(os.str());
            return;
        }
    }
}

}  // namespace

void RegConfig::validate() const {
    if (!(beta_tik >= 0.0) || !(beta_l0 >= 0.0)) throw ArgumentError("regularization weights must be nonnegative");
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw ArgumentError("eps0 must lie in (0, 1)");
    if (2.0 * eps0 > 1.0) throw ArgumentError("eps0 must satisfy 2 eps0 <= 1");
    if (K_cont < 1) throw ArgumentError("K_cont must be at least 1");
}

std::array<double, 4> p3_coefficients(double eps0) {
    check_eps0(eps0);
    const double b = 2.0 * eps0;
    const double l = 1.5 * eps0;
    const double c = 1.0 / (2.0 * l * l * l);
    std::array<double, 4> a{1.0 - c * b * b * b, 3.0 * c * b * b, -3.0 * c * b, c};
    static thread_local double checked = -1.0;
    if (checked != eps0) {
        warn_if_not_monotone(eps0, a);
        checked = eps0;
    }
    return a;
}

double f_eps0(double d, double eps0) {
    check_eps0(eps0);
    if (!(d >= 0.0 && d <= 1.0)) {
        std::ostringstream os;
        os << "f_eps0 needs d in [0, 1], got " << d;
        throw ArgumentError(os.str());
    }
    if (d <= 0.5 * eps0) return d / eps0;
    if (d < 2.0 * eps0) return p3_eval(p3_coefficients(eps0), d);
    return 1.0;
}

double f_eps0_derivative(double d, double eps0) {
    check_eps0(eps0);
    if (!(d >= 0.0 && d <= 1.0)) {
        std::ostringstream os;
        os << "f_eps0 needs d in [0, 1], got " << d;
        throw ArgumentError(os.str());
    }
    if (d <= 0.5 * eps0) return 1.0 / eps0;
    if (d < 2.0 * eps0) return p3_slope(p3_coefficients(eps0), d);
    return 0.0;
}

Regularizer::Regularizer(const Mesh& mesh)
    : k_(assemble_weighted_stiffness(mesh, NodalField::Ones(static_cast<Eigen::Index>(mesh.num_vertices())))),
      mass_row_sums_(lumped_mass(mesh)) {}

RegValue Regularizer::evaluate(const NodalField& d, const RegConfig& cfg) const {
    cfg.validate();
    if (d.size() != k_.rows()) throw ArgumentError("design size does not match the mesh");
    RegValue out;
    out.gradient = Vector::Zero(d.size());
    if (cfg.beta_tik > 0.0) {
        const Vector kd = k_ * d;
        out.value += cfg.beta_tik * d.dot(kd);
        out.gradient += 2.0 * cfg.beta_tik * kd;
    }
    if (cfg.beta_l0 > 0.0) {
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            out.value += cfg.beta_l0 * mass_row_sums_[i] * f_eps0(d[i], cfg.eps0);
            out.gradient[i] += cfg.beta_l0 * mass_row_sums_[i] * f_eps0_derivative(d[i], cfg.eps0);
        }
    }
    return out;
}

RegValue eval_R(const Mesh& mesh, const NodalField& d, const RegConfig& cfg) {
    return Regularizer(mesh).evaluate(d, cfg);
}

double sparsity_metric(const NodalField& d) {
    if (d.size() == 0) return 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d[i] > 0.05 && d[i] < 0.95) ++count;
    return static_cast<double>(count) / static_cast<double>(d.size());
}

std::vector<RegConfig> continuation_schedule(int K_cont) {
    if (K_cont < 1) throw ArgumentError("K_cont must be at least 1");
    std::vector<RegConfig> out;
    out.push_back({1.0, 0.0, 0.5, K_cont});
    for (int i = 1; i <= K_cont; ++i) out.push_back({0.0, 1.0, std::ldexp(1.0, -i), K_cont});
    return out;
}

ContinuationResult continuation_run(const NodalField& d_init, int K_cont, const StageOptimizer& optimize) {
    const std::vector<RegConfig> schedule = continuation_schedule(K_cont);
    ContinuationResult out;
    NodalField d = d_init;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        StageOutcome so = optimize(d, schedule[i]);
        StageRecord rec;
        rec.stage = static_cast<int>(i);
        rec.config = schedule[i];
        rec.J = so.J;
        rec.iterations = so.result.iterations;
        rec.status = so.result.status;
        rec.design = so.result.d_opt;
        rec.sparsity = sparsity_metric(rec.design);
        out.history.push_back(rec);
        if (so.result.status == OptimizeStatus::LineSearchFailure && so.result.iterations == 0) {
            std::ostringstream os;
            os << "continuation stage " << i << " (eps0 = " << schedule[i].eps0 << ") made no progress";
            throw ContinuationError(os.str(), out.history);
        }
        if (so.result.status != OptimizeStatus::Converged) {
            std::ostringstream os;
            os << "continuation stage " << i << " ended with status " << to_string(so.result.status);
            log::warning(os.str());
        }
        d = rec.design;
    }
    out.design = d;
    return out;
}

}  // namespace pduu
