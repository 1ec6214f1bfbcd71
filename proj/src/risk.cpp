#include "pduu/risk.hpp"

#include <cmath>
#include <sstream>

#include "pduu/errors.hpp"
#include "pduu/log.hpp"
#include "pduu/parallel.hpp"

namespace pduu {

void RiskWeights::validate() const {
    if (!(beta_V >= 0.0)) throw ArgumentError("beta_V must be nonnegative");
    if (!(beta_R >= 0.0)) throw ArgumentError("beta_R must be nonnegative");
    if (!std::isfinite(beta_M)) throw ArgumentError("beta_M must be finite");
}

RiskContext RiskContext::build(std::shared_ptr<const ForwardModel> model, std::shared_ptr<const MaternPrior> prior,
                               const RandomizedEigenOptions& eigen) {
    if (!model || !prior) throw ArgumentError("risk context needs a model and a prior");
    if (prior->dimension() != model->num_vertices()) throw ArgumentError("prior and model live on different meshes");
    RiskContext ctx;
    ctx.regularizer = std::make_shared<const Regularizer>(model->mesh());
    ctx.model = std::move(model);
    ctx.prior = std::move(prior);
    ctx.eigen = eigen;
    return ctx;
}

EigenPairs eigensolve_hc(const AdjointWorkspace& ws, const MaternPrior& prior, const RandomizedEigenOptions& opts) {
    GeneralizedPencil pencil;
    pencil.dimension = prior.dimension();
    pencil.h = [&ws](const Vector& v) { return ws.hessian_apply(v); };
    pencil.b = [&prior](const Vector& v) { return prior.apply_precision(v); };
    pencil.b_inverse = [&prior](const Vector& v) { return prior.apply_covariance(v); };
    return randomized_eigensolve(pencil, opts);
}

double taylor_mean(const RiskEvaluation& eval) { return eval.Q_bar + 0.5 * eval.eigenvalues.sum(); }

double taylor_variance(const RiskEvaluation& eval, const MaternPrior& prior) {
    const double v = eval.grad_bar.dot(prior.apply_covariance(eval.grad_bar)) + 0.5 * eval.eigenvalues.squaredNorm();
    if (v < 0.0) {
        std::ostringstream os;
        os << "Taylor variance is negative (" << v << ")";
        log::warning(os.str());
    }
    return v;
}

RiskEvaluation objective_J(const NodalField& d, const RiskWeights& weights, const RegConfig& reg,
                           const RiskContext& ctx) {
    weights.validate();
    if (!ctx.model || !ctx.prior || !ctx.regularizer) throw ArgumentError("incomplete risk context");
    if (weights.beta_M != ctx.model->params().beta_M)
        throw ArgumentError("risk weights and forward model disagree on beta_M");
    if (d.size() != ctx.model->num_vertices()) throw ArgumentError("design size does not match the mesh");
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d[i] >= 0.0 && d[i] <= 1.0)) {
            std::ostringstream os;
            os << "design must lie in [0, 1]; node " << i << " has " << d[i];
            throw ArgumentError(os.str());
        }
    }

    RiskEvaluation ev;
    ev.d = d;
    ev.weights = weights;
    ev.reg = reg;
    auto ws = std::make_shared<const AdjointWorkspace>(*ctx.model, d, ctx.prior->mean());
    ev.Q_bar = ws->value();
    ev.grad_bar = ws->gradient();
    ev.cov_grad = ctx.prior->apply_covariance(ev.grad_bar);
    const EigenPairs eig = eigensolve_hc(*ws, *ctx.prior, ctx.eigen);
    ev.eigenvalues = eig.values;
    ev.eigenvectors = eig.vectors;
    ev.N = static_cast<int>(eig.values.size());
    ev.oversampling = ctx.eigen.oversampling;
    ev.workspace = ws;

    ev.E_quad = taylor_mean(ev);
    ev.V_quad = ev.grad_bar.dot(ev.cov_grad) + 0.5 * ev.eigenvalues.squaredNorm();
    if (ev.V_quad < 0.0) {
        std::ostringstream os;
        os << "Taylor variance is negative (" << ev.V_quad << ")";
        log::warning(os.str());
    }
    if (weights.beta_R > 0.0) {
        RegValue r = ctx.regularizer->evaluate(d, reg);
        ev.R = r.value;
        ev.R_gradient = std::move(r.gradient);
    } else {
        ev.R = 0.0;
        ev.R_gradient = Vector::Zero(d.size());
    }
    ev.J_total = ev.E_quad + weights.beta_V * ev.V_quad + weights.beta_R * ev.R;
    return ev;
}

Vector grad_d_Jquad(const NodalField& d, const RiskEvaluation& eval, const RiskWeights& weights) {
    if (!eval.workspace || d.size() != eval.d.size() || d != eval.d)
        throw StalenessError("risk evaluation was computed at a different design");
    if (weights.beta_V != eval.weights.beta_V || weights.beta_R != eval.weights.beta_R ||
        weights.beta_M != eval.weights.beta_M)
        throw StalenessError("risk evaluation was computed with different weights");

    const AdjointWorkspace& ws = *eval.workspace;
    Vector g = eval.grad_bar;
    const Eigen::Index n = eval.eigenvalues.size();
    const double scale1 = eval.eigenvalues.size() > 0 ? std::abs(eval.eigenvalues[0]) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i + 1 < n && std::abs(eval.eigenvalues[i] - eval.eigenvalues[i + 1]) < 1e-10 * scale1) {
            std::ostringstream os;
            os << "eigenvalues " << i << " and " << i + 1 << " are numerically degenerate; "
               << "the eigenvalue gradient is a subgradient";
            log::warning(os.str());
        }
        const double c = 0.5 + weights.beta_V * eval.eigenvalues[i];
        g += c * ws.curvature_gradient(eval.eigenvectors.col(i));
    }
    if (weights.beta_V > 0.0) g += 2.0 * weights.beta_V * ws.hessian_apply(eval.cov_grad);
    if (weights.beta_R > 0.0) g += weights.beta_R * eval.R_gradient;
    return g;
}

McEstimate mc_estimate(const std::function<double(const NodalField&)>& q, const MaternPrior& prior,
                       std::size_t n_samples, std::uint64_t seed, int workers) {
    if (n_samples < 2) throw ArgumentError("Monte Carlo needs at least 2 samples");
    std::vector<double> values(n_samples, 0.0);
    std::vector<char> failed(n_samples, 0);
    parallel_for(n_samples, workers, [&](std::size_t k) {
        try {
            values[k] = q(prior.sample(mix_seed(seed, k)));
        } catch (const PorosityRangeError&) {
            failed[k] = 1;
        }
    });

    McEstimate out;
    out.n_samples = n_samples;
    for (char f : failed) out.n_failed += static_cast<std::size_t>(f);
    if (static_cast<double>(out.n_failed) > 1e-3 * static_cast<double>(n_samples)) {
        std::ostringstream os;
        os << out.n_failed << " of " << n_samples << " Monte Carlo samples left the admissible porosity range";
        throw SolverError(os.str(), INFINITY);
    }
    if (out.n_failed > 0) {
        std::ostringstream os;
        os << out.n_failed << " Monte Carlo samples skipped (porosity out of range)";
        log::warning(os.str());
    }
    const std::size_t used = n_samples - out.n_failed;
    if (used < 2) throw SolverError("fewer than 2 usable Monte Carlo samples", INFINITY);
    double sum = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k)
        if (!failed[k]) sum += values[k];
    out.mean = sum / static_cast<double>(used);
    double ss = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k)
        if (!failed[k]) ss += (values[k] - out.mean) * (values[k] - out.mean);
    out.variance = ss / static_cast<double>(used - 1);
    out.std_error = std::sqrt(out.variance / static_cast<double>(used));
    return out;
}

McEstimate mc_estimate(const NodalField& d, std::size_t n_samples, std::uint64_t seed, const RiskContext& ctx) {
    if (!ctx.model || !ctx.prior) throw ArgumentError("incomplete risk context");
    const ForwardModel& model = *ctx.model;
    return mc_estimate([&](const NodalField& m) { return model.eval_Q(d, m); }, *ctx.prior, n_samples, seed,
                       ctx.eigen.workers);
}

}  // namespace pduu
