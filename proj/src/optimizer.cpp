#include "pduu/optimizer.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "pduu/errors.hpp"
#include "pduu/log.hpp"

namespace pduu {
namespace {

struct Pair {
    Vector s;
    Vector y;
};

// Mask of free variables: 1 where the variable may move, 0 where it sits at
// a bound and the gradient points outward.
Vector free_mask(const Vector& x, const Vector& g, const OptimizeOptions& o) {
    Vector mask = Vector::Ones(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if ((x[i] <= o.lower && g[i] > 0.0) || (x[i] >= o.upper && g[i] < 0.0)) mask[i] = 0.0;
    }
    return mask;
}

Vector two_loop(const std::deque<Pair>& mem, const Vector& g, const Vector& mask) {
    Vector q = g.cwiseProduct(mask);
    std::vector<double> alpha(mem.size());
    std::vector<double> rho(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
        const Vector s = mem[k].s.cwiseProduct(mask);
        const Vector y = mem[k].y.cwiseProduct(mask);
        const double sy = s.dot(y);
        rho[k] = sy > 0.0 ? 1.0 / sy : 0.0;
        alpha[k] = rho[k] * s.dot(q);
        q -= alpha[k] * y;
    }
    const Vector s_last = mem.back().s.cwiseProduct(mask);
    const Vector y_last = mem.back().y.cwiseProduct(mask);
    const double yy = y_last.squaredNorm();
    const double sy = s_last.dot(y_last);
    Vector r = (yy > 0.0 && sy > 0.0 ? sy / yy : 1.0) * q;
    for (std::size_t k = 0; k < mem.size(); ++k) {
        const Vector s = mem[k].s.cwiseProduct(mask);
        const Vector y = mem[k].y.cwiseProduct(mask);
        const double beta = rho[k] * y.dot(r);
        r += (alpha[k] - beta) * s;
    }
    return -r.cwiseProduct(mask);
}

double projected_gradient_norm(const Vector& x, const Vector& g, const OptimizeOptions& o) {
    return (project_box(x - g, o.lower, o.upper) - x).lpNorm<Eigen::Infinity>();
}

}  // namespace

std::string to_string(OptimizeStatus status) {
    switch (status) {
        case OptimizeStatus::Converged: return "converged";
        case OptimizeStatus::MaxIters: return "max_iters";
        case OptimizeStatus::LineSearchFailure: return "line_search_failure";
    }
    return "unknown";
}

void OptimizeOptions::validate() const {
    if (max_iters < 0) throw ArgumentError("optimizer max_iters must be nonnegative");
    if (memory < 1) throw ArgumentError("optimizer memory must be at least 1");
    if (!(grad_tol > 0.0) || !(step_tol > 0.0)) throw ArgumentError("optimizer tolerances must be positive");
    if (!(lower < upper)) throw ArgumentError("optimizer bounds must satisfy lower < upper");
    if (!(armijo > 0.0 && armijo < 1.0)) throw ArgumentError("Armijo constant must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw ArgumentError("backtracking factor must lie in (0, 1)");
    if (max_backtracks < 1) throw ArgumentError("max_backtracks must be at least 1");
}

NodalField project_box(const NodalField& d, double lower, double upper) {
    return d.cwiseMax(lower).cwiseMin(upper);
}

OptimizeResult minimize(const ObjectiveFunction& objective, const NodalField& d0, const OptimizeOptions& opts) {
    opts.validate();
    for (Eigen::Index i = 0; i < d0.size(); ++i) {
        if (!(d0[i] >= opts.lower && d0[i] <= opts.upper)) {
            std::ostringstream os;
            os << "initial design violates the bounds at node " << i << " (" << d0[i] << ")";
            throw ArgumentError(os.str());
        }
    }

    OptimizeResult res;
    Vector x = d0;
    Vector g(x.size());
    double f = objective(x, g);
    std::deque<Pair> mem;
    double last_step = 0.0;

    for (int k = 0;; ++k) {
        const double pg = projected_gradient_norm(x, g, opts);
        const Vector mask = free_mask(x, g, opts);
        const int n_active = static_cast<int>(x.size() - static_cast<Eigen::Index>(mask.sum()));
        res.J_history.push_back(f);
        res.grad_norm_history.push_back(pg);
        res.log.push_back({k, f, pg, last_step, n_active});
        res.iterations = k;
        {
            std::ostringstream os;
            os << "iter " << k << " J=" << f << " |pg|=" << pg << " step=" << last_step << " active=" << n_active;
            log::debug(os.str());
        }
        if (pg <= opts.grad_tol * (1.0 + std::abs(f))) {
            res.status = OptimizeStatus::Converged;
            break;
        }
        if (k >= opts.max_iters) {
            res.status = OptimizeStatus::MaxIters;
            break;
        }

        bool accepted = false;
        Vector x_new;
        Vector g_new(x.size());
        double f_new = f;
        double alpha = 1.0;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            Vector p;
            if (!mem.empty()) p = two_loop(mem, g, mask);
            if (mem.empty() || !(p.dot(g) < 0.0)) {
                mem.clear();
                const double gmax = g.cwiseProduct(mask).lpNorm<Eigen::Infinity>();
                p = -g.cwiseProduct(mask) / (gmax > 0.0 ? gmax : 1.0);
            }
            alpha = 1.0;
            for (int bt = 0; bt < opts.max_backtracks; ++bt, alpha *= opts.backtrack) {
                x_new = project_box(x + alpha * p, opts.lower, opts.upper);
                const Vector step = x_new - x;
                if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
                f_new = objective(x_new, g_new);
                if (std::isfinite(f_new) && f_new <= f + opts.armijo * g.dot(step)) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted && mem.empty()) break;
            if (!accepted) mem.clear();
        }
        if (!accepted) {
            res.status = OptimizeStatus::LineSearchFailure;
            break;
        }

        Pair pr{x_new - x, g_new - g};
        last_step = pr.s.lpNorm<Eigen::Infinity>();
        const double sy = pr.s.dot(pr.y);
        if (sy > 1e-12 * pr.y.squaredNorm()) {
            mem.push_back(std::move(pr));
            if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
        }
        x = std::move(x_new);
        g = g_new;
        f = f_new;
        if (last_step <= opts.step_tol) {
            res.J_history.push_back(f);
            res.grad_norm_history.push_back(projected_gradient_norm(x, g, opts));
            res.log.push_back({k + 1, f, res.grad_norm_history.back(), last_step,
                               static_cast<int>(x.size() - static_cast<Eigen::Index>(free_mask(x, g, opts).sum()))});
            res.iterations = k + 1;
            res.status = OptimizeStatus::Converged;
            break;
        }
    }
    res.d_opt = x;
    res.J = f;
    return res;
}

}  // namespace pduu
