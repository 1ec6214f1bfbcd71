#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pduu/fem.hpp"

namespace pduu {

enum class OptimizeStatus { Converged, MaxIters, LineSearchFailure };

std::string to_string(OptimizeStatus status);

struct OptimizeOptions {
    int max_iters = 200;
    int memory = 10;
    /// Stop when ||P(d - g) - d||_inf <= grad_tol * (1 + |J|).
    double grad_tol = 1e-6;
    /// Stop when an accepted step moves no coordinate by more than this.
    double step_tol = 1e-12;
    double lower = 0.0;
    double upper = 1.0;
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 40;

    /// Throws ArgumentError.
    void validate() const;
};

struct IterationRecord {
    int iter = 0;
    double J = 0.0;
    double grad_norm = 0.0;
    double step_length = 0.0;
    int n_active_bounds = 0;
};

struct OptimizeResult {
    NodalField d_opt;
    double J = 0.0;
    std::vector<double> J_history;
    std::vector<double> grad_norm_history;
    std::vector<IterationRecord> log;
    OptimizeStatus status = OptimizeStatus::MaxIters;
    int iterations = 0;
};

/// Returns J(d) and writes dJ/dd into grad.
using ObjectiveFunction = std::function<double(const Vector& d, Vector& grad)>;

/// Nodewise clamp to [lower, upper].
NodalField project_box(const NodalField& d, double lower = 0.0, double upper = 1.0);

/// Projected L-BFGS with Armijo backtracking along the projection arc.
/// Variables at a bound whose gradient pushes outward are held fixed; the
/// two-loop recursion acts on the remaining ones. d0 must lie in the box.
OptimizeResult minimize(const ObjectiveFunction& objective, const NodalField& d0, const OptimizeOptions& opts);

}  // namespace pduu
