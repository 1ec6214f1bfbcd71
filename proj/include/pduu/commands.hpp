#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pduu/config.hpp"

namespace pduu {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitNotConverged = 4;

std::shared_ptr<const Mesh> build_mesh(const RunConfig& cfg);
RiskContext build_context(const RunConfig& cfg, std::shared_ptr<const Mesh> mesh);

struct ForwardReport {
    std::size_t n_vertices = 0;
    QoiValues qoi{};
    ForwardState state;
    NodalField phi;
};

struct TaylorRow {
    int N = 0;
    double E_quad = 0.0;
    double V_quad = 0.0;
    double rel_err_mean = 0.0;
    double rel_err_var = 0.0;
};

struct TaylorMcReport {
    std::size_t n_vertices = 0;
    double Q_bar = 0.0;
    double gradient_variance = 0.0;  // <grad, C grad>
    Vector eigenvalues;
    McEstimate mc;
    std::vector<TaylorRow> rows;
};

struct SpectrumReport {
    std::vector<std::size_t> n_vertices;
    std::vector<Vector> spectra;
};

struct OptimizeRun {
    double beta_V = 0.0;            // as listed in the config
    double beta_V_effective = 0.0;  // beta_V * beta_V_scale
    OptimizeResult result;
    std::vector<StageRecord> stages;
    double J = 0.0;
    double E_quad = 0.0;
    double V_quad = 0.0;
    McEstimate mc;
};

struct OptimizeReport {
    std::vector<OptimizeRun> runs;
    bool all_converged = true;
};

/// Experiment drivers. They compute without touching the file system; the
/// cmd_* wrappers add console and file output and map errors to exit codes.
ForwardReport run_forward(const RunConfig& cfg);
TaylorMcReport run_taylor_vs_mc(const RunConfig& cfg);
SpectrumReport run_spectrum(const RunConfig& cfg);
/// `on_run` is called after each beta_V finishes (used to flush partial output).
OptimizeReport run_optimize(const RunConfig& cfg,
                            const std::function<void(const OptimizeReport&)>& on_run = {});

int cmd_forward(const RunConfig& cfg, std::ostream& out);
int cmd_taylor_vs_mc(const RunConfig& cfg, std::ostream& out);
int cmd_spectrum(const RunConfig& cfg, std::ostream& out);
int cmd_optimize(const RunConfig& cfg, std::ostream& out);

/// Full command line: porous-duu <command> --config <path> [--out <dir>]
/// [--seed <u64>] [--workers <n>]. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pduu
