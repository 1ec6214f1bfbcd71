#include "pduu/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pduu/errors.hpp"
#include "pduu/io.hpp"
#include "pduu/log.hpp"

namespace pduu {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<const MaternPrior> build_prior_for(const RunConfig& cfg, const Mesh& mesh) {
    const NodalField mean = NodalField::Constant(static_cast<Eigen::Index>(mesh.num_vertices()), cfg.prior.mean);
    return std::make_shared<const MaternPrior>(mesh, cfg.prior.gamma, cfg.prior.delta, cfg.theta(), mean);
}

NodalField initial_design(const RunConfig& cfg, const Mesh& mesh) {
    return NodalField::Constant(static_cast<Eigen::Index>(mesh.num_vertices()), cfg.design.initial);
}

std::uint64_t mc_seed(const RunConfig& cfg) { return mix_seed(cfg.risk.seed, 2); }

void write_config_echo(const RunConfig& cfg) {
    fs::create_directories(cfg.output.directory);
    std::ofstream out(fs::path(cfg.output.directory) / "config.yaml");
    out << dump_config(cfg);
}

void write_iteration_log(const fs::path& path, const OptimizeResult& res) {
    CsvWriter csv(path, {"iter", "J", "grad_norm", "step_length", "n_active_bounds"});
    for (const auto& r : res.log) csv.cell(r.iter).cell(r.J).cell(r.grad_norm).cell(r.step_length).cell(r.n_active_bounds).end_row();
}

void write_stage_log(const fs::path& path, const std::vector<StageRecord>& stages) {
    CsvWriter csv(path, {"stage", "eps0", "J", "sparsity_metric", "iterations"});
    for (const auto& s : stages) {
        csv.cell(s.stage).cell(s.stage == 0 ? 0.0 : s.config.eps0).cell(s.J).cell(s.sparsity).cell(s.iterations);
        csv.end_row();
    }
}

void write_summary(const fs::path& path, const OptimizeReport& rep) {
    CsvWriter csv(path, {"beta_V", "J", "E_quad", "V_quad", "mc_var_at_optimum", "mc_mean_at_optimum"});
    for (const auto& r : rep.runs) csv.cell(r.beta_V).cell(r.J).cell(r.E_quad).cell(r.V_quad).cell(r.mc.variance).cell(r.mc.mean).end_row();
}

// Minimizes J over d for one stage configuration.
OptimizeResult optimize_stage(const RiskContext& ctx, const RiskWeights& w, const RegConfig& reg,
                              const NodalField& d0, const OptimizeOptions& opts) {
    auto objective = [&](const Vector& d, Vector& grad) {
        const RiskEvaluation ev = objective_J(d, w, reg, ctx);
        grad = grad_d_Jquad(d, ev, w);
        return ev.J_total;
    };
    return minimize(objective, d0, opts);
}

}  // namespace

std::shared_ptr<const Mesh> build_mesh(const RunConfig& cfg) {
    if (cfg.mesh.geometry == "lshape") return std::make_shared<const Mesh>(build_lshape_mesh(cfg.mesh.h));
    if (cfg.mesh.geometry == "square") {
        const int n = static_cast<int>(std::ceil(1.0 / cfg.mesh.h - 1e-12));
        return std::make_shared<const Mesh>(build_unit_square_mesh(n, n));
    }
    throw ConfigError("mesh.geometry: unknown geometry `" + cfg.mesh.geometry + "`", "mesh.geometry");
}

RiskContext build_context(const RunConfig& cfg, std::shared_ptr<const Mesh> mesh) {
    auto model = std::make_shared<const ForwardModel>(mesh, cfg.model_params());
    return RiskContext::build(model, build_prior_for(cfg, *mesh), cfg.eigen_options());
}

ForwardReport run_forward(const RunConfig& cfg) {
    cfg.validate();
    const auto mesh = build_mesh(cfg);
    const ForwardModel model(mesh, cfg.model_params());
    const auto prior = build_prior_for(cfg, *mesh);
    ForwardReport rep;
    rep.n_vertices = mesh->num_vertices();
    const NodalField d = initial_design(cfg, *mesh);
    rep.qoi = model.evaluate(d, prior->mean(), &rep.state);
    rep.phi = porosity_map(d, prior->mean()).fluid();
    return rep;
}

TaylorMcReport run_taylor_vs_mc(const RunConfig& cfg) {
    cfg.validate();
    RunConfig c = cfg;
    c.risk.rank = std::max(cfg.risk.rank, cfg.mc.N_sweep.back());
    const auto mesh = build_mesh(c);
    const RiskContext ctx = build_context(c, mesh);
    const NodalField d = initial_design(c, *mesh);
    const RiskWeights w{0.0, 0.0, c.risk.beta_M};
    const RiskEvaluation ev = objective_J(d, w, c.reg_config(), ctx);

    TaylorMcReport rep;
    rep.n_vertices = mesh->num_vertices();
    rep.Q_bar = ev.Q_bar;
    rep.gradient_variance = ev.grad_bar.dot(ev.cov_grad);
    rep.eigenvalues = ev.eigenvalues;
    rep.mc = mc_estimate(d, c.mc.n_samples, mc_seed(c), ctx);
    for (int N : c.mc.N_sweep) {
        const Eigen::Index k = std::min<Eigen::Index>(N, ev.eigenvalues.size());
        TaylorRow row;
        row.N = N;
        row.E_quad = rep.Q_bar + 0.5 * ev.eigenvalues.head(k).sum();
        row.V_quad = rep.gradient_variance + 0.5 * ev.eigenvalues.head(k).squaredNorm();
        row.rel_err_mean = std::abs(row.E_quad - rep.mc.mean) / std::abs(rep.mc.mean);
        row.rel_err_var = std::abs(row.V_quad - rep.mc.variance) / rep.mc.variance;
        rep.rows.push_back(row);
    }
    return rep;
}

SpectrumReport run_spectrum(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.mesh.refinements < 1) throw ConfigError("mesh.refinements: spectrum needs at least 1", "mesh.refinements");
    SpectrumReport rep;
    auto mesh = build_mesh(cfg);
    for (int level = 0; level <= cfg.mesh.refinements; ++level) {
        if (level > 0) mesh = std::make_shared<const Mesh>(refine_uniform(*mesh));
        const RiskContext ctx = build_context(cfg, mesh);
        const NodalField d = initial_design(cfg, *mesh);
        const auto ws = AdjointWorkspace(*ctx.model, d, ctx.prior->mean());
        rep.n_vertices.push_back(mesh->num_vertices());
        rep.spectra.push_back(eigensolve_hc(ws, *ctx.prior, ctx.eigen).values);
    }
    return rep;
}

OptimizeReport run_optimize(const RunConfig& cfg, const std::function<void(const OptimizeReport&)>& on_run) {
    cfg.validate();
    if (cfg.reg.continuation && !(cfg.risk.beta_R > 0.0))
        throw ConfigError("risk.beta_R: continuation needs a positive regularization weight", "risk.beta_R");
    const auto mesh = build_mesh(cfg);
    const RiskContext ctx = build_context(cfg, mesh);
    const NodalField d0 = initial_design(cfg, *mesh);
    const OptimizeOptions opts = cfg.optimize_options();

    OptimizeReport rep;
    for (double bv : cfg.risk.beta_V) {
        OptimizeRun run;
        run.beta_V = bv;
        run.beta_V_effective = bv * cfg.risk.beta_V_scale;
        const RiskWeights w{run.beta_V_effective, cfg.risk.beta_R, cfg.risk.beta_M};
        RegConfig final_reg = cfg.reg_config();
        if (cfg.reg.continuation) {
            OptimizeResult last;
            const ContinuationResult cr = continuation_run(d0, cfg.reg.K_cont, [&](const NodalField& d, const RegConfig& stage) {
                StageOutcome so;
                so.result = optimize_stage(ctx, w, stage, d, opts);
                so.J = so.result.J;
                last = so.result;
                return so;
            });
            run.stages = cr.history;
            run.result = std::move(last);
            final_reg = cr.history.back().config;
        } else {
            run.result = optimize_stage(ctx, w, final_reg, d0, opts);
        }
        const RiskEvaluation ev = objective_J(run.result.d_opt, w, final_reg, ctx);
        run.J = ev.J_total;
        run.E_quad = ev.E_quad;
        run.V_quad = ev.V_quad;
        run.mc = mc_estimate(run.result.d_opt, cfg.mc.n_samples, mc_seed(cfg), ctx);
        if (run.result.status != OptimizeStatus::Converged) rep.all_converged = false;
        rep.runs.push_back(std::move(run));
        if (on_run) on_run(rep);
    }
    return rep;
}

int cmd_forward(const RunConfig& cfg, std::ostream& out) {
    const ForwardReport rep = run_forward(cfg);
    const auto mesh = build_mesh(cfg);
    write_config_echo(cfg);
    if (cfg.writes("vtk")) {
        const fs::path dir = cfg.output.directory;
        write_vtk_scalar(dir / "T_s.vtk", *mesh, "T_s", rep.state.T_s);
        write_vtk_scalar(dir / "T_f.vtk", *mesh, "T_f", rep.state.T_f);
        write_vtk_vector(dir / "u_s.vtk", *mesh, "u_s", rep.state.u_x, rep.state.u_y);
        write_vtk_scalar(dir / "p.vtk", *mesh, "p", rep.state.p);
        write_vtk_scalar(dir / "phi_f.vtk", *mesh, "phi_f", rep.phi);
    }
    out << std::setprecision(12);
    out << "vertices " << rep.n_vertices << "\n";
    out << "Q_T " << rep.qoi.Q_T << "\nQ_M " << rep.qoi.Q_M << "\nQ " << rep.qoi.Q << "\n";
    return kExitOk;
}

int cmd_taylor_vs_mc(const RunConfig& cfg, std::ostream& out) {
    const TaylorMcReport rep = run_taylor_vs_mc(cfg);
    write_config_echo(cfg);
    if (cfg.writes("csv")) {
        CsvWriter csv(fs::path(cfg.output.directory) / "taylor_convergence.csv",
                      {"N", "E_quad", "V_quad", "mc_mean", "mc_var", "mc_stderr", "rel_err_mean", "rel_err_var"});
        for (const auto& r : rep.rows) {
            csv.cell(r.N).cell(r.E_quad).cell(r.V_quad).cell(rep.mc.mean).cell(rep.mc.variance).cell(rep.mc.std_error);
            csv.cell(r.rel_err_mean).cell(r.rel_err_var).end_row();
        }
    }
    out << std::setprecision(10);
    out << "vertices " << rep.n_vertices << "\nn_samples " << rep.mc.n_samples << "\n";
    out << "mc_mean " << rep.mc.mean << " mc_var " << rep.mc.variance << " mc_stderr " << rep.mc.std_error << "\n";
    for (const auto& r : rep.rows)
        out << "N " << r.N << " E_quad " << r.E_quad << " V_quad " << r.V_quad << " rel_err_mean " << r.rel_err_mean
            << " rel_err_var " << r.rel_err_var << "\n";
    return kExitOk;
}

int cmd_spectrum(const RunConfig& cfg, std::ostream& out) {
    const SpectrumReport rep = run_spectrum(cfg);
    write_config_echo(cfg);
    if (cfg.writes("csv")) {
        std::vector<std::string> header{"n"};
        for (std::size_t nv : rep.n_vertices) header.push_back("lambda_nv" + std::to_string(nv));
        CsvWriter csv(fs::path(cfg.output.directory) / "spectrum.csv", header);
        Eigen::Index rows = 0;
        for (const auto& s : rep.spectra) rows = std::max(rows, s.size());
        for (Eigen::Index i = 0; i < rows; ++i) {
            csv.cell(static_cast<long long>(i + 1));
            for (const auto& s : rep.spectra) {
                if (i < s.size()) csv.cell(s[i]);
                else csv.cell(std::string());
            }
            csv.end_row();
        }
    }
    out << std::setprecision(6);
    out << "base mesh vertices " << rep.n_vertices.front() << "\n";
    for (std::size_t k = 0; k < rep.spectra.size(); ++k) {
        const Vector& s = rep.spectra[k];
        out << "mesh " << k << " vertices " << rep.n_vertices[k] << " lambda_1 " << s[0] << " |lambda_N/lambda_1| "
            << std::abs(s[s.size() - 1] / s[0]) << "\n";
    }
    return kExitOk;
}

int cmd_optimize(const RunConfig& cfg, std::ostream& out) {
    write_config_echo(cfg);
    const fs::path dir = cfg.output.directory;
    out << "beta_V:";
    for (double b : cfg.risk.beta_V) out << ' ' << b;
    out << " (scale " << cfg.risk.beta_V_scale << ")\n";
    const auto mesh = build_mesh(cfg);
    auto flush = [&](const OptimizeReport& rep) {
        const std::size_t k = rep.runs.size() - 1;
        const OptimizeRun& run = rep.runs.back();
        if (cfg.writes("csv")) {
            write_iteration_log(dir / ("iterations_" + std::to_string(k) + ".csv"), run.result);
            if (!run.stages.empty()) write_stage_log(dir / ("continuation_" + std::to_string(k) + ".csv"), run.stages);
            write_summary(dir / "summary.csv", rep);
        }
        if (cfg.writes("vtk")) write_vtk_scalar(dir / ("d_opt_" + std::to_string(k) + ".vtk"), *mesh, "d", run.result.d_opt);
        out << std::setprecision(10) << "beta_V " << run.beta_V << " status " << to_string(run.result.status)
            << " iterations " << run.result.iterations << " J " << run.J << " E_quad " << run.E_quad << " V_quad "
            << run.V_quad << " mc_mean " << run.mc.mean << " mc_var " << run.mc.variance << "\n";
    };
    const OptimizeReport rep = run_optimize(cfg, flush);
    return rep.all_converged ? kExitOk : kExitNotConverged;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Risk-averse design of porous insulation under uncertainty"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int workers = 0;
    bool verbose = false;
    std::string reference_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "YAML configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
        sub->add_option("--seed", seed, "root seed (overrides risk.seed)");
        sub->add_option("--workers", workers, "worker threads (overrides risk.workers)")->check(CLI::PositiveNumber);
        sub->add_flag("-v,--verbose", verbose, "log progress to stderr");
    };
    CLI::App* forward = app.add_subcommand("forward", "solve both systems at the configured design");
    CLI::App* taylor = app.add_subcommand("taylor-vs-mc", "compare Taylor moments with Monte Carlo");
    CLI::App* spectrum = app.add_subcommand("spectrum", "eigenvalue decay across mesh refinements");
    CLI::App* optimize = app.add_subcommand("optimize", "risk-averse optimization over a beta_V sweep");
    CLI::App* defaults = app.add_subcommand("defaults", "print the configuration reference");
    for (CLI::App* s : {forward, taylor, spectrum, optimize}) add_common(s);
    defaults->add_option("--out", reference_path, "write the reference to this file instead of stdout");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitConfig;
    }

    if (defaults->parsed()) {
        if (reference_path.empty()) {
            out << config_reference_markdown();
        } else {
            std::ofstream f(reference_path);
            f << config_reference_markdown();
            if (!f) {
                err << "error: cannot write " << reference_path << "\n";
                return kExitConfig;
            }
        }
        return kExitOk;
    }

    log::set_level(verbose ? log::Level::Info : log::Level::Warning);
    try {
        RunConfig cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.output.directory = out_dir;
        if (!app.get_subcommands().front()->get_option("--seed")->empty()) cfg.risk.seed = seed;
        if (workers > 0) cfg.risk.workers = workers;
        cfg.validate();
        if (forward->parsed()) return cmd_forward(cfg, out);
        if (taylor->parsed()) return cmd_taylor_vs_mc(cfg, out);
        if (spectrum->parsed()) return cmd_spectrum(cfg, out);
        return cmd_optimize(cfg, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ArgumentError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ContinuationError& e) {
        err << "optimizer error: " << e.what() << "\n";
        return kExitNotConverged;
    } catch (const OptimizerError& e) {
        err << "optimizer error: " << e.what() << "\n";
        return kExitNotConverged;
    } catch (const Error& e) {
        err << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}

}  // namespace pduu
