#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pduu/eigensolver.hpp"
#include "pduu/forward.hpp"
#include "pduu/optimizer.hpp"
#include "pduu/regularization.hpp"
#include "pduu/risk.hpp"

namespace pduu {

struct MeshSection {
    std::string geometry;  // "lshape" or "square"; required
    double h = 0.0;        // target edge length; required
    int refinements = 1;   // extra uniform refinements for the spectrum study
    bool operator==(const MeshSection&) const = default;
};

struct ModelSection {
    double kappa_s = 2.0;
    double kappa_f = 0.06;
    double h_exchange = 10.0;
    double C_compress = 1e-6;
    double mu = 1e6;
    double K_bulk = 2e6;
    bool operator==(const ModelSection&) const = default;
};

struct BcSection {
    double T_hot = 300.0;
    double T_cold = 270.0;
    double conv_coeff = 15.0;
    std::array<double, 2> traction{0.0, -1e3};
    bool operator==(const BcSection&) const = default;
};

struct PriorSection {
    double gamma = 4.0;
    double delta = 40.0;
    std::array<double, 4> theta{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
    double mean = 0.0;                                // constant prior mean
    bool operator==(const PriorSection&) const = default;
};

struct RiskSection {
    double beta_M = 1.0;
    std::vector<double> beta_V{0.0};
    /// Effective variance weight is beta_V * beta_V_scale.
    double beta_V_scale = 1.0;
    double beta_R = 0.0;
    int rank = 25;
    int oversampling = 10;
    int power_iterations = 0;
    std::uint64_t seed = 1;
    int workers = 1;
    bool operator==(const RiskSection&) const = default;
};

struct RegSection {
    double beta_tik = 1.0;
    double beta_l0 = 0.0;
    double eps0 = 0.5;
    int K_cont = 3;
    bool continuation = false;
    bool operator==(const RegSection&) const = default;
};

struct OptimizerSection {
    int max_iters = 200;
    int memory = 10;
    double grad_tol = 1e-6;
    double step_tol = 1e-12;
    bool operator==(const OptimizerSection&) const = default;
};

struct DesignSection {
    double initial = 0.5;  // constant design for forward runs and optimizer start
    bool operator==(const DesignSection&) const = default;
};

struct McSection {
    std::uint64_t n_samples = 10240;
    std::vector<int> N_sweep{1, 5, 10, 25};
    bool operator==(const McSection&) const = default;
};

struct OutputSection {
    std::string directory = "out";
    std::vector<std::string> formats{"vtk", "csv"};
    bool operator==(const OutputSection&) const = default;
};

struct RunConfig {
    MeshSection mesh;
    ModelSection model;
    BcSection bc;
    PriorSection prior;
    RiskSection risk;
    RegSection reg;
    OptimizerSection optimizer;
    DesignSection design;
    McSection mc;
    OutputSection output;

    bool operator==(const RunConfig&) const = default;

    /// Re-checks every cross-field constraint; throws ConfigError naming the key.
    void validate() const;

    ModelParams model_params() const;
    Tensor2 theta() const;
    RegConfig reg_config() const;
    OptimizeOptions optimize_options() const;
    RandomizedEigenOptions eigen_options() const;
    bool writes(const std::string& format) const;
};

/// Parses YAML text. Unknown keys and missing required keys raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& cfg);

/// Markdown table of every key with its type, default and meaning.
std::string config_reference_markdown();

}  // namespace pduu
