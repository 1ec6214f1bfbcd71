#include "pduu/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "pduu/errors.hpp"

namespace pduu {
namespace {

template <class T>
struct TypeName;
template <>
struct TypeName<double> {
    static constexpr const char* value = "real";
};
template <>
struct TypeName<int> {
    static constexpr const char* value = "integer";
};
template <>
struct TypeName<std::uint64_t> {
    static constexpr const char* value = "unsigned 64-bit integer";
};
template <>
struct TypeName<bool> {
    static constexpr const char* value = "bool";
};
template <>
struct TypeName<std::string> {
    static constexpr const char* value = "string";
};
template <>
struct TypeName<std::vector<double>> {
    static constexpr const char* value = "list of reals";
};
template <>
struct TypeName<std::vector<int>> {
    static constexpr const char* value = "list of integers";
};
template <>
struct TypeName<std::vector<std::string>> {
    static constexpr const char* value = "list of strings";
};
template <>
struct TypeName<std::array<double, 2>> {
    static constexpr const char* value = "2 reals";
};
template <>
struct TypeName<std::array<double, 4>> {
    static constexpr const char* value = "4 reals (row-major 2x2)";
};

template <class T>
T read_value(const YAML::Node& node) {
    return node.as<T>();
}

template <>
std::array<double, 2> read_value(const YAML::Node& node) {
    const auto v = node.as<std::vector<double>>();
    if (v.size() != 2) throw YAML::Exception(node.Mark(), "expected 2 values");
    return {v[0], v[1]};
}

template <>
std::array<double, 4> read_value(const YAML::Node& node) {
    std::vector<double> flat;
    if (node.IsSequence() && node.size() == 2 && node[0].IsSequence()) {
        for (const auto& row : node)
            for (const auto& x : row) flat.push_back(x.as<double>());
    } else {
        flat = node.as<std::vector<double>>();
    }
    if (flat.size() != 4) throw YAML::Exception(node.Mark(), "expected a 2x2 matrix");
    return {flat[0], flat[1], flat[2], flat[3]};
}

// Shortest text that parses back to the same double.
std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
void emit_value(YAML::Emitter& out, const T& v) {
    out << v;
}

template <>
void emit_value(YAML::Emitter& out, const double& v) {
    out << shortest(v);
}

template <>
void emit_value(YAML::Emitter& out, const std::uint64_t& v) {
    out << static_cast<unsigned long long>(v);
}

template <class T>
void emit_flow_list(YAML::Emitter& out, const T& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& x : v) emit_value(out, x);
    out << YAML::EndSeq;
}

template <>
void emit_value(YAML::Emitter& out, const std::vector<double>& v) { emit_flow_list(out, v); }
template <>
void emit_value(YAML::Emitter& out, const std::vector<int>& v) { emit_flow_list(out, v); }
template <>
void emit_value(YAML::Emitter& out, const std::vector<std::string>& v) { emit_flow_list(out, v); }
template <>
void emit_value(YAML::Emitter& out, const std::array<double, 2>& v) { emit_flow_list(out, v); }
template <>
void emit_value(YAML::Emitter& out, const std::array<double, 4>& v) {
    out << YAML::Flow << YAML::BeginSeq;
    out << YAML::Flow << YAML::BeginSeq << shortest(v[0]) << shortest(v[1]) << YAML::EndSeq;
    out << YAML::Flow << YAML::BeginSeq << shortest(v[2]) << shortest(v[3]) << YAML::EndSeq;
    out << YAML::EndSeq;
}

struct Field {
    std::string section;
    std::string key;
    std::string type;
    std::string doc;
    bool required = false;
    std::function<void(RunConfig&, const YAML::Node&)> read;
    std::function<void(const RunConfig&, YAML::Emitter&)> write;

    std::string path() const { return section + "." + key; }
};

template <class S, class T>
Field field(const char* section, const char* key, S RunConfig::*sec, T S::*member, const char* doc,
            bool required = false) {
    Field f;
    f.section = section;
    f.key = key;
    f.type = TypeName<T>::value;
    f.doc = doc;
    f.required = required;
    f.read = [sec, member](RunConfig& cfg, const YAML::Node& node) { (cfg.*sec).*member = read_value<T>(node); };
    f.write = [sec, member](const RunConfig& cfg, YAML::Emitter& out) { emit_value(out, (cfg.*sec).*member); };
    return f;
}

const std::vector<Field>& registry() {
    static const std::vector<Field> fields = {
        field("mesh", "geometry", &RunConfig::mesh, &MeshSection::geometry, "`lshape` or `square`", true),
        field("mesh", "h", &RunConfig::mesh, &MeshSection::h, "target edge length, 0 < h < 1", true),
        field("mesh", "refinements", &RunConfig::mesh, &MeshSection::refinements,
              "uniform refinements compared by `spectrum`"),

        field("model", "kappa_s", &RunConfig::model, &ModelSection::kappa_s, "solid conductivity [W/(m K)]"),
        field("model", "kappa_f", &RunConfig::model, &ModelSection::kappa_f, "fluid conductivity [W/(m K)]"),
        field("model", "h_exchange", &RunConfig::model, &ModelSection::h_exchange,
              "interphase exchange coefficient [W/(m^3 K)]"),
        field("model", "C_compress", &RunConfig::model, &ModelSection::C_compress, "pressure compliance [1/Pa]"),
        field("model", "mu", &RunConfig::model, &ModelSection::mu, "shear modulus [Pa]"),
        field("model", "K_bulk", &RunConfig::model, &ModelSection::K_bulk,
              "bulk modulus [Pa]; lambda = K_bulk - mu"),

        field("bc", "T_hot", &RunConfig::bc, &BcSection::T_hot, "ambient temperature on the outer boundary [K]"),
        field("bc", "T_cold", &RunConfig::bc, &BcSection::T_cold, "ambient temperature on the inner boundary [K]"),
        field("bc", "conv_coeff", &RunConfig::bc, &BcSection::conv_coeff, "convection coefficient [W/(m^2 K)]"),
        field("bc", "traction", &RunConfig::bc, &BcSection::traction, "traction on the outer boundary [Pa]"),

        field("prior", "gamma", &RunConfig::prior, &PriorSection::gamma, "Matern stiffness weight"),
        field("prior", "delta", &RunConfig::prior, &PriorSection::delta, "Matern mass weight"),
        field("prior", "theta", &RunConfig::prior, &PriorSection::theta, "anisotropy tensor (SPD)"),
        field("prior", "mean", &RunConfig::prior, &PriorSection::mean, "constant prior mean of m"),

        field("risk", "beta_M", &RunConfig::risk, &RiskSection::beta_M, "weight of Q_M in Q = beta_M Q_M - Q_T"),
        field("risk", "beta_V", &RunConfig::risk, &RiskSection::beta_V, "variance weights swept by `optimize`"),
        field("risk", "beta_V_scale", &RunConfig::risk, &RiskSection::beta_V_scale,
              "multiplier applied to every beta_V before use"),
        field("risk", "beta_R", &RunConfig::risk, &RiskSection::beta_R, "regularization weight"),
        field("risk", "rank", &RunConfig::risk, &RiskSection::rank, "retained eigenpairs N"),
        field("risk", "oversampling", &RunConfig::risk, &RiskSection::oversampling,
              "extra random probes p (at least 5)"),
        field("risk", "power_iterations", &RunConfig::risk, &RiskSection::power_iterations,
              "power iterations in the randomized eigensolver"),
        field("risk", "seed", &RunConfig::risk, &RiskSection::seed, "root seed for every random stream"),
        field("risk", "workers", &RunConfig::risk, &RiskSection::workers,
              "threads for Monte Carlo and operator blocks"),

        field("reg", "beta_tik", &RunConfig::reg, &RegSection::beta_tik, "Tikhonov weight"),
        field("reg", "beta_l0", &RunConfig::reg, &RegSection::beta_l0, "approximate l0 weight"),
        field("reg", "eps0", &RunConfig::reg, &RegSection::eps0, "l0 smoothing width, 0 < eps0 <= 0.5"),
        field("reg", "K_cont", &RunConfig::reg, &RegSection::K_cont, "number of l0 continuation stages"),
        field("reg", "continuation", &RunConfig::reg, &RegSection::continuation,
              "run the Tikhonov + l0 continuation in `optimize`"),

        field("optimizer", "max_iters", &RunConfig::optimizer, &OptimizerSection::max_iters,
              "iteration cap per optimization"),
        field("optimizer", "memory", &RunConfig::optimizer, &OptimizerSection::memory, "L-BFGS history length"),
        field("optimizer", "grad_tol", &RunConfig::optimizer, &OptimizerSection::grad_tol,
              "stop when the projected gradient (max norm) <= grad_tol (1 + abs(J))"),
        field("optimizer", "step_tol", &RunConfig::optimizer, &OptimizerSection::step_tol,
              "stop when an accepted step is below this (max norm)"),

        field("design", "initial", &RunConfig::design, &DesignSection::initial,
              "constant design used by `forward` and as optimizer start"),

        field("mc", "n_samples", &RunConfig::mc, &McSection::n_samples, "Monte Carlo sample count"),
        field("mc", "N_sweep", &RunConfig::mc, &McSection::N_sweep, "ranks compared by `taylor-vs-mc`"),

        field("output", "directory", &RunConfig::output, &OutputSection::directory, "output directory"),
        field("output", "formats", &RunConfig::output, &OutputSection::formats, "subset of `vtk`, `csv`"),
    };
    return fields;
}

std::vector<std::string> section_order() {
    std::vector<std::string> out;
    for (const Field& f : registry())
        if (out.empty() || out.back() != f.section) out.push_back(f.section);
    return out;
}

std::string format_default(const Field& f) {
    RunConfig cfg;
    YAML::Emitter out;
    f.write(cfg, out);
    std::string s = out.c_str();
    return s.empty() ? "(required)" : s;
}

void require(bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(key + ": " + msg, key);
}

}  // namespace

void RunConfig::validate() const {
    require(mesh.geometry == "lshape" || mesh.geometry == "square", "mesh.geometry",
            "must be `lshape` or `square`, got `" + mesh.geometry + "`");
    require(mesh.h > 0.0 && mesh.h < 1.0, "mesh.h", "must lie in (0, 1)");
    require(mesh.refinements >= 0, "mesh.refinements", "must be nonnegative");

    try {
        model_params().validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("model: ") + e.what(), "model");
    }
    require(prior.gamma > 0.0, "prior.gamma", "must be positive");
    require(prior.delta > 0.0, "prior.delta", "must be positive");
    const Tensor2 th = theta();
    require(th(0, 1) == th(1, 0) && th(0, 0) > 0.0 && th.determinant() > 0.0, "prior.theta",
            "must be symmetric positive-definite");
    require(std::isfinite(prior.mean), "prior.mean", "must be finite");

    require(std::isfinite(risk.beta_M), "risk.beta_M", "must be finite");
    require(!risk.beta_V.empty(), "risk.beta_V", "must list at least one weight");
    for (double b : risk.beta_V) require(b >= 0.0, "risk.beta_V", "weights must be nonnegative");
    require(risk.beta_V_scale > 0.0, "risk.beta_V_scale", "must be positive");
    require(risk.beta_R >= 0.0, "risk.beta_R", "must be nonnegative");
    require(risk.rank >= 1, "risk.rank", "must be at least 1");
    require(risk.oversampling >= 5, "risk.oversampling", "must be at least 5");
    require(risk.power_iterations >= 0, "risk.power_iterations", "must be nonnegative");
    require(risk.workers >= 1, "risk.workers", "must be at least 1");

    try {
        reg_config().validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("reg: ") + e.what(), "reg");
    }
    try {
        optimize_options().validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("optimizer: ") + e.what(), "optimizer");
    }
    require(design.initial >= 0.0 && design.initial <= 1.0, "design.initial", "must lie in [0, 1]");
    require(mc.n_samples >= 2, "mc.n_samples", "must be at least 2");
    require(!mc.N_sweep.empty(), "mc.N_sweep", "must list at least one rank");
    for (std::size_t i = 0; i < mc.N_sweep.size(); ++i) {
        require(mc.N_sweep[i] >= 1, "mc.N_sweep", "ranks must be at least 1");
        if (i > 0) require(mc.N_sweep[i] > mc.N_sweep[i - 1], "mc.N_sweep", "ranks must be increasing");
    }
    for (const auto& f : output.formats)
        require(f == "vtk" || f == "csv", "output.formats", "unknown format `" + f + "`");
    require(!output.directory.empty(), "output.directory", "must not be empty");
}

ModelParams RunConfig::model_params() const {
    ModelParams p;
    p.kappa_s = model.kappa_s;
    p.kappa_f = model.kappa_f;
    p.h_exchange = model.h_exchange;
    p.C_compress = model.C_compress;
    p.mu = model.mu;
    p.K_bulk = model.K_bulk;
    p.beta_M = risk.beta_M;
    p.bc.T_hot = bc.T_hot;
    p.bc.T_cold = bc.T_cold;
    p.bc.conv_coeff = bc.conv_coeff;
    p.bc.traction = Eigen::Vector2d(bc.traction[0], bc.traction[1]);
    return p;
}

Tensor2 RunConfig::theta() const {
    Tensor2 t;
    t << prior.theta[0], prior.theta[1], prior.theta[2], prior.theta[3];
    return t;
}

RegConfig RunConfig::reg_config() const { return {reg.beta_tik, reg.beta_l0, reg.eps0, reg.K_cont}; }

OptimizeOptions RunConfig::optimize_options() const {
    OptimizeOptions o;
    o.max_iters = optimizer.max_iters;
    o.memory = optimizer.memory;
    o.grad_tol = optimizer.grad_tol;
    o.step_tol = optimizer.step_tol;
    return o;
}

RandomizedEigenOptions RunConfig::eigen_options() const {
    RandomizedEigenOptions e;
    e.rank = risk.rank;
    e.oversampling = risk.oversampling;
    e.power_iterations = risk.power_iterations;
    e.seed = mix_seed(risk.seed, 1);
    e.workers = risk.workers;
    return e;
}

bool RunConfig::writes(const std::string& format) const {
    for (const auto& f : output.formats)
        if (f == format) return true;
    return false;
}

RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what(), "");
    }
    if (!root.IsMap()) throw ConfigError("configuration must be a mapping of sections", "");

    const std::vector<std::string> sections = section_order();
    for (const auto& kv : root) {
        const std::string name = kv.first.as<std::string>();
        if (std::find(sections.begin(), sections.end(), name) == sections.end())
            throw ConfigError("unknown configuration section `" + name + "`", name);
        if (!kv.second.IsMap()) throw ConfigError("section `" + name + "` must be a mapping", name);
        for (const auto& entry : kv.second) {
            const std::string key = entry.first.as<std::string>();
            bool known = false;
            for (const Field& f : registry()) known = known || (f.section == name && f.key == key);
            if (!known) throw ConfigError("unknown configuration key `" + name + "." + key + "`", name + "." + key);
        }
    }

    RunConfig cfg;
    for (const Field& f : registry()) {
        const YAML::Node sec = root[f.section];
        const YAML::Node node = sec ? sec[f.key] : YAML::Node();
        if (!node || node.IsNull()) {
            if (f.required) throw ConfigError("missing required configuration key `" + f.path() + "`", f.path());
            continue;
        }
        try {
            f.read(cfg, node);
        } catch (const YAML::Exception&) {
            throw ConfigError("configuration key `" + f.path() + "` expects " + f.type, f.path());
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration file `" + path + "`", "");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    for (const std::string& sec : section_order()) {
        out << YAML::Key << sec << YAML::Value << YAML::BeginMap;
        for (const Field& f : registry()) {
            if (f.section != sec) continue;
            out << YAML::Key << f.key << YAML::Value;
            f.write(cfg, out);
        }
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string config_reference_markdown() {
    std::ostringstream os;
    os << "# Configuration reference\n\n"
       << "Generated by `porous-duu defaults`. Every run reads one YAML file with the sections below.\n"
       << "Unknown sections or keys are rejected. Keys marked *(required)* have no default.\n";
    for (const std::string& sec : section_order()) {
        os << "\n## `" << sec << "`\n\n| key | type | default | meaning |\n|---|---|---|---|\n";
        for (const Field& f : registry()) {
            if (f.section != sec) continue;
            os << "| `" << f.key << "` | " << f.type << " | " << (f.required ? "*(required)*" : "`" + format_default(f) + "`")
               << " | " << f.doc << " |\n";
        }
    }
    return os.str();
}

}  // namespace pduu
