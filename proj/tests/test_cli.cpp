#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pduu/commands.hpp"

using namespace pduu;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pduu_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
    return p;
}

// CSV rows end in CRLF
std::string next_line(std::istream& in) {
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

const std::string kSmall =
    "mesh:\n  geometry: lshape\n  h: 0.25\n"
    "risk:\n  rank: 3\n  oversampling: 6\n  seed: 5\n"
    "mc:\n  n_samples: 16\n  N_sweep: [1, 3]\n";

}  // namespace

TEST_CASE("configuration errors exit with code 2 and name the key") {
    TempDir tmp("config");
    const fs::path cfg = write_file(tmp.path / "bad.yaml", "mesh:\n  geometry: lshape\n");
    const Run r = cli({"forward", "--config", cfg.string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("mesh.h") != std::string::npos);

    const fs::path unknown = write_file(tmp.path / "unknown.yaml", kSmall + "extra:\n  x: 1\n");
    const Run u = cli({"forward", "--config", unknown.string()});
    CHECK(u.code == kExitConfig);
    CHECK(u.err.find("extra") != std::string::npos);

    CHECK(cli({"forward"}).code == kExitConfig);
    CHECK(cli({"no-such-command"}).code == kExitConfig);
    CHECK(cli({"forward", "--config", (tmp.path / "missing.yaml").string()}).code == kExitConfig);
}

TEST_CASE("forward writes the five fields") {
    TempDir tmp("forward");
    const fs::path cfg = write_file(tmp.path / "c.yaml", kSmall);
    const fs::path out = tmp.path / "out";
    const Run r = cli({"forward", "--config", cfg.string(), "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    for (const char* f : {"T_s.vtk", "T_f.vtk", "u_s.vtk", "p.vtk", "phi_f.vtk"}) {
        CHECK(fs::exists(out / f));
        CHECK(read_file(out / f).rfind("# vtk DataFile", 0) == 0);
    }
    CHECK(r.out.find("Q_T ") != std::string::npos);
}

TEST_CASE("taylor-vs-mc writes the convergence table") {
    TempDir tmp("taylor");
    const fs::path cfg = write_file(tmp.path / "c.yaml", kSmall);
    const fs::path out = tmp.path / "out";
    REQUIRE(cli({"taylor-vs-mc", "--config", cfg.string(), "--out", out.string()}).code == kExitOk);
    std::istringstream csv(read_file(out / "taylor_convergence.csv"));
    std::string line = next_line(csv);
    CHECK(line == "N,E_quad,V_quad,mc_mean,mc_var,mc_stderr,rel_err_mean,rel_err_var");
    int rows = 0;
    while (!(line = next_line(csv)).empty()) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("spectrum compares two meshes") {
    TempDir tmp("spectrum");
    const fs::path cfg = write_file(tmp.path / "c.yaml", kSmall);
    const fs::path out = tmp.path / "out";
    REQUIRE(cli({"spectrum", "--config", cfg.string(), "--out", out.string()}).code == kExitOk);
    std::istringstream csv(read_file(out / "spectrum.csv"));
    const std::string line = next_line(csv);
    CHECK(line.rfind("n,lambda_nv", 0) == 0);
    CHECK(std::count(line.begin(), line.end(), ',') == 2);
}

TEST_CASE("optimize is reproducible and independent of the worker count") {
    TempDir tmp("optimize");
    const std::string text =
        "mesh:\n  geometry: lshape\n  h: 0.25\n"
        "risk:\n  beta_V: [0, 1]\n  beta_V_scale: 1.0e-3\n  rank: 3\n  oversampling: 6\n  seed: 5\n"
        "optimizer:\n  max_iters: 15\n"
        "mc:\n  n_samples: 8\n";
    const fs::path c = write_file(tmp.path / "opt.yaml", text);
    const Run a = cli({"optimize", "--config", c.string(), "--out", (tmp.path / "a").string()});
    const Run b = cli({"optimize", "--config", c.string(), "--out", (tmp.path / "b").string(), "--workers", "2"});
    CHECK((a.code == kExitOk || a.code == kExitNotConverged));
    CHECK(a.code == b.code);
    const std::string sa = read_file(tmp.path / "a" / "summary.csv");
    CHECK(!sa.empty());
    CHECK(sa == read_file(tmp.path / "b" / "summary.csv"));
    CHECK(read_file(tmp.path / "a" / "iterations_1.csv") == read_file(tmp.path / "b" / "iterations_1.csv"));
    CHECK(fs::exists(tmp.path / "a" / "d_opt_0.vtk"));

    const Run s = cli({"optimize", "--config", c.string(), "--out", (tmp.path / "s").string(), "--seed", "6"});
    CHECK(read_file(tmp.path / "s" / "summary.csv") != sa);
}

TEST_CASE("defaults prints the reference") {
    const Run r = cli({"defaults"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("## `mesh`") != std::string::npos);
}
