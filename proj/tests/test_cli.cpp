// Runs the pcarecon executable end to end.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "pcarecon/diagnostics.hpp"
#include "pcarecon/io.hpp"
#include "pcarecon/reconcile.hpp"

namespace fs = std::filesystem;
using namespace pcarecon;

namespace {

const fs::path kCli = PCARECON_CLI;
const fs::path kPresets = PCARECON_PRESETS;

struct TempDir {
    TempDir() {
        path = fs::temp_directory_path() / ("pcarecon_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
    fs::path path;
    static inline int counter = 0;
};

struct Run {
    int code = -1;
    std::string out;
};

// Runs the CLI with stdout captured to a file; stderr is discarded.
Run run(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / ".stdout";
    const std::string cmd = "'" + kCli.string() + "' " + args + " > '" + out.string() + "' 2>/dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    fs::remove(out);
    return r;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_text(e.path());
    return files;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const char* kSpec = R"({"spec_version": 1, "variables": ["F1","F2","F3","F4","F5","F6"],
  "constraints": [[1,1,-1,0,0,0],[0,0,1,-1,0,0],[0,0,0,1,-1,-1],[0,-1,0,0,0,1]],
  "independent": ["F1","F2"], "base_values": {"F1": 10, "F2": 10},
  "fluctuation_sd": {"F1": 1, "F2": 2},
  "error_sd": {"F1": 0.1, "F2": 0.08, "F3": 0.15, "F4": 0.2, "F5": 0.18, "F6": 0.1},
  "samples": 500, "seed": 7})";

}  // namespace

TEST_CASE("every preset runs and reruns byte-identically") {
    for (int i = 1; i <= 7; ++i) {
        const fs::path preset = kPresets / ("example" + std::to_string(i) + ".json");
        CAPTURE(preset);
        TempDir a, b;
        const Run ra = run("preset " + q(preset) + " --outdir " + q(a.path), a.path);
        const Run rb = run("preset " + q(preset) + " --outdir " + q(b.path), b.path);
        CHECK(ra.code == 0);
        CHECK(rb.code == 0);
        CHECK(ra.out == rb.out);
        CHECK(snapshot(a.path) == snapshot(b.path));
        CHECK(fs::exists(a / "report.txt"));
    }
}

TEST_CASE("simulate then reconcile matches the library exactly") {
    TempDir dir;
    write_text(dir / "spec.json", kSpec);
    REQUIRE(run("simulate --spec " + q(dir / "spec.json") + " --out " + q(dir / "y.csv") + " --truth " +
                    q(dir / "x.csv"),
                dir.path)
                .code == 0);
    const SimulationSpec spec = io::read_spec(dir / "spec.json");
    io::write_model(dir / "model.csv", spec.model);
    write_text(dir / "noise.csv", "variable,sd\nF1,0.1\nF2,0.08\nF3,0.15\nF4,0.2\nF5,0.18\nF6,0.1\n");
    const Run r = run("reconcile --data " + q(dir / "y.csv") + " --model " + q(dir / "model.csv") + " --noise " +
                          q(dir / "noise.csv") + " --truth " + q(dir / "x.csv") + " --out " + q(dir / "xhat.csv"),
                      dir.path);
    REQUIRE(r.code == 0);

    const DataSet lib = simulate(spec);
    const fs::path truth = dir / "x.csv";
    const DataSet disk = io::read_data(dir / "y.csv", &truth);
    CHECK(disk.measurements() == lib.measurements());
    CHECK(*disk.truth() == *lib.truth());
    const Matrix expected = reconcile_full(spec.model, io::read_noise(dir / "noise.csv", spec.model.variable_names()), lib);
    const DataSet recon = io::read_data(dir / "xhat.csv");
    CHECK(recon.measurements() == expected);
    const Vector rmse = rmse_report(expected, *lib.truth());
    CHECK(r.out.find(io::format_short(rmse(3))) != std::string::npos);
}

TEST_CASE("a preset file is accepted as a simulation spec") {
    TempDir dir;
    CHECK(run("simulate --spec " + q(kPresets / "example1.json") + " --out " + q(dir / "y.csv") + " --truth " +
                  q(dir / "x.csv"),
              dir.path)
              .code == 0);
    CHECK(io::read_data(dir / "y.csv").samples() == 1000);
}

TEST_CASE("validation failures exit with 2 and write nothing") {
    TempDir dir;
    std::string bad = kSpec;
    bad.replace(bad.find("\"F1\": 0.1"), 9, "\"F1\": -0.1");
    write_text(dir / "neg.json", bad);
    const Run r = run("simulate --spec " + q(dir / "neg.json") + " --out " + q(dir / "y.csv") + " --truth " +
                          q(dir / "x.csv"),
                      dir.path);
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(dir / "y.csv"));
    CHECK_FALSE(fs::exists(dir / "x.csv"));

    write_text(dir / "spec.json", kSpec);
    REQUIRE(run("simulate --spec " + q(dir / "spec.json") + " --out " + q(dir / "y.csv") + " --truth " +
                    q(dir / "x.csv"),
                dir.path)
                .code == 0);
    write_text(dir / "empty_model.csv", "F1,F2,F3,F4,F5,F6\n");
    write_text(dir / "noise.csv", "variable,sd\nF1,0.1\nF2,0.08\nF3,0.15\nF4,0.2\nF5,0.18\nF6,0.1\n");
    CHECK(run("reconcile --data " + q(dir / "y.csv") + " --model " + q(dir / "empty_model.csv") + " --noise " +
                  q(dir / "noise.csv") + " --out " + q(dir / "o.csv"),
              dir.path)
              .code == 2);
    CHECK_FALSE(fs::exists(dir / "o.csv"));

    CHECK(run("identify --data " + q(dir / "y.csv") + " --mode ipca --order 2 --out-model " + q(dir / "m.csv") +
                  " --out-recon " + q(dir / "r.csv"),
              dir.path)
              .code == 2);
    CHECK(run("identify --data " + q(dir / "y.csv") + " --mode pca --noise " + q(dir / "noise.csv") +
                  " --order 6 --out-model " + q(dir / "m.csv") + " --out-recon " + q(dir / "r.csv"),
              dir.path)
              .code == 2);
    CHECK(run("reconcile --bogus", dir.path).code == 2);
    CHECK(run("", dir.path).code == 2);
    CHECK(run("--help", dir.path).code == 0);
    CHECK_FALSE(fs::exists(dir / "m.csv"));
}

TEST_CASE("numerical failure exits with 3") {
    TempDir dir;
    write_text(dir / "spec.json", kSpec);
    REQUIRE(run("simulate --spec " + q(dir / "spec.json") + " --out " + q(dir / "y.csv") + " --truth " +
                    q(dir / "x.csv"),
                dir.path)
                .code == 0);
    // Noise-free data: the covariance likelihood has no minimum.
    CHECK(run("identify --data " + q(dir / "x.csv") + " --mode ipca --order 4 --out-model " + q(dir / "m.csv") +
                  " --out-recon " + q(dir / "r.csv"),
              dir.path)
              .code == 3);
    CHECK_FALSE(fs::exists(dir / "m.csv"));
}

TEST_CASE("non-convergence exits with 4 and still writes outputs") {
    TempDir dir;
    write_text(dir / "spec.json", kSpec);
    REQUIRE(run("simulate --spec " + q(dir / "spec.json") + " --out " + q(dir / "y.csv") + " --truth " +
                    q(dir / "x.csv"),
                dir.path)
                .code == 0);
    const Run r = run("identify --data " + q(dir / "y.csv") + " --mode ipca --order 5 --max-iterations 2 --restarts 1" +
                          " --out-model " + q(dir / "m.csv") + " --out-recon " + q(dir / "r.csv") + " --out-noise " +
                          q(dir / "n.csv"),
                      dir.path);
    CHECK(r.code == 4);
    CHECK(r.out.find("converged: no") != std::string::npos);
    CHECK(fs::exists(dir / "m.csv"));
    CHECK(fs::exists(dir / "r.csv"));
    CHECK(fs::exists(dir / "n.csv"));
}

TEST_CASE("classify and compare") {
    TempDir dir;
    const SimulationSpec spec = io::read_spec(kPresets / "example1.json");
    io::write_model(dir / "model.csv", spec.model);
    const Run c = run("classify --model " + q(dir / "model.csv") + " --measured F1,F2,F5", dir.path);
    CHECK(c.code == 0);
    CHECK(c.out.find("non-redundant") != std::string::npos);
    CHECK(c.out.find("graph cross-check: agrees") != std::string::npos);

    const Run cmp = run("compare --estimated " + q(dir / "model.csv") + " --truth-model " + q(dir / "model.csv") +
                            " --dependent F3,F4,F5,F6",
                        dir.path);
    CHECK(cmp.code == 0);
    const auto at = cmp.out.find("alpha: ");
    REQUIRE(at != std::string::npos);
    CHECK(std::abs(std::stod(cmp.out.substr(at + 7))) <= 1e-12);
    CHECK(cmp.out.find("max abs difference: 0") != std::string::npos);
}

TEST_CASE("scan reports the estimated order") {
    TempDir dir;
    REQUIRE(run("simulate --spec " + q(kPresets / "example7.json") + " --out " + q(dir / "y.csv") + " --truth " +
                    q(dir / "x.csv"),
                dir.path)
                .code == 0);
    const Run r = run("scan --data " + q(dir / "y.csv") + " --m-min 3 --m-max 5 --restarts 8", dir.path);
    CHECK(r.code == 0);
    CHECK(r.out.find("estimated order: 4") != std::string::npos);
    CHECK(r.out.find("INCONSISTENT") != std::string::npos);
}
