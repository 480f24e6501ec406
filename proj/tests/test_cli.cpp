#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "mlab/harness.hpp"

namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

/// Path of the command-line binary under test.  ctest exports MLAB_BIN; for
/// manual runs fall back to the conventional build layout.
fs::path cli_binary() {
    if (const char* env = std::getenv("MLAB_BIN")) return fs::absolute(env);
    for (const char* guess : {"./mlab", "build/mlab", "../mlab"}) {
        if (fs::exists(guess)) return fs::absolute(guess);
    }
    FAIL("MLAB_BIN is not set and no mlab binary was found nearby");
    return {};
}

/// Directory holding the shipped scenario files (MLAB_SCENARIO_DIR in ctest).
fs::path shipped_scenario_dir() {
    if (const char* env = std::getenv("MLAB_SCENARIO_DIR")) return fs::path(env);
    for (const char* guess : {"scenarios", "../scenarios"}) {
        if (fs::is_directory(guess)) return fs::absolute(guess);
    }
    FAIL("MLAB_SCENARIO_DIR is not set and no scenarios/ directory was found");
    return {};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("mlab_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;

    bool out_has(const std::string& needle) const {
        return out.find(needle) != std::string::npos;
    }
    bool err_has(const std::string& needle) const {
        return err.find(needle) != std::string::npos;
    }
};

/// Run the binary with `args` appended, capturing exit code and both streams.
/// `workdir` (when given) becomes the process working directory, which is how
/// the default artifact location is exercised.
CliResult run_cli(const std::string& args, const fs::path& workdir = {}) {
    static int call = 0;
    const fs::path io = temp_dir("io_" + std::to_string(call++));
    const fs::path out_file = io / "out.txt";
    const fs::path err_file = io / "err.txt";

    std::string cmd;
    if (!workdir.empty()) cmd += "cd '" + workdir.string() + "' && ";
    cmd += "'" + cli_binary().string() + "' " + args;
    cmd += " >'" + out_file.string() + "' 2>'" + err_file.string() + "'";

    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = (raw >= 0 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

/// A scenario small enough that every invocation finishes in milliseconds.
const char* kTinyScenario = R"(schema = 1
seed = 9

[grid]
geometry = "interval"
length = 1.0
cells = 24

[gamma]
family = "power"
k = 1.0

[initial]
kind = "gaussian"
mass = 2.0
width = 0.2

[stepper]
dt = 0.02
t_end = 0.1
sample_every = 2
)";

/// Valid configuration whose time step is far too large for the nonlinearity:
/// the implicit solve genuinely fails at runtime rather than at validation.
const char* kStiffScenario = R"(schema = 1
seed = 3

[grid]
geometry = "interval"
length = 2.0
cells = 64

[gamma]
family = "power"
k = 6.0

[initial]
kind = "gaussian"
mass = 0.001
width = 0.05

[stepper]
dt = 5.0
t_end = 10.0
sample_every = 1
)";

fs::path write_config(const fs::path& dir, const char* text,
                      const std::string& name = "scenario.toml") {
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
}

size_t count_occurrences(const std::string& hay, const std::string& needle) {
    size_t n = 0;
    for (size_t pos = hay.find(needle); pos != std::string::npos;
         pos = hay.find(needle, pos + needle.size()))
        ++n;
    return n;
}

}  // namespace

TEST_CASE("version and help exit cleanly") {
    const CliResult version = run_cli("--version");
    CHECK(version.exit_code == 0);
    CHECK(version.out_has("0.1.0"));

    const CliResult help = run_cli("--help");
    CHECK(help.exit_code == 0);
    CHECK(help.out_has("run"));
    CHECK(help.out_has("moser"));
}

TEST_CASE("a missing subcommand or unknown option is a usage error") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("--bogus-flag").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("run writes artifacts and prints the report summary") {
    const fs::path dir = temp_dir("run");
    const fs::path cfg = write_config(dir, kTinyScenario);
    const fs::path out_a = dir / "a";

    const CliResult r = run_cli("run --config '" + cfg.string() + "' --out '" +
                                out_a.string() + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out_has("PASS  mass_conservation"));
    CHECK(r.out_has("PASS  positivity"));
    CHECK(r.out_has("halt = completed"));
    CHECK(r.out_has("artifacts in"));

    for (const char* name :
         {"manifest.txt", "trajectory.csv", "report.txt", "state.checkpoint"}) {
        CHECK_MESSAGE(fs::exists(out_a / name), "missing artifact " << name);
    }

    // --quiet silences stdout; a second run of the same scenario must produce
    // byte-identical trajectories.
    const fs::path out_b = dir / "b";
    const CliResult q = run_cli("run --config '" + cfg.string() + "' --out '" +
                                out_b.string() + "' --quiet");
    CHECK(q.exit_code == 0);
    CHECK(q.out.empty());
    CHECK(slurp(out_a / "trajectory.csv") == slurp(out_b / "trajectory.csv"));
}

TEST_CASE("without --out the artifacts land under out/<config stem>") {
    const fs::path dir = temp_dir("defaultout");
    write_config(dir, kTinyScenario, "tiny.toml");

    const CliResult r = run_cli("run --config tiny.toml --quiet", dir);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "tiny" / "manifest.txt"));
}

TEST_CASE("set overrides reach the recorded manifest") {
    const fs::path dir = temp_dir("override");
    const fs::path cfg = write_config(dir, kTinyScenario);
    const fs::path out = dir / "o";

    const CliResult r = run_cli("run --config '" + cfg.string() +
                                "' --set stepper.t_end=0.06 --set gamma.k=2.0 "
                                "--out '" +
                                out.string() + "' --quiet");
    CHECK(r.exit_code == 0);
    const std::string manifest = slurp(out / "manifest.txt");
    CHECK(manifest.find("t_end = 0.06") != std::string::npos);
    CHECK(manifest.find("k = 2.0") != std::string::npos);

    // Malformed or invalid overrides are configuration errors.
    const CliResult no_equals =
        run_cli("run --config '" + cfg.string() + "' --set stepper.dt --quiet");
    CHECK(no_equals.exit_code == 2);
    CHECK(no_equals.err_has("config error"));

    const CliResult bad_value = run_cli("run --config '" + cfg.string() +
                                        "' --set stepper.dt=-1.0 --quiet");
    CHECK(bad_value.exit_code == 2);
    CHECK(bad_value.err_has("config error"));
}

TEST_CASE("configuration problems exit with the usage code") {
    const fs::path dir = temp_dir("badcfg");

    const CliResult missing =
        run_cli("run --config '" + (dir / "nope.toml").string() + "'");
    CHECK(missing.exit_code == 2);
    CHECK(missing.err_has("config error"));

    const fs::path unknown = dir / "unknown.toml";
    {
        std::ofstream out(unknown, std::ios::binary);
        out << kTinyScenario << "\n[mystery]\nknob = 1\n";
    }
    const CliResult rejected = run_cli("run --config '" + unknown.string() + "'");
    CHECK(rejected.exit_code == 2);
    CHECK(rejected.err_has("config error"));
}

TEST_CASE("check prints the assumption audit for a valid scenario") {
    const fs::path dir = temp_dir("check");
    const fs::path cfg = write_config(dir, kTinyScenario);

    const CliResult r = run_cli("check --config '" + cfg.string() + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out_has("scenario ok:"));
    CHECK(r.out_has("monotone = yes"));
    CHECK(r.out_has("A0"));
    CHECK(r.out_has("A1"));
    CHECK(r.out_has("A2"));
    CHECK(count_occurrences(r.out, "holds") >= 3);

    // The evaluation point must stay below the signal floor.
    const CliResult bad = run_cli("check --config '" + cfg.string() +
                                  "' --set gamma.a=99.0");
    CHECK(bad.exit_code == 2);
    CHECK(bad.err_has("signal floor"));
}

TEST_CASE("moser runs standalone from command-line parameters") {
    // With C0 = C1 = 1 every eta equals 1, so the reported bound is exactly 1.
    const CliResult one = run_cli("moser --rho 2 --delta0 1 --C0 1 --C1 1");
    CHECK(one.exit_code == 0);
    CHECK(one.out_has("bounded = true"));
    CHECK(one.out_has("bound = 1"));
    CHECK(one.out_has("eta_root["));

    const CliResult quiet =
        run_cli("moser --rho 2 --delta0 1 --C0 1 --C1 1 --quiet");
    CHECK(quiet.exit_code == 0);
    CHECK(quiet.out.empty());

    const CliResult flat_rho = run_cli("moser --rho 1.0");
    CHECK(flat_rho.exit_code == 2);
    CHECK(flat_rho.err_has("rho must exceed 1"));

    CHECK(run_cli("moser").exit_code == 2);
}

TEST_CASE("a run that breaks the solver reports a runtime error") {
    const fs::path dir = temp_dir("stiff");
    const fs::path cfg = write_config(dir, kStiffScenario);

    const CliResult r = run_cli("run --config '" + cfg.string() + "' --out '" +
                                (dir / "o").string() + "' --quiet");
    CHECK(r.exit_code == 1);
    CHECK(r.err_has("error:"));
}

TEST_CASE("sweep-k takes its parameter list from the command line") {
    const fs::path dir = temp_dir("sweepk");
    const fs::path cfg = write_config(dir, kTinyScenario);
    const fs::path out = dir / "o";

    const CliResult r = run_cli("sweep-k --config '" + cfg.string() +
                                "' --k 0.5 --k 1.0 --out '" + out.string() + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out_has("param"));
    CHECK(r.out_has("artifacts in"));
    CHECK(fs::exists(out / "summary.csv"));
    CHECK(fs::is_directory(out / "k_0.5"));
    CHECK(fs::is_directory(out / "k_1"));
}

TEST_CASE("converge prints level errors and a fitted rate") {
    const fs::path dir = temp_dir("converge");
    const fs::path cfg = write_config(dir, kTinyScenario);
    const fs::path out = dir / "o";

    const CliResult r = run_cli("converge --config '" + cfg.string() +
                                "' --levels 3 --out '" + out.string() + "'");
    CHECK(r.exit_code == 0);

    const std::string key = "rate[0] = ";
    const size_t pos = r.out.find(key);
    REQUIRE(pos != std::string::npos);
    const double rate = std::stod(r.out.substr(pos + key.size()));
    CHECK(rate > 1.7);
    CHECK(rate < 2.7);

    const std::string summary = slurp(out / "summary.csv");
    CHECK(count_occurrences(summary, "\n") >= 4);  // header + three levels
    CHECK(summary.find("level") != std::string::npos);
}

TEST_CASE("shipped scenario files match the embedded catalog") {
    const fs::path dir = shipped_scenario_dir();
    const auto catalog = mlab::standard_scenarios();
    REQUIRE(catalog.size() >= 6);

    for (const auto& [name, text] : catalog) {
        const fs::path file = dir / (name + ".toml");
        REQUIRE_MESSAGE(fs::exists(file), "missing " << file.string());
        CHECK_MESSAGE(slurp(file) == text,
                      name << ".toml differs from the embedded definition");

        const CliResult r = run_cli("check --config '" + file.string() + "'");
        CHECK_MESSAGE(r.exit_code == 0, name << ": " << r.err);
        CHECK(r.out_has("scenario ok:"));
    }
}

TEST_SUITE_END();
