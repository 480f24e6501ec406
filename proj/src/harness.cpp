#include "mlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "mlab/errors.hpp"
#include "mlab/field_io.hpp"

namespace mlab {

namespace {

using config::Value;

double unit_double(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double geometry_measure(const Geometry& g) {
    if (const auto* iv = std::get_if<Interval>(&g)) return iv->length;
    if (const auto* r = std::get_if<Rectangle>(&g)) return r->lx * r->ly;
    const auto& b = std::get<RadialBall>(g);
    const double n = static_cast<double>(b.dim);
    return std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0) *
           std::pow(b.radius, n);
}

struct BumpFrame {
    double cx = 0.0;
    double cy = 0.0;
    bool radial = false;
};

BumpFrame bump_frame(const InitialData& d, const Grid& g) {
    BumpFrame f;
    if (const auto* iv = std::get_if<Interval>(&g.geometry())) {
        f.cx = d.center_x.value_or(iv->length / 2.0);
    } else if (const auto* r = std::get_if<Rectangle>(&g.geometry())) {
        f.cx = d.center_x.value_or(r->lx / 2.0);
        f.cy = d.center_y.value_or(r->ly / 2.0);
    } else {
        f.cx = d.center_x.value_or(0.0);
        f.radial = true;
    }
    return f;
}

double radial_coordinate(const Grid& g, const BumpFrame& f, std::size_t cell) {
    if (g.axis_count() == 2) {
        const double dx = g.center(cell, 0) - f.cx;
        const double dy = g.center(cell, 1) - f.cy;
        return std::sqrt(dx * dx + dy * dy);
    }
    return std::abs(g.center(cell, 0) - f.cx);
}

ScalarField normalized_to_mass(ScalarField f, double mass) {
    const double total = integrate(f);
    if (!(total > 0.0)) throw ConfigError("initial profile has no mass to scale");
    const double scale = mass / total;
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= scale;
    return f;
}

std::string sanitize_csv(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::string ordinal_name(const char* prefix, std::size_t idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%04zu.field", prefix, idx);
    return buf;
}

}  // namespace

ScalarField build_initial(const InitialData& data, const GridPtr& grid,
                          std::uint64_t seed) {
    const Grid& g = *grid;
    switch (data.kind) {
        case InitialData::Kind::Constant:
            return ScalarField(grid, data.c);
        case InitialData::Kind::Gaussian: {
            const BumpFrame f = bump_frame(data, g);
            ScalarField out(grid, 0.0);
            const double w2 = data.width * data.width;
            for (std::size_t i = 0; i < out.size(); ++i) {
                double d2 = 0.0;
                if (g.axis_count() == 2) {
                    const double dx = g.center(i, 0) - f.cx;
                    const double dy = g.center(i, 1) - f.cy;
                    d2 = dx * dx + dy * dy;
                } else {
                    const double dx = g.center(i, 0) - f.cx;
                    d2 = dx * dx;
                }
                out[i] = std::exp(-d2 / w2);
            }
            return normalized_to_mass(std::move(out), data.mass);
        }
        case InitialData::Kind::Random: {
            std::mt19937_64 gen(seed);
            ScalarField out(grid, 0.0);
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double xi = 2.0 * unit_double(gen) - 1.0;
                out[i] = data.mean * (1.0 + data.amplitude * xi);
            }
            return out;
        }
        case InitialData::Kind::Annulus: {
            const BumpFrame f = bump_frame(data, g);
            ScalarField out(grid, 0.0);
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double r = radial_coordinate(g, f, i);
                const double z = (r - data.radius) / data.width;
                out[i] = std::exp(-z * z);
            }
            return normalized_to_mass(std::move(out), data.mass);
        }
    }
    throw ConfigError("unknown initial data kind");
}

// ---------------------------------------------------------------------------
// Scenario parsing

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

double as_double(const Value& v, const std::string& path) {
    if (v.is_number_integer()) return static_cast<double>(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return static_cast<double>(v.get<std::uint64_t>());
    if (v.is_number_float()) return v.get<double>();
    bad(path, "expected a number");
}

std::int64_t as_int(const Value& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_unsigned()) return static_cast<std::int64_t>(v.get<std::uint64_t>());
    bad(path, "expected an integer");
}

bool as_bool(const Value& v, const std::string& path) {
    if (v.is_boolean()) return v.get<bool>();
    bad(path, "expected true or false");
}

std::string as_string(const Value& v, const std::string& path) {
    if (v.is_string()) return v.get<std::string>();
    bad(path, "expected a quoted string");
}

std::vector<double> as_double_array(const Value& v, const std::string& path) {
    if (!v.is_array()) bad(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_double(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

/// Section accessor tracking which keys were read, so unknown keys can be
/// reported with their full path.
class SectionReader {
public:
    SectionReader(const Value& root, std::string name)
        : name_(std::move(name)),
          table_(root.contains(name_) ? &root.at(name_) : nullptr) {
        if (table_ && !table_->is_object())
            bad(name_, "expected a section (table)");
    }

    bool present() const { return table_ != nullptr; }
    bool has(const std::string& key) const {
        return table_ && table_->contains(key);
    }

    const Value* get(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return nullptr;
        return &table_->at(key);
    }

    double number(const std::string& key, double fallback) {
        const Value* v = get(key);
        return v ? as_double(*v, path(key)) : fallback;
    }
    std::optional<double> number_opt(const std::string& key) {
        const Value* v = get(key);
        if (!v) return std::nullopt;
        return as_double(*v, path(key));
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        const Value* v = get(key);
        return v ? as_int(*v, path(key)) : fallback;
    }
    bool boolean(const std::string& key, bool fallback) {
        const Value* v = get(key);
        return v ? as_bool(*v, path(key)) : fallback;
    }
    std::string text(const std::string& key, const std::string& fallback) {
        const Value* v = get(key);
        return v ? as_string(*v, path(key)) : fallback;
    }
    std::vector<double> numbers(const std::string& key) {
        const Value* v = get(key);
        return v ? as_double_array(*v, path(key)) : std::vector<double>{};
    }

    std::string path(const std::string& key) const { return name_ + "." + key; }

    void finish() const {
        if (!table_) return;
        for (auto it = table_->begin(); it != table_->end(); ++it)
            if (!seen_.count(it.key())) bad(path(it.key()), "unknown key");
    }

private:
    std::string name_;
    const Value* table_;
    std::set<std::string> seen_;
};

MotilityFamily family_from(SectionReader& sec) {
    const std::string kind = sec.text("family", "");
    if (kind.empty()) bad("gamma.family", "required");
    if (kind == "power") return PowerLaw{sec.number("k", 1.0)};
    if (kind == "shifted_power")
        return ShiftedPowerLaw{sec.number("a1", 1.0), sec.number("k1", 1.0)};
    if (kind == "exponential") return Exponential{sec.number("chi", 1.0)};
    if (kind == "stretched_exponential")
        return StretchedExponential{sec.number("chi", 1.0), sec.number("beta", 0.5)};
    if (kind == "log_power")
        return LogCorrectedPower{sec.number("a1", 1.0), sec.number("k1", 1.0),
                                 sec.number("a2", 2.0), sec.number("k2", 1.0)};
    if (kind == "sum_of_powers")
        return SumOfPowers{sec.number("a1", 1.0), sec.number("k1", 1.0),
                           sec.number("a2", 1.0), sec.number("k2", 1.0)};
    if (kind == "constant") return ConstantMotility{sec.number("c", 1.0)};
    bad("gamma.family", "unknown family '" + kind + "'");
}

}  // namespace

ScenarioConfig ScenarioConfig::from_table(const Value& root) {
    if (!root.is_object()) throw ConfigError("config: root must be a table");

    static const std::set<std::string> kTopKeys = {"schema", "seed"};
    static const std::set<std::string> kSections = {
        "grid", "gamma", "initial", "stepper", "experiment", "output",
        "diagnostics"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        if (it.value().is_object()) {
            if (!kSections.count(it.key())) bad(it.key(), "unknown section");
        } else if (!kTopKeys.count(it.key())) {
            bad(it.key(), "unknown key");
        }
    }

    ScenarioConfig cfg;
    cfg.raw = root;

    if (!root.contains("schema")) bad("schema", "required");
    if (as_int(root.at("schema"), "schema") != 1)
        bad("schema", "only schema = 1 is supported");
    if (root.contains("seed")) {
        const std::int64_t s = as_int(root.at("seed"), "seed");
        if (s < 0) bad("seed", "must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }

    {
        SectionReader sec(root, "grid");
        if (!sec.present()) bad("grid", "section required");
        const std::string geom = sec.text("geometry", "");
        const std::int64_t cells = sec.integer("cells", 0);
        if (cells < 3) bad("grid.cells", "need at least 3 cells");
        cfg.grid.cells_x = static_cast<std::size_t>(cells);
        if (geom == "interval") {
            cfg.grid.geometry = Interval{sec.number("length", 1.0)};
        } else if (geom == "rectangle") {
            cfg.grid.geometry = Rectangle{sec.number("lx", 1.0), sec.number("ly", 1.0)};
            const std::int64_t cy = sec.integer("cells_y", cells);
            if (cy < 3) bad("grid.cells_y", "need at least 3 cells");
            cfg.grid.cells_y = static_cast<std::size_t>(cy);
        } else if (geom == "ball") {
            cfg.grid.geometry =
                RadialBall{sec.number("radius", 1.0),
                           static_cast<int>(sec.integer("dim", 2))};
        } else {
            bad("grid.geometry", "expected \"interval\", \"rectangle\" or \"ball\"");
        }
        sec.finish();
        build_grid(cfg.grid);  // surface range errors now
    }

    {
        SectionReader sec(root, "gamma");
        if (!sec.present()) bad("gamma", "section required");
        cfg.family = family_from(sec);
        cfg.gamma_a = sec.number_opt("a");
        if (cfg.gamma_a && !(*cfg.gamma_a > 0.0)) bad("gamma.a", "must be positive");
        cfg.declared_k = sec.number_opt("declared_k");
        cfg.declared_l = sec.number_opt("declared_l");
        sec.finish();
        Motility probe(cfg.family, cfg.gamma_a.value_or(1.0), cfg.declared_k,
                       cfg.declared_l);  // surface parameter errors now
        (void)probe;
    }

    {
        SectionReader sec(root, "initial");
        const std::string kind = sec.text("kind", "constant");
        if (kind == "constant") {
            cfg.initial.kind = InitialData::Kind::Constant;
            cfg.initial.c = sec.number("c", 1.0);
            if (!(cfg.initial.c > 0.0)) bad("initial.c", "must be positive");
        } else if (kind == "gaussian" || kind == "annulus") {
            cfg.initial.kind = kind == "gaussian" ? InitialData::Kind::Gaussian
                                                  : InitialData::Kind::Annulus;
            const auto mass = sec.number_opt("mass");
            if (!mass || !(*mass > 0.0))
                bad("initial.mass", "a positive target mass is required");
            cfg.initial.mass = *mass;
            cfg.initial.width = sec.number("width", 0.1);
            if (!(cfg.initial.width > 0.0)) bad("initial.width", "must be positive");
            if (kind == "annulus") {
                cfg.initial.radius = sec.number("radius", 0.5);
                if (!(cfg.initial.radius >= 0.0))
                    bad("initial.radius", "must be non-negative");
            }
        } else if (kind == "random") {
            cfg.initial.kind = InitialData::Kind::Random;
            cfg.initial.mean = sec.number("mean", 1.0);
            cfg.initial.amplitude = sec.number("amplitude", 0.5);
            if (!(cfg.initial.mean > 0.0)) bad("initial.mean", "must be positive");
            if (!(cfg.initial.amplitude >= 0.0 && cfg.initial.amplitude < 1.0))
                bad("initial.amplitude", "must lie in [0, 1)");
        } else {
            bad("initial.kind",
                "expected \"constant\", \"gaussian\", \"random\" or \"annulus\"");
        }
        if (const Value* c = sec.get("center")) {
            if (c->is_array()) {
                const auto xy = as_double_array(*c, sec.path("center"));
                if (xy.empty() || xy.size() > 2)
                    bad("initial.center", "expected one or two coordinates");
                cfg.initial.center_x = xy[0];
                if (xy.size() == 2) cfg.initial.center_y = xy[1];
            } else {
                cfg.initial.center_x = as_double(*c, sec.path("center"));
            }
        }
        sec.finish();
    }

    bool t_end_given = false;
    {
        SectionReader sec(root, "stepper");
        cfg.stepper.dt = sec.number("dt", cfg.stepper.dt);
        t_end_given = sec.has("t_end");
        cfg.stepper.t_end = sec.number("t_end", cfg.stepper.t_end);
        if (!(cfg.stepper.t_end > 0.0)) bad("stepper.t_end", "must be positive");
        const std::int64_t se =
            sec.integer("sample_every", static_cast<std::int64_t>(cfg.stepper.sample_every));
        if (se < 1) bad("stepper.sample_every", "must be at least 1");
        cfg.stepper.sample_every = static_cast<std::size_t>(se);
        cfg.stepper.growth_factor = sec.number("growth_factor", cfg.stepper.growth_factor);
        cfg.stepper.positivity_floor =
            sec.number("positivity_floor", cfg.stepper.positivity_floor);
        sec.finish();
        cfg.stepper.validate();
    }

    {
        SectionReader sec(root, "experiment");
        const std::string kind = sec.text("kind", "single");
        if (kind == "single") {
            cfg.experiment = Experiment::Single;
        } else if (kind == "k_sweep") {
            cfg.experiment = Experiment::KSweep;
            cfg.k_list = sec.numbers("k_list");
            if (cfg.k_list.empty()) bad("experiment.k_list", "required for a k sweep");
            for (double k : cfg.k_list)
                if (!(k > 0.0)) bad("experiment.k_list", "entries must be positive");
            if (!std::holds_alternative<PowerLaw>(cfg.family))
                bad("gamma.family", "a k sweep varies the power family");
        } else if (kind == "mass_sweep") {
            cfg.experiment = Experiment::MassSweep;
            cfg.mass_list = sec.numbers("mass_list");
            if (cfg.mass_list.empty())
                bad("experiment.mass_list", "required for a mass sweep");
            for (std::size_t i = 0; i < cfg.mass_list.size(); ++i) {
                if (!(cfg.mass_list[i] > 0.0))
                    bad("experiment.mass_list", "entries must be positive");
                if (i > 0 && !(cfg.mass_list[i] > cfg.mass_list[i - 1]))
                    bad("experiment.mass_list", "entries must increase");
            }
            cfg.chi = sec.number("chi", 1.0);
            if (!(cfg.chi > 0.0)) bad("experiment.chi", "must be positive");
            if (!std::holds_alternative<Exponential>(cfg.family))
                bad("gamma.family", "a mass sweep uses the exponential family");
        } else if (kind == "convergence") {
            cfg.experiment = Experiment::Convergence;
            const std::int64_t levels = sec.integer("levels", 3);
            if (levels < 2 || levels > 8)
                bad("experiment.levels", "expected between 2 and 8 levels");
            cfg.levels = static_cast<int>(levels);
        } else {
            bad("experiment.kind", "unknown experiment '" + kind + "'");
        }
        sec.finish();
    }

    {
        SectionReader sec(root, "output");
        cfg.snapshot_times = sec.numbers("snapshot_times");
        for (std::size_t i = 0; i < cfg.snapshot_times.size(); ++i) {
            if (cfg.snapshot_times[i] < 0.0)
                bad("output.snapshot_times", "times must be non-negative");
            if (i > 0 && cfg.snapshot_times[i] <= cfg.snapshot_times[i - 1])
                bad("output.snapshot_times", "times must increase");
        }
        cfg.directory = sec.text("directory", "");
        sec.finish();
    }

    {
        SectionReader sec(root, "diagnostics");
        cfg.envelope_tol = sec.number("envelope_tol", cfg.envelope_tol);
        if (!(cfg.envelope_tol > 0.0)) bad("diagnostics.envelope_tol", "must be positive");
        cfg.confirm_with_refinement =
            sec.boolean("confirm_with_refinement", cfg.confirm_with_refinement);
        if (sec.has("ladder")) cfg.ladder = sec.boolean("ladder", false);
        else sec.get("ladder");
        const std::int64_t rungs = sec.integer("ladder_rungs", cfg.ladder_rungs);
        if (rungs < 1 || rungs > 32)
            bad("diagnostics.ladder_rungs", "expected between 1 and 32 rungs");
        cfg.ladder_rungs = static_cast<int>(rungs);
        cfg.trend = sec.boolean("trend", cfg.trend);
        sec.finish();
    }

    // Sweeps default to a long horizon when none is given.
    if ((cfg.experiment == Experiment::KSweep ||
         cfg.experiment == Experiment::MassSweep) &&
        !t_end_given)
        cfg.stepper.t_end = 200.0;

    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
    return from_table(config::parse_file(path));
}

// ---------------------------------------------------------------------------
// Single runs

namespace {

void write_manifest(const std::filesystem::path& dir, const Value& raw,
                    Value result) {
    Value merged = raw;
    merged["result"] = std::move(result);
    std::ofstream out(dir / "manifest.txt", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << config::canonical(merged);
}

Value verdict_names(const DiagnosticsReport& rep) {
    Value arr = Value::array();
    for (const auto& name : rep.failing_checks()) arr.push_back(name);
    return arr;
}

}  // namespace

RunArtifacts run_scenario(const ScenarioConfig& cfg,
                          const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const GridPtr grid = build_grid(cfg.grid);
    const HelmholtzSolver solver(grid);
    const ScalarField u0 = build_initial(cfg.initial, grid, cfg.seed);
    const double mass0 = integrate(u0);

    // The signal never falls below green_min * mass, so the motility's
    // lower integration limit can safely sit below that line.
    const double vstar = solver.green_min() * mass0;
    double a = 0.5 * vstar;
    if (cfg.gamma_a) {
        if (!(*cfg.gamma_a < vstar))
            throw ConfigError("gamma.a must stay below the signal floor " +
                              format_double(vstar));
        a = *cfg.gamma_a;
    }
    const Motility m(cfg.family, a, cfg.declared_k, cfg.declared_l);

    RecorderConfig rc;
    rc.envelope_tol = cfg.envelope_tol;
    rc.ladder =
        cfg.ladder.value_or(grid->space_dim() >= 3 && m.declared_k().has_value());
    rc.ladder_k = m.declared_k().value_or(1.0);
    rc.ladder_rungs = cfg.ladder_rungs;
    rc.trend = cfg.trend;

    SimState s0 = init_state(u0, solver);

    std::vector<Observer> observers;
    auto next_snapshot = std::make_shared<std::size_t>(0);
    const std::vector<double>& times = cfg.snapshot_times;
    auto write_due = [&times, next_snapshot, out_dir](const SimState& s) {
        while (*next_snapshot < times.size() &&
               s.t >= times[*next_snapshot] - 1e-12) {
            write_snapshot(out_dir / ordinal_name("u_", *next_snapshot), s.u);
            write_snapshot(out_dir / ordinal_name("v_", *next_snapshot), s.v);
            ++*next_snapshot;
        }
    };
    if (!times.empty()) {
        write_due(s0);
        observers.push_back([write_due](const SimState&, const SimState& next) {
            write_due(next);
            return true;
        });
    }

    RunResult rr = run(std::move(s0), m, solver, cfg.stepper, rc,
                       std::move(observers), out_dir);

    rr.report.write_csv(out_dir / "trajectory.csv");
    {
        std::ofstream rep(out_dir / "report.txt", std::ios::trunc);
        rep << rr.report.summary();
    }
    write_checkpoint(out_dir / "state.checkpoint", rr.state);

    RunArtifacts art{std::move(rr.state), std::move(rr.report), rr.halt,
                     false,              false,                 false,
                     out_dir};
    art.passed = art.report.all_asserted_pass();
    const bool original_passed = art.passed;

    if (!art.passed && cfg.confirm_with_refinement) {
        ScenarioConfig fine = cfg;
        fine.confirm_with_refinement = false;
        fine.grid.cells_x *= 2;
        if (std::holds_alternative<Rectangle>(fine.grid.geometry))
            fine.grid.cells_y = fine.grid.cells_y ? fine.grid.cells_y * 2 : 0;
        fine.stepper.dt *= 0.5;
        fine.snapshot_times.clear();
        const RunArtifacts confirm = run_scenario(fine, out_dir / "refined");
        art.refined = true;
        art.refined_passed = confirm.passed;
        art.passed = confirm.passed;
    }

    Value result = Value::object();
    result["halt"] = to_string(art.halt);
    result["steps"] = static_cast<std::int64_t>(art.state.step_index);
    result["t_final"] = art.state.t;
    result["mass_final"] = integrate(art.state.u);
    result["passed"] = original_passed;
    result["failing"] = verdict_names(art.report);
    if (art.refined) {
        result["refined"] = true;
        result["refined_passed"] = art.refined_passed;
    }
    write_manifest(out_dir, cfg.raw, std::move(result));
    return art;
}

// ---------------------------------------------------------------------------
// Sweeps and convergence

std::string classify_trajectory(const std::vector<double>& sup_series,
                                bool detector_fired) {
    if (detector_fired) return "growing";
    const std::size_t n = sup_series.size();
    if (n < 8) return "undecided";
    double q[4];
    for (int j = 0; j < 4; ++j) {
        const std::size_t lo = n * static_cast<std::size_t>(j) / 4;
        const std::size_t hi = n * static_cast<std::size_t>(j + 1) / 4;
        q[j] = -std::numeric_limits<double>::infinity();
        for (std::size_t i = lo; i < hi; ++i) q[j] = std::max(q[j], sup_series[i]);
    }
    const double scale = std::max(std::abs(q[2]), 1e-300);
    if (std::abs(q[3] - q[2]) <= 0.02 * scale) return "plateau";
    if (q[1] > 1.2 * q[0] && q[2] > 1.2 * q[1] && q[3] > 1.2 * q[2])
        return "growing";
    return "undecided";
}

ScalarField restrict_field(const ScalarField& fine, const GridPtr& coarse) {
    const Grid& gf = *fine.grid();
    const Grid& gc = *coarse;
    if (gf.geometry().index() != gc.geometry().index() ||
        gf.axis_count() != gc.axis_count())
        throw GridMismatchError("restriction needs grids of the same geometry");

    std::array<std::size_t, 2> ratio{1, 1};
    for (int ax = 0; ax < gf.axis_count(); ++ax) {
        const std::size_t nf = gf.cells_along(ax);
        const std::size_t nc = gc.cells_along(ax);
        if (nc == 0 || nf % nc != 0)
            throw GridMismatchError("restriction needs an integer refinement ratio");
        ratio[static_cast<std::size_t>(ax)] = nf / nc;
    }

    ScalarField out(coarse, 0.0);
    if (gf.axis_count() == 1) {
        const std::size_t r = ratio[0];
        for (std::size_t i = 0; i < out.size(); ++i) {
            double num = 0.0, den = 0.0;
            for (std::size_t j = i * r; j < (i + 1) * r; ++j) {
                num += gf.cell_volume(j) * fine[j];
                den += gf.cell_volume(j);
            }
            out[i] = num / den;
        }
        return out;
    }
    const std::size_t ncx = gc.cells_along(0);
    const std::size_t nfx = gf.cells_along(0);
    for (std::size_t iy = 0; iy < gc.cells_along(1); ++iy) {
        for (std::size_t ix = 0; ix < ncx; ++ix) {
            double num = 0.0, den = 0.0;
            for (std::size_t jy = iy * ratio[1]; jy < (iy + 1) * ratio[1]; ++jy) {
                for (std::size_t jx = ix * ratio[0]; jx < (ix + 1) * ratio[0]; ++jx) {
                    const std::size_t cell = jy * nfx + jx;
                    num += gf.cell_volume(cell) * fine[cell];
                    den += gf.cell_volume(cell);
                }
            }
            out[iy * ncx + ix] = num / den;
        }
    }
    return out;
}

unsigned worker_count(std::size_t entries) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("MLAB_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v >= 1) n = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(
        std::min<std::size_t>(n, std::max<std::size_t>(entries, 1)));
}

namespace {

void write_sweep_summary(const std::filesystem::path& dir,
                         const std::vector<SweepEntryResult>& entries) {
    std::ofstream out(dir / "summary.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write summary in " + dir.string());
    out << "param,classification,sup_stat,halt,t_final,passed,error\n";
    for (const auto& e : entries) {
        out << format_double(e.param) << ',' << e.classification << ','
            << format_double(e.sup_stat) << ',' << to_string(e.halt) << ','
            << format_double(e.t_final) << ',' << (e.passed ? "true" : "false")
            << ',' << sanitize_csv(e.error) << '\n';
    }
}

template <class MakeEntry>
std::vector<SweepEntryResult> run_parallel(std::size_t count, MakeEntry&& make) {
    std::vector<SweepEntryResult> entries(count);
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (std::size_t i = cursor.fetch_add(1); i < count;
             i = cursor.fetch_add(1)) {
            try {
                entries[i] = make(i);
            } catch (const std::exception& e) {
                SweepEntryResult r;
                r.error = e.what();
                r.classification = "error";
                entries[i] = std::move(r);
            }
        }
    };
    const unsigned workers = worker_count(count);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return entries;
}

ExperimentResult run_sweep(const ScenarioConfig& cfg,
                           const std::filesystem::path& out_dir, bool mass_sweep) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::vector<double>& params = mass_sweep ? cfg.mass_list : cfg.k_list;
    const char* prefix = mass_sweep ? "m_" : "k_";

    ExperimentResult res;
    res.entries = run_parallel(params.size(), [&](std::size_t i) {
        const double p = params[i];
        ScenarioConfig entry = cfg;
        entry.experiment = ScenarioConfig::Experiment::Single;
        entry.snapshot_times.clear();
        entry.raw["experiment"]["kind"] = "single";
        if (mass_sweep) {
            entry.family = Exponential{cfg.chi};
            entry.raw["gamma"]["chi"] = cfg.chi;
            const double measure = geometry_measure(cfg.grid.geometry);
            switch (entry.initial.kind) {
                case InitialData::Kind::Constant:
                    entry.initial.c = p / measure;
                    entry.raw["initial"]["c"] = entry.initial.c;
                    break;
                case InitialData::Kind::Random:
                    entry.initial.mean = p / measure;
                    entry.raw["initial"]["mean"] = entry.initial.mean;
                    break;
                default:
                    entry.initial.mass = p;
                    entry.raw["initial"]["mass"] = p;
            }
        } else {
            entry.family = PowerLaw{p};
            entry.raw["gamma"]["k"] = p;
        }

        const std::string name = prefix + format_double(p);
        const RunArtifacts art = run_scenario(entry, out_dir / name);

        SweepEntryResult r;
        r.param = p;
        const auto series = art.report.column(mass_sweep ? "u_max" : "v_max");
        r.sup_stat = -std::numeric_limits<double>::infinity();
        for (double x : series) r.sup_stat = std::max(r.sup_stat, x);
        r.halt = art.halt;
        r.classification =
            classify_trajectory(series, art.halt == HaltReason::GrowthThreshold);
        r.t_final = art.state.t;
        r.passed = art.passed;
        return r;
    });

    if (mass_sweep) {
        double high = std::numeric_limits<double>::infinity();
        for (const auto& e : res.entries)
            if (e.classification == "growing") high = std::min(high, e.param);
        double low = -std::numeric_limits<double>::infinity();
        for (const auto& e : res.entries)
            if (e.classification == "plateau" && e.param < high)
                low = std::max(low, e.param);
        if (std::isfinite(low) && std::isfinite(high))
            res.bracket = std::make_pair(low, high);
    }

    res.passed = !res.entries.empty();
    for (const auto& e : res.entries)
        if (!e.passed || !e.error.empty()) res.passed = false;

    write_sweep_summary(out_dir, res.entries);
    Value result = Value::object();
    result["kind"] = mass_sweep ? "mass_sweep" : "k_sweep";
    result["entries"] = static_cast<std::int64_t>(res.entries.size());
    result["passed"] = res.passed;
    if (res.bracket) {
        result["bracket_low"] = res.bracket->first;
        result["bracket_high"] = res.bracket->second;
    }
    write_manifest(out_dir, cfg.raw, std::move(result));
    return res;
}

ExperimentResult run_convergence(const ScenarioConfig& cfg,
                                 const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const int levels = cfg.levels;

    struct LevelRun {
        std::optional<RunArtifacts> art;
        GridPtr grid;
    };
    std::vector<LevelRun> runs(static_cast<std::size_t>(levels));

    ExperimentResult res;
    res.entries = run_parallel(static_cast<std::size_t>(levels), [&](std::size_t l) {
        ScenarioConfig entry = cfg;
        entry.experiment = ScenarioConfig::Experiment::Single;
        entry.snapshot_times.clear();
        entry.raw["experiment"]["kind"] = "single";
        const std::size_t factor = std::size_t{1} << l;
        entry.grid.cells_x = cfg.grid.cells_x * factor;
        if (std::holds_alternative<Rectangle>(entry.grid.geometry))
            entry.grid.cells_y = cfg.grid.cells_y * factor;
        // Halve dt per doubling twice over so the time error refines with
        // the square of the mesh width.
        entry.stepper.dt = cfg.stepper.dt / static_cast<double>(factor * factor);
        entry.raw["grid"]["cells"] = static_cast<std::int64_t>(entry.grid.cells_x);
        entry.raw["stepper"]["dt"] = entry.stepper.dt;

        const std::string name = "level_" + std::to_string(l);
        RunArtifacts art = run_scenario(entry, out_dir / name);

        SweepEntryResult r;
        r.param = static_cast<double>(entry.grid.cells_x);
        r.classification = "level";
        r.halt = art.halt;
        r.t_final = art.state.t;
        r.passed = art.passed;
        runs[l].grid = art.state.u.grid();
        runs[l].art = std::move(art);
        return r;
    });

    const auto& finest = runs.back().art;
    if (finest) {
        for (std::size_t l = 0; l + 1 < runs.size(); ++l) {
            if (!runs[l].art) continue;
            const ScalarField coarse_ref =
                restrict_field(finest->state.u, runs[l].grid);
            ScalarField diff = runs[l].art->state.u;
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= coarse_ref[i];
            const double err = lp_norm(diff, 2.0);
            res.errors.push_back(err);
            res.entries[l].sup_stat = err;
        }
        for (std::size_t l = 0; l + 1 < res.errors.size(); ++l)
            res.rates.push_back(std::log2(res.errors[l] /
                                          std::max(res.errors[l + 1], 1e-300)));
    }

    res.passed = !res.entries.empty();
    for (const auto& e : res.entries)
        if (!e.passed || !e.error.empty()) res.passed = false;

    write_sweep_summary(out_dir, res.entries);
    Value result = Value::object();
    result["kind"] = "convergence";
    result["entries"] = static_cast<std::int64_t>(res.entries.size());
    result["passed"] = res.passed;
    {
        Value arr = Value::array();
        for (double e : res.errors) arr.push_back(e);
        result["errors"] = arr;
    }
    {
        Value arr = Value::array();
        for (double r : res.rates) arr.push_back(r);
        result["rates"] = arr;
    }
    write_manifest(out_dir, cfg.raw, std::move(result));
    return res;
}

}  // namespace

ExperimentResult run_experiment(const ScenarioConfig& cfg,
                                const std::filesystem::path& out_dir) {
    switch (cfg.experiment) {
        case ScenarioConfig::Experiment::Single: {
            ExperimentResult res;
            res.single = run_scenario(cfg, out_dir);
            res.passed = res.single->passed;
            return res;
        }
        case ScenarioConfig::Experiment::KSweep:
            return run_sweep(cfg, out_dir, false);
        case ScenarioConfig::Experiment::MassSweep:
            return run_sweep(cfg, out_dir, true);
        case ScenarioConfig::Experiment::Convergence:
            return run_convergence(cfg, out_dir);
    }
    throw ConfigError("unknown experiment kind");
}

// ---------------------------------------------------------------------------
// Built-in scenarios

std::vector<std::pair<std::string, std::string>> standard_scenarios() {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("constant_1d", R"(schema = 1
seed = 1

[grid]
geometry = "interval"
length = 1.0
cells = 64

[gamma]
family = "power"
k = 1.0

[initial]
kind = "constant"
c = 2.0

[stepper]
dt = 0.01
t_end = 1.0
)");
    out.emplace_back("gaussian_1d", R"(schema = 1
seed = 1

[grid]
geometry = "interval"
length = 2.0
cells = 128

[gamma]
family = "shifted_power"
a1 = 0.5
k1 = 2.0

[initial]
kind = "gaussian"
mass = 3.0
width = 0.2

[stepper]
dt = 0.005
t_end = 1.0
sample_every = 5
)");
    out.emplace_back("random_2d", R"(schema = 1
seed = 42

[grid]
geometry = "rectangle"
lx = 1.0
ly = 1.0
cells = 32
cells_y = 32

[gamma]
family = "exponential"
chi = 0.5

[initial]
kind = "random"
mean = 2.0
amplitude = 0.5

[stepper]
dt = 0.01
t_end = 1.0
)");
    out.emplace_back("radial_3d", R"(schema = 1
seed = 1

[grid]
geometry = "ball"
radius = 1.0
dim = 3
cells = 96

[gamma]
family = "power"
k = 1.0

[initial]
kind = "gaussian"
mass = 5.0
width = 0.3

[stepper]
dt = 0.005
t_end = 1.0
sample_every = 5
)");
    out.emplace_back("annulus_disk", R"(schema = 1
seed = 1

[grid]
geometry = "ball"
radius = 1.0
dim = 2
cells = 128

[gamma]
family = "exponential"
chi = 1.0

[initial]
kind = "annulus"
mass = 6.0
radius = 0.6
width = 0.1

[stepper]
dt = 0.005
t_end = 2.0
sample_every = 5
)");
    out.emplace_back("ksweep_3d", R"(schema = 1
seed = 1

[grid]
geometry = "ball"
radius = 1.0
dim = 3
cells = 256

[gamma]
family = "power"
k = 1.0

[initial]
kind = "gaussian"
mass = 5.0
width = 0.25

[stepper]
dt = 0.02
t_end = 200.0
sample_every = 50

[experiment]
kind = "k_sweep"
k_list = [0.5, 1.0, 2.0, 2.5]
)");
    out.emplace_back("mass_sweep_disk", R"(schema = 1
seed = 42

[grid]
geometry = "ball"
radius = 4.0
dim = 2
cells = 128

[gamma]
family = "exponential"
chi = 1.0

[initial]
kind = "random"
mean = 1.0
amplitude = 0.1

[stepper]
dt = 0.02
t_end = 800.0
sample_every = 500
growth_factor = 2.0

[experiment]
kind = "mass_sweep"
mass_list = [40.0, 70.0, 150.0, 200.0]
chi = 1.0
)");
    out.emplace_back("stabilization", R"(schema = 1
seed = 7

[grid]
geometry = "ball"
radius = 1.0
dim = 3
cells = 128

[gamma]
family = "power"
k = 0.5

[initial]
kind = "random"
mean = 1.0
amplitude = 0.2

[stepper]
dt = 0.002
t_end = 3.0
sample_every = 5
)");
    out.emplace_back("convergence_1d", R"(schema = 1
seed = 1

[grid]
geometry = "interval"
length = 2.0
cells = 64

[gamma]
family = "shifted_power"
a1 = 0.5
k1 = 2.0

[initial]
kind = "gaussian"
mass = 3.0
width = 0.25

[stepper]
# Chosen so every refinement level lands on t_end exactly (dt divides
# t_end at each quartering); the levels then compare states at the same
# physical time.
dt = 0.0025
t_end = 0.25

[experiment]
kind = "convergence"
levels = 3
)");
    return out;
}

}  // namespace mlab
