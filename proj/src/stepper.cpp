#include "mlab/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <utility>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "mlab/diagnostics.hpp"
#include "mlab/errors.hpp"
#include "mlab/field_io.hpp"
#include "mlab/operators.hpp"

namespace mlab {

namespace {

// gamma(v) underflows to zero for exponential tails once v is large;
// flooring keeps V/gamma finite while preserving the sign structure.
constexpr double kGammaUnderflowFloor = 5e-300;
constexpr std::size_t kDirectCellLimit = 100000;

bool structurally_equal(const Grid& a, const Grid& b) {
    if (a.geometry().index() != b.geometry().index()) return false;
    if (a.space_dim() != b.space_dim() || a.axis_count() != b.axis_count())
        return false;
    for (int ax = 0; ax < a.axis_count(); ++ax) {
        if (a.cells_along(ax) != b.cells_along(ax)) return false;
        if (a.spacing(ax) != b.spacing(ax)) return false;
    }
    return true;
}

}  // namespace

void StepperConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("stepper: dt must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("stepper: t_end must be non-negative");
    if (!(positivity_floor > 0.0))
        throw ConfigError("stepper: positivity_floor must be positive");
    if (!(growth_factor > 1.0))
        throw ConfigError("stepper: growth_factor must exceed 1");
    if (sample_every == 0) throw ConfigError("stepper: sample_every must be >= 1");
}

SimState init_state(const ScalarField& u_in, const HelmholtzSolver& h) {
    if (u_in.grid() != h.grid() && !u_in.grid()->same_grid(*h.grid()))
        throw GridMismatchError("initial density lives on a different grid");
    if (!u_in.all_finite()) throw ConfigError("initial density has non-finite values");
    if (u_in.min() < 0.0) throw ConfigError("initial density must be non-negative");
    if (!(integrate(u_in) > 0.0)) throw ConfigError("initial density must carry mass");
    SimState s{0.0, 0, u_in, h.solve(u_in)};
    return s;
}

struct StepEngine::Impl {
    Motility m;
    const HelmholtzSolver* h;
    StepperConfig cfg;
    GridPtr grid;
    bool direct;

    Eigen::SparseMatrix<double> base;  // -dt * (volume-weighted Laplacian)
    std::vector<std::ptrdiff_t> diag_pos;
    Eigen::SparseMatrix<double> work;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool pattern_ready = false;

    Impl(const Motility& mot, const HelmholtzSolver& solver, const StepperConfig& c)
        : m(mot), h(&solver), cfg(c), grid(solver.grid()) {
        cfg.validate();
        const std::size_t n = grid->cell_count();
        direct = n <= kDirectCellLimit;
        base = assemble_volume_laplacian(*grid);
        base *= -cfg.dt;
        base.makeCompressed();
        diag_pos.assign(n, -1);
        for (int k = 0; k < base.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(base, k); it; ++it)
                if (it.row() == it.col())
                    diag_pos[static_cast<std::size_t>(it.row())] =
                        &it.valueRef() - base.valuePtr();
        work = base;
    }

    SimState advance(const SimState& s) {
        const std::size_t n = grid->cell_count();
        auto vols = grid->cell_volumes();

        std::vector<double> gam(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double arg = std::max(s.v[i], cfg.positivity_floor);
            gam[i] = std::max(m.gamma(arg), kGammaUnderflowFloor);
        }

        std::memcpy(work.valuePtr(), base.valuePtr(),
                    sizeof(double) * static_cast<std::size_t>(base.nonZeros()));
        double* vp = work.valuePtr();
        for (std::size_t i = 0; i < n; ++i) vp[diag_pos[i]] += vols[i] / gam[i];

        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            rhs[static_cast<Eigen::Index>(i)] = vols[i] * s.u[i];

        Eigen::VectorXd w;
        if (direct) {
            if (!pattern_ready) {
                ldlt.analyzePattern(work);
                pattern_ready = true;
            }
            ldlt.factorize(work);
            if (ldlt.info() != Eigen::Success)
                throw SolverError("implicit step: factorization failed", 0.0);
            w = ldlt.solve(rhs);
        } else {
            Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                     Eigen::Lower | Eigen::Upper>
                cg;
            cg.setTolerance(1e-13);
            cg.setMaxIterations(static_cast<Eigen::Index>(10 * n + 1000));
            cg.compute(work);
            w = cg.solve(rhs);
        }

        const double bn = rhs.norm();
        Eigen::VectorXd r = rhs - work * w;
        if (!(r.norm() <= 1e-12 * bn)) {
            if (direct)
                w += ldlt.solve(r);
            else {
                Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                         Eigen::Lower | Eigen::Upper>
                    cg;
                cg.setTolerance(1e-13);
                cg.compute(work);
                w += cg.solve(r);
            }
            r = rhs - work * w;
        }
        const double rel = bn > 0.0 ? r.norm() / bn : r.norm();
        if (!(rel <= 1e-10) || !w.allFinite())
            throw SolverError("implicit step: density solve failed", rel);

        SimState next{s.t + cfg.dt, s.step_index + 1, ScalarField(grid, 0.0),
                      ScalarField(grid, 0.0)};
        double wmax = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            wmax = std::max(wmax, std::abs(w[static_cast<Eigen::Index>(i)]));
        for (std::size_t i = 0; i < n; ++i) {
            double ui = w[static_cast<Eigen::Index>(i)] / gam[i];
            if (ui < 0.0) {
                // The matrix is Stieltjes, so negatives can only be roundoff.
                if (w[static_cast<Eigen::Index>(i)] < -1e-12 * wmax)
                    throw SolverError("implicit step: positivity lost", rel);
                ui = 0.0;
            }
            next.u[i] = ui;
        }

        const double m0 = integrate(s.u);
        const double m1 = integrate(next.u);
        const double ratio = m0 / m1;
        if (!(std::abs(ratio - 1.0) <= 1e-10))
            throw SolverError("implicit step: mass drifted beyond budget",
                              std::abs(ratio - 1.0));
        for (std::size_t i = 0; i < n; ++i) next.u[i] *= ratio;

        next.v = h->solve(next.u);
        if (!next.u.all_finite() || !next.v.all_finite())
            throw SolverError("implicit step: non-finite state", rel);
        return next;
    }
};

StepEngine::StepEngine(const Motility& m, const HelmholtzSolver& h,
                       const StepperConfig& cfg)
    : impl_(std::make_unique<Impl>(m, h, cfg)) {}

StepEngine::~StepEngine() = default;
StepEngine::StepEngine(StepEngine&&) noexcept = default;
StepEngine& StepEngine::operator=(StepEngine&&) noexcept = default;

SimState StepEngine::advance(const SimState& s) { return impl_->advance(s); }

const StepperConfig& StepEngine::config() const { return impl_->cfg; }

SimState step(const SimState& s, const Motility& m, const HelmholtzSolver& h,
              const StepperConfig& cfg) {
    StepEngine eng(m, h, cfg);
    return eng.advance(s);
}

const char* to_string(HaltReason r) {
    switch (r) {
        case HaltReason::Completed: return "completed";
        case HaltReason::GrowthThreshold: return "growth-threshold";
        case HaltReason::ObserverRequest: return "observer-request";
    }
    return "?";
}

RunResult run(const ScalarField& u_in, const Motility& m, const HelmholtzSolver& h,
              const StepperConfig& cfg, const RecorderConfig& rec,
              std::vector<Observer> observers, const std::filesystem::path& dump_dir) {
    return run(init_state(u_in, h), m, h, cfg, rec, std::move(observers), dump_dir);
}

RunResult run(SimState start, const Motility& m, const HelmholtzSolver& h,
              const StepperConfig& cfg, const RecorderConfig& rec,
              std::vector<Observer> observers, const std::filesystem::path& dump_dir) {
    cfg.validate();
    // t_end is an absolute simulation time, so a resumed state only covers
    // the remaining span.
    const double remaining = cfg.t_end - start.t;
    const std::size_t n_steps =
        remaining <= 0.0
            ? 0
            : static_cast<std::size_t>(std::ceil(remaining / cfg.dt - 1e-9));

    DiagnosticsRecorder recorder(rec, m, h);
    if (n_steps == 0) return {std::move(start), recorder.finalize(), HaltReason::Completed};

    recorder.record_initial(start);
    const double threshold = cfg.growth_factor * start.u.max();

    StepEngine eng(m, h, cfg);
    SimState s = std::move(start);
    HaltReason halt = HaltReason::Completed;
    for (std::size_t k = 1; k <= n_steps; ++k) {
        std::optional<SimState> stepped;
        try {
            stepped = eng.advance(s);
        } catch (const SolverError&) {
            if (!dump_dir.empty()) {
                std::filesystem::create_directories(dump_dir);
                write_snapshot(dump_dir / "dump_u.field", s.u);
                write_snapshot(dump_dir / "dump_v.field", s.v);
            }
            throw;
        }
        SimState& next = *stepped;
        const bool grew = next.u.max() > threshold;
        const bool sampled =
            next.step_index % cfg.sample_every == 0 || k == n_steps || grew;
        bool observer_halt = false;
        if (sampled) {
            recorder.sample(s, next);
            for (const auto& obs : observers)
                if (!obs(s, next)) observer_halt = true;
        }
        s = std::move(next);
        if (grew) {
            halt = HaltReason::GrowthThreshold;
            break;
        }
        if (observer_halt) {
            halt = HaltReason::ObserverRequest;
            break;
        }
    }
    return {std::move(s), recorder.finalize(), halt};
}

namespace {
constexpr char kCheckpointMagic[6] = {'M', 'L', 'A', 'B', 'C', 'K'};
}

void write_checkpoint(const std::filesystem::path& path, const SimState& s) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    out.write(reinterpret_cast<const char*>(&s.t), sizeof(double));
    const std::uint64_t idx = s.step_index;
    out.write(reinterpret_cast<const char*>(&idx), sizeof(idx));
    write_field(out, s.u);
    write_field(out, s.v);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

SimState read_checkpoint(const std::filesystem::path& path, const GridPtr& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    char magic[6];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw ConfigError(path.string() + " is not a checkpoint file");
    double t = 0.0;
    std::uint64_t idx = 0;
    in.read(reinterpret_cast<char*>(&t), sizeof(t));
    in.read(reinterpret_cast<char*>(&idx), sizeof(idx));
    if (!in) throw ConfigError(path.string() + ": truncated checkpoint header");
    ScalarField u = read_field(in);
    ScalarField v = read_field(in);
    if (!structurally_equal(*u.grid(), *v.grid()))
        throw ConfigError(path.string() + ": checkpoint fields disagree on the grid");
    // Bind both fields onto one grid object: the caller's grid when given
    // (after a structural match check), otherwise the grid read with u.
    GridPtr target = u.grid();
    if (grid) {
        if (!structurally_equal(*grid, *u.grid()))
            throw ConfigError(path.string() +
                              ": checkpoint grid does not match the expected grid");
        target = grid;
    }
    std::vector<double> uu(u.values().begin(), u.values().end());
    std::vector<double> vv(v.values().begin(), v.values().end());
    return SimState{t, static_cast<std::size_t>(idx),
                    ScalarField(target, std::move(uu)),
                    ScalarField(target, std::move(vv))};
}

}  // namespace mlab
