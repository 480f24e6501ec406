#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "mlab/grid.hpp"
#include "mlab/helmholtz.hpp"
#include "mlab/motility.hpp"
#include "mlab/report.hpp"

namespace mlab {

/// Simulation state: cell density u and signal v with (I - Lap) v = u
/// maintained at every step.
struct SimState {
    double t = 0.0;
    std::size_t step_index = 0;
    ScalarField u;
    ScalarField v;
};

struct StepperConfig {
    double dt = 0.01;
    /// Absolute end time: a resumed state runs only the remaining span.
    double t_end = 1.0;
    /// Floor for the v argument of gamma; inactive whenever min v exceeds it.
    double positivity_floor = 1e-12;
    /// Halt when max u exceeds this multiple of its initial value.
    double growth_factor = 1e6;
    /// Observer/recorder cadence in steps; the final step is always sampled.
    std::size_t sample_every = 10;

    enum class Scheme { ImplicitFrozenGamma };
    Scheme scheme = Scheme::ImplicitFrozenGamma;

    void validate() const;
};

/// v = solve(u_in); rejects negative, identically zero, or non-finite
/// initial densities.
SimState init_state(const ScalarField& u_in, const HelmholtzSolver& h);

/// One implicit Euler step of du/dt = Lap(u gamma(v)) with gamma frozen at
/// the current v, then the elliptic update v = solve(u). The frozen-gamma
/// system is solved in the substituted variable w = gamma u, which makes
/// the matrix Stieltjes: positivity holds for every dt, and conservation
/// holds because the weighted Laplacian has zero column sums. Owns a
/// per-grid workspace, so reuse one engine for long runs.
class StepEngine {
public:
    /// The motility is copied; solver and its grid must outlive the engine.
    StepEngine(const Motility& m, const HelmholtzSolver& h, const StepperConfig& cfg);
    ~StepEngine();
    StepEngine(StepEngine&&) noexcept;
    StepEngine& operator=(StepEngine&&) noexcept;

    SimState advance(const SimState& s);

    const StepperConfig& config() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Single-step convenience wrapper around StepEngine.
SimState step(const SimState& s, const Motility& m, const HelmholtzSolver& h,
              const StepperConfig& cfg);

enum class HaltReason { Completed, GrowthThreshold, ObserverRequest };
const char* to_string(HaltReason r);

/// Called at every sampling point with the pre- and post-step states;
/// return false to request a halt.
using Observer = std::function<bool(const SimState& prev, const SimState& next)>;

struct RunResult {
    SimState state;
    DiagnosticsReport report;
    HaltReason halt = HaltReason::Completed;
};

/// Advances from t = 0 (or from a resumed state) until t_end or a halt,
/// recording the diagnostics series at the configured cadence. If
/// dump_dir is non-empty, a non-finite state is snapshotted there before
/// the error propagates.
RunResult run(const ScalarField& u_in, const Motility& m, const HelmholtzSolver& h,
              const StepperConfig& cfg, const RecorderConfig& rec = {},
              std::vector<Observer> observers = {},
              const std::filesystem::path& dump_dir = {});

RunResult run(SimState start, const Motility& m, const HelmholtzSolver& h,
              const StepperConfig& cfg, const RecorderConfig& rec = {},
              std::vector<Observer> observers = {},
              const std::filesystem::path& dump_dir = {});

/// Checkpoint = scalar header {t, step_index} + u and v snapshots.
void write_checkpoint(const std::filesystem::path& path, const SimState& s);
/// Loads a checkpoint. When `grid` is non-null the fields are bound onto it
/// (so the state can resume against an existing solver) after a structural
/// match check; otherwise the grid stored in the file is used.
SimState read_checkpoint(const std::filesystem::path& path,
                         const GridPtr& grid = nullptr);

}  // namespace mlab
