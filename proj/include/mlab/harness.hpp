#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlab/config.hpp"
#include "mlab/diagnostics.hpp"
#include "mlab/stepper.hpp"

namespace mlab {

/// Initial density profiles reachable from scenario files.
struct InitialData {
    enum class Kind { Constant, Gaussian, Random, Annulus };
    Kind kind = Kind::Constant;

    double c = 1.0;          // constant level
    double mass = 0.0;       // target mass for gaussian/annulus bumps
    double width = 0.1;      // bump width
    double radius = 0.5;     // annulus center radius
    double mean = 1.0;       // random: mean level
    double amplitude = 0.5;  // random: relative amplitude, in [0, 1)
    std::optional<double> center_x;  // bump center; defaults to the domain center
    std::optional<double> center_y;
};

/// Deterministic initial field; the same seed yields the same bytes on
/// every platform.
ScalarField build_initial(const InitialData& data, const GridPtr& grid,
                          std::uint64_t seed);

/// A fully validated scenario. Unknown sections, unknown keys, type
/// mismatches and out-of-range values all throw ConfigError with the
/// offending path in the message.
struct ScenarioConfig {
    GridSpec grid;

    MotilityFamily family = PowerLaw{1.0};
    std::optional<double> gamma_a;  // lower integration limit override
    std::optional<double> declared_k;
    std::optional<double> declared_l;

    InitialData initial;
    StepperConfig stepper;
    std::uint64_t seed = 1;

    double envelope_tol = 0.05;
    bool confirm_with_refinement = false;
    std::optional<bool> ladder;  // default: on for dim >= 3 with a known tail exponent
    int ladder_rungs = 8;
    bool trend = true;

    enum class Experiment { Single, KSweep, MassSweep, Convergence };
    Experiment experiment = Experiment::Single;
    std::vector<double> k_list;
    std::vector<double> mass_list;
    double chi = 1.0;  // mass sweep motility decay rate
    int levels = 3;    // convergence resolutions

    std::vector<double> snapshot_times;
    std::string directory;  // default output directory

    config::Value raw;  // the table this scenario was built from

    static ScenarioConfig from_table(const config::Value& root);
    static ScenarioConfig from_file(const std::filesystem::path& path);
};

struct RunArtifacts {
    SimState state;
    DiagnosticsReport report;
    HaltReason halt = HaltReason::Completed;
    bool passed = false;          // asserted verdicts, after any refinement rerun
    bool refined = false;         // a confirmation rerun happened
    bool refined_passed = false;  // its verdicts
    std::filesystem::path dir;
};

/// Runs one scenario and writes manifest.txt, trajectory.csv, report.txt,
/// state.checkpoint and any requested snapshots into out_dir. When the
/// scenario enables confirm_with_refinement and an asserted check fails,
/// the run is repeated once at doubled resolution and halved dt in
/// out_dir/refined; only a failure that survives refinement counts.
RunArtifacts run_scenario(const ScenarioConfig& cfg,
                          const std::filesystem::path& out_dir);

struct SweepEntryResult {
    double param = 0.0;  // k, mass, or cell count
    std::string classification;
    double sup_stat = 0.0;  // sup over the trajectory of the classified series
    HaltReason halt = HaltReason::Completed;
    double t_final = 0.0;
    bool passed = false;
    std::string error;  // non-empty if this entry threw
};

struct ExperimentResult {
    std::vector<SweepEntryResult> entries;
    std::optional<std::pair<double, double>> bracket;  // mass sweep dichotomy
    std::optional<RunArtifacts> single;
    std::vector<double> errors;  // convergence: per-level error vs finest
    std::vector<double> rates;   // log2 ratios of consecutive errors
    bool passed = false;
};

/// Dispatches on the experiment kind. Sweep entries run in parallel
/// (bounded by MLAB_THREADS) and are reported in input order; a throwing
/// entry is recorded, not fatal.
ExperimentResult run_experiment(const ScenarioConfig& cfg,
                                const std::filesystem::path& out_dir);

/// Trajectory classification used by the sweeps: "plateau" when the
/// last-quarter sup is within 2% of the preceding quarter, "growing" when
/// every quarter tops the previous one by more than 20% (or the growth
/// detector fired), else "undecided".
std::string classify_trajectory(const std::vector<double>& sup_series,
                                bool detector_fired);

/// Volume-weighted block average onto a coarser nested grid (integer
/// refinement ratio per axis).
ScalarField restrict_field(const ScalarField& fine, const GridPtr& coarse);

/// Worker count for sweeps: min(entries, hardware, MLAB_THREADS).
unsigned worker_count(std::size_t entries);

/// Built-in scenario texts (name, config) used by the acceptance suite;
/// the same files ship under scenarios/.
std::vector<std::pair<std::string, std::string>> standard_scenarios();

}  // namespace mlab
