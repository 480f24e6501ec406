// mlab — scenario runner and diagnostic checks for density-suppressed
// motility simulations.
//
// Exit codes: 0 success, 1 diagnostic failure (failing check names on
// stderr), 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlab/config.hpp"
#include "mlab/diagnostics.hpp"
#include "mlab/errors.hpp"
#include "mlab/field_io.hpp"
#include "mlab/harness.hpp"
#include "mlab/motility.hpp"

namespace {

namespace fs = std::filesystem;
using mlab::config::Value;

struct CommonOpts {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    bool quiet = false;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_out) {
    cmd->add_option("--config", opts.config, "scenario file")->required();
    cmd->add_option("--set", opts.sets,
                    "override a config entry, e.g. --set stepper.dt=0.005");
    if (needs_out)
        cmd->add_option("--out", opts.out, "output directory for run artifacts");
    cmd->add_flag("--quiet", opts.quiet, "suppress normal output");
    cmd->add_flag("--verbose", opts.verbose, "print extra progress detail");
}

Value load_table(const CommonOpts& opts,
                 const std::vector<std::string>& forced = {}) {
    Value root = mlab::config::parse_file(opts.config);
    for (const auto& s : opts.sets) mlab::config::apply_override(root, s);
    for (const auto& s : forced) mlab::config::apply_override(root, s);
    return root;
}

fs::path resolve_out(const mlab::ScenarioConfig& cfg, const CommonOpts& opts) {
    if (!opts.out.empty()) return opts.out;
    if (!cfg.directory.empty()) return cfg.directory;
    return fs::path("out") / fs::path(opts.config).stem();
}

int finish_experiment(const mlab::ExperimentResult& res, const CommonOpts& opts,
                      const fs::path& dir) {
    if (!opts.quiet) {
        if (res.single) {
            std::cout << res.single->report.summary();
            std::cout << "halt = " << mlab::to_string(res.single->halt)
                      << ", t_final = "
                      << mlab::format_double(res.single->state.t) << "\n";
            if (res.single->refined)
                std::cout << "refinement rerun "
                          << (res.single->refined_passed ? "passed" : "failed")
                          << "\n";
        } else {
            std::cout << "param        class       sup          halt\n";
            for (const auto& e : res.entries) {
                std::ostringstream line;
                line << mlab::format_double(e.param);
                std::cout << line.str() << std::string(13 - std::min<std::size_t>(12, line.str().size()), ' ')
                          << e.classification << "  sup=" << mlab::format_double(e.sup_stat)
                          << "  halt=" << mlab::to_string(e.halt) << "\n";
            }
            if (res.bracket)
                std::cout << "dichotomy bracket: ("
                          << mlab::format_double(res.bracket->first) << ", "
                          << mlab::format_double(res.bracket->second) << ")\n";
            for (std::size_t i = 0; i < res.rates.size(); ++i)
                std::cout << "rate[" << i << "] = "
                          << mlab::format_double(res.rates[i]) << "\n";
        }
        std::cout << "artifacts in " << dir.string() << "\n";
    }
    if (res.passed) return 0;
    if (res.single) {
        for (const auto& name : res.single->report.failing_checks())
            std::cerr << "FAILED: " << name << "\n";
    } else {
        for (const auto& e : res.entries) {
            if (e.passed && e.error.empty()) continue;
            std::cerr << "FAILED: entry " << mlab::format_double(e.param);
            if (!e.error.empty()) std::cerr << " (" << e.error << ")";
            std::cerr << "\n";
        }
    }
    return 1;
}

int run_like(const CommonOpts& opts, const std::vector<std::string>& forced) {
    const Value root = load_table(opts, forced);
    const mlab::ScenarioConfig cfg = mlab::ScenarioConfig::from_table(root);
    const fs::path dir = resolve_out(cfg, opts);
    if (opts.verbose && !opts.quiet)
        std::cout << "running into " << dir.string() << " with "
                  << mlab::worker_count(16) << " worker(s)\n";
    const mlab::ExperimentResult res = mlab::run_experiment(cfg, dir);
    return finish_experiment(res, opts, dir);
}

int check_cmd(const CommonOpts& opts) {
    const Value root = load_table(opts);
    const mlab::ScenarioConfig cfg = mlab::ScenarioConfig::from_table(root);

    const mlab::GridPtr grid = mlab::build_grid(cfg.grid);
    const mlab::HelmholtzSolver solver(grid);
    const mlab::ScalarField u0 = mlab::build_initial(cfg.initial, grid, cfg.seed);
    const double mass0 = mlab::integrate(u0);
    const double vstar = solver.green_min() * mass0;
    double a = 0.5 * vstar;
    if (cfg.gamma_a) {
        if (!(*cfg.gamma_a < vstar))
            throw mlab::ConfigError("gamma.a must stay below the signal floor " +
                                    mlab::format_double(vstar));
        a = *cfg.gamma_a;
    }
    const mlab::Motility m(cfg.family, a, cfg.declared_k, cfg.declared_l);
    const mlab::AssumptionReport rep = mlab::check_assumptions(m);

    if (!opts.quiet) {
        std::cout << "scenario ok: " << opts.config << "\n";
        std::cout << "cells = " << grid->cell_count()
                  << ", dim = " << grid->space_dim()
                  << ", |domain| = " << mlab::format_double(grid->total_measure())
                  << "\n";
        std::cout << "mass = " << mlab::format_double(mass0)
                  << ", signal floor = " << mlab::format_double(vstar)
                  << ", a = " << mlab::format_double(a) << "\n";
        std::cout << "gamma family = " << m.family_name() << ", monotone = "
                  << (m.monotone() ? "yes" : "no") << "\n";
        std::cout << "A0 (finite K_s):        " << (rep.a0_holds ? "holds" : "FAILS")
                  << "\n";
        std::cout << "A1 (non-increasing):    " << (rep.a1_holds ? "holds" : "FAILS")
                  << "\n";
        std::cout << "A2 (tail exponents):    "
                  << (rep.a2_holds ? "holds" : "not established") << "\n";
        if (!rep.notes.empty()) std::cout << "notes: " << rep.notes << "\n";
        if (opts.verbose) {
            std::cout << "s -> K_s table:\n";
            for (const auto& [s, ks] : rep.k_table)
                std::cout << "  " << mlab::format_double(s) << " -> "
                          << mlab::format_double(ks) << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"density-suppressed motility lab"};
    app.set_version_flag("--version", "0.1.0");
    app.require_subcommand(1);

    CommonOpts run_opts, check_opts, kw_opts, mw_opts, cv_opts;
    std::vector<double> k_values, mass_values;
    double chi = 0.0;
    int levels = 0;

    CLI::App* run = app.add_subcommand("run", "run the experiment in a scenario file");
    add_common(run, run_opts, true);

    CLI::App* check =
        app.add_subcommand("check", "validate a scenario and report the standing assumptions");
    add_common(check, check_opts, false);

    CLI::App* sweepk = app.add_subcommand("sweep-k", "force a tail-exponent sweep");
    add_common(sweepk, kw_opts, true);
    sweepk->add_option("--k", k_values, "exponents to sweep (overrides k_list)");

    CLI::App* sweepm = app.add_subcommand("sweep-mass", "force a total-mass sweep");
    add_common(sweepm, mw_opts, true);
    sweepm->add_option("--mass", mass_values, "masses to sweep (overrides mass_list)");
    sweepm->add_option("--chi", chi, "exponential decay rate");

    CLI::App* conv = app.add_subcommand("converge", "grid refinement study");
    add_common(conv, cv_opts, true);
    conv->add_option("--levels", levels, "number of resolutions");

    // moser takes direct parameters, no scenario file.
    mlab::MoserParams mp;
    int terms = 60;
    bool moser_quiet = false;
    CLI::App* moser =
        app.add_subcommand("moser", "probe the bootstrap recurrence for boundedness");
    moser->add_option("--rho", mp.rho, "exponent growth ratio (> 1)")->required();
    moser->add_option("--c", mp.c, "exponent increment");
    moser->add_option("--delta0", mp.delta0, "starting exponent");
    moser->add_option("--b", mp.b, "polynomial prefactor power");
    moser->add_option("--C0", mp.big_c0, "recurrence constant (>= 1)");
    moser->add_option("--C1", mp.big_c1, "seed constant (>= 1)");
    moser->add_option("--J", terms, "terms to iterate");
    moser->add_flag("--quiet", moser_quiet, "suppress normal output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return run_like(run_opts, {});
        if (check->parsed()) return check_cmd(check_opts);
        if (sweepk->parsed()) {
            std::vector<std::string> forced = {"experiment.kind=k_sweep"};
            if (!k_values.empty()) {
                std::string list = "experiment.k_list=[";
                for (std::size_t i = 0; i < k_values.size(); ++i)
                    list += (i ? ", " : "") + mlab::format_double(k_values[i]);
                forced.push_back(list + "]");
            }
            return run_like(kw_opts, forced);
        }
        if (sweepm->parsed()) {
            std::vector<std::string> forced = {"experiment.kind=mass_sweep"};
            if (!mass_values.empty()) {
                std::string list = "experiment.mass_list=[";
                for (std::size_t i = 0; i < mass_values.size(); ++i)
                    list += (i ? ", " : "") + mlab::format_double(mass_values[i]);
                forced.push_back(list + "]");
            }
            if (chi > 0.0)
                forced.push_back("experiment.chi=" + mlab::format_double(chi));
            return run_like(mw_opts, forced);
        }
        if (conv->parsed()) {
            std::vector<std::string> forced = {"experiment.kind=convergence"};
            if (levels > 0)
                forced.push_back("experiment.levels=" + std::to_string(levels));
            return run_like(cv_opts, forced);
        }
        if (moser->parsed()) {
            const mlab::MoserResult res = mlab::moser_lemma_check(mp, terms);
            if (!moser_quiet) {
                std::cout << "bounded = " << (res.bounded ? "true" : "false") << "\n";
                std::cout << "bound = " << mlab::format_double(res.bound) << "\n";
                const std::size_t n = res.eta_root.size();
                for (std::size_t j = n > 3 ? n - 3 : 0; j < n; ++j)
                    std::cout << "eta_root[" << j
                              << "] = " << mlab::format_double(res.eta_root[j])
                              << " (delta = " << mlab::format_double(res.delta[j])
                              << ")\n";
            }
            return 0;
        }
    } catch (const mlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
