#pragma once

#include <optional>
#include <vector>

#include "mlab/report.hpp"
#include "mlab/stepper.hpp"

namespace mlab {

/// phi = (I - Lap)^{-1}[u gamma(v)] at one time slice. Non-negative with
/// integral equal to that of u gamma(v).
ScalarField nonlocal_source(const SimState& s, const Motility& m,
                            const HelmholtzSolver& h);

/// Sup-norm residual of the identity dv/dt + u gamma(v) = phi across one
/// step, with the product u gamma(v) evaluated as the average of its two
/// endpoint values (midpoint evaluation removes the O(1) endpoint bias;
/// what remains is O(dt) + O(dx^2)).
double key_identity_residual(const SimState& prev, const SimState& next,
                             const Motility& m, const HelmholtzSolver& h);

/// Residual of the same identity with the product frozen at gamma(v_prev)
/// applied to u_next, which is what the implicit step actually transports.
/// Exact up to solver tolerance; with via_apply the inverse is verified
/// through the forward operator instead of a second solve.
double scheme_identity_residual(const SimState& prev, const SimState& next,
                                const Motility& m, const HelmholtzSolver& h,
                                bool via_apply = false);

/// Pointwise check phi <= Gamma(v) + a gamma(a) + tol and phi >= -tol,
/// tol = 1e-8 + 0.01 a gamma(a). Requires a non-increasing motility;
/// returns NotApplicable otherwise.
CheckVerdict gamma_bound_check(const SimState& s, const Motility& m,
                               const HelmholtzSolver& h);

/// Residual of the alternate representation
///   phi = Gamma(v) + (I - Lap)^{-1}[v gamma(v) + gamma'(v)|grad v|^2 - Gamma(v)]
/// for v = solve(u), measured in the sup norm. Second-order small on
/// smooth slices since the chain rule holds only up to O(dx^2) discretely.
double reformulation_residual(const ScalarField& u, const Motility& m,
                              const HelmholtzSolver& h);

// Exponent ladder p_{j+1} = ((N+2)/N) p_j - k from p_0 = kN/2 + 2(N-1)/(N-2);
// defined for N >= 3.
std::vector<double> ladder_exponents(int space_dim, double k, int rungs);

struct LadderRung {
    double p = 0.0;
    double sup_norm = 0.0;  // sup over the trajectory of ||v||_p
};

struct LadderTable {
    std::vector<LadderRung> rungs;
    /// sup_t ||v||_{p_j} non-increasing in j within 5% + 1e-8 slack; the
    /// signature of a uniformly bounded trajectory.
    bool non_increasing = false;
};

/// Reads the ladder columns recorded along a run (RecorderConfig::ladder).
LadderTable lp_ladder(const DiagnosticsReport& rep, int space_dim, double k);

struct MoserParams {
    double rho = 2.0;  // > 1
    double b = 0.0;    // >= 0
    double c = 0.0;
    double big_c0 = 1.0;  // >= 1
    double big_c1 = 1.0;  // >= 1
    double delta0 = 1.0;  // delta0 + c/(rho - 1) > 0

    void validate() const;
};

struct MoserResult {
    bool bounded = false;
    double bound = 0.0;  // max_j eta_j^(1/delta_j)
    std::vector<double> delta;
    std::vector<double> eta_root;  // eta_j^(1/delta_j)
};

/// Drives the worst case of the iteration eta_{j+1} = C0 delta_{j+1}^b
/// max{C1^{delta_{j+1}}, eta_j^rho} with delta_{j+1} = rho delta_j + c,
/// eta_0 = C1^{delta_0}, carried in log space so no intermediate
/// overflows. "Bounded" means the running max of eta_j^{1/delta_j} moved
/// by less than 1e-9 (relative) over the last 10 of the J terms.
MoserResult moser_lemma_check(const MoserParams& p, int terms = 60);

struct StabilizationFit {
    enum class Outcome { Fitted, NoDecay, AtEquilibrium };
    Outcome outcome = Outcome::NoDecay;
    double rate = 0.0;          // decay exponent of ||u - mean||_inf
    double fit_residual = 0.0;  // RMS deviation of the log-linear fit
    std::size_t samples_used = 0;
};

/// Log-linear fit of ||u(t) - mean||_inf over the final decade of decay.
StabilizationFit stabilization_rate(const DiagnosticsReport& rep);

CheckVerdict gronwall_envelope_check(const DiagnosticsReport& rep, const Motility& m,
                                     double tol = 0.05);

CheckVerdict lower_bound_check(const DiagnosticsReport& rep, const HelmholtzSolver& h);

/// Builds the scalar time series for a run and, at the end, the verdict
/// table. One instance per run; not thread-safe.
class DiagnosticsRecorder {
public:
    DiagnosticsRecorder(const RecorderConfig& cfg, const Motility& m,
                        const HelmholtzSolver& h);

    void record_initial(const SimState& s0);
    void sample(const SimState& prev, const SimState& next);

    /// Scans the series, attaches verdicts, and returns the report.
    DiagnosticsReport finalize();

private:
    void push_row(const SimState& s, double key_res);

    RecorderConfig cfg_;
    const Motility* m_;
    const HelmholtzSolver* h_;
    std::optional<ScalarField> v_in_;
    std::vector<double> ladder_p_;
    double mass0_ = 0.0;
    bool has_rows_ = false;
    DiagnosticsReport rep_;
};

}  // namespace mlab
