#include "mlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

constexpr double kGammaFloor = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ScalarField gamma_of(const ScalarField& v, const Motility& m) {
    ScalarField g(v.grid(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
        g[i] = m.gamma(std::max(v[i], kGammaFloor));
    return g;
}

ScalarField density_flux_product(const SimState& s, const Motility& m) {
    ScalarField w = gamma_of(s.v, m);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= s.u[i];
    return w;
}

struct BoundScan {
    double margin;
    double phi_min_norm;
    double phi_mass_err;
};

/// Margin of phi <= Gamma(v) + a gamma(a) + tol, min over cells.
double bound_margin(const ScalarField& phi, const ScalarField& v, const Motility& m,
                    double tol) {
    const double a = m.lower_limit();
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < a) {
            margin = std::min(margin, v[i] - a);
            continue;
        }
        const double cap = m.big_gamma(v[i]) + a * m.gamma(a) + tol;
        margin = std::min(margin, cap - phi[i]);
    }
    return margin;
}

double fit_time(const std::vector<double>& t, const std::vector<double>& y,
                std::size_t lo, std::size_t hi, double* slope, double* intercept) {
    const double n = static_cast<double>(hi - lo);
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
    }
    const double det = n * stt - st * st;
    if (det == 0.0) {
        *slope = 0.0;
        *intercept = sy / n;
    } else {
        *slope = (n * sty - st * sy) / det;
        *intercept = (sy - *slope * st) / n;
    }
    double rss = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double r = y[i] - (*intercept + *slope * t[i]);
        rss += r * r;
    }
    return std::sqrt(rss / n);
}

}  // namespace

ScalarField nonlocal_source(const SimState& s, const Motility& m,
                            const HelmholtzSolver& h) {
    return h.solve(density_flux_product(s, m));
}

double key_identity_residual(const SimState& prev, const SimState& next,
                             const Motility& m, const HelmholtzSolver& h) {
    require_same_grid(prev.u, next.u);
    if (!(next.t > prev.t))
        throw std::invalid_argument("key identity needs states in increasing time order");
    const double dt = next.t - prev.t;
    ScalarField wm = density_flux_product(prev, m);
    {
        const ScalarField wn = density_flux_product(next, m);
        for (std::size_t i = 0; i < wm.size(); ++i) wm[i] = 0.5 * (wm[i] + wn[i]);
    }
    const ScalarField phi = h.solve(wm);
    double res = 0.0;
    for (std::size_t i = 0; i < wm.size(); ++i) {
        const double r = (next.v[i] - prev.v[i]) / dt + wm[i] - phi[i];
        res = std::max(res, std::abs(r));
    }
    return res;
}

double scheme_identity_residual(const SimState& prev, const SimState& next,
                                const Motility& m, const HelmholtzSolver& h,
                                bool via_apply) {
    require_same_grid(prev.u, next.u);
    if (!(next.t > prev.t))
        throw std::invalid_argument("states must be in increasing time order");
    const double dt = next.t - prev.t;
    ScalarField w = gamma_of(prev.v, m);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= next.u[i];
    ScalarField d(prev.u.grid(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (next.v[i] - prev.v[i]) / dt;

    double res = 0.0;
    if (via_apply) {
        ScalarField dw(d.grid(), 0.0);
        for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = d[i] + w[i];
        const ScalarField adw = h.apply(dw);
        for (std::size_t i = 0; i < w.size(); ++i)
            res = std::max(res, std::abs(adw[i] - w[i]));
    } else {
        const ScalarField phi = h.solve(w);
        for (std::size_t i = 0; i < w.size(); ++i)
            res = std::max(res, std::abs(d[i] + w[i] - phi[i]));
    }
    return res;
}

CheckVerdict gamma_bound_check(const SimState& s, const Motility& m,
                               const HelmholtzSolver& h) {
    CheckVerdict v;
    v.worst_time = s.t;
    if (!m.monotone()) {
        v.status = CheckVerdict::Status::NotApplicable;
        v.detail = "requires a non-increasing motility";
        return v;
    }
    const ScalarField phi = nonlocal_source(s, m, h);
    const double a = m.lower_limit();
    const double tol = 1e-8 + 0.01 * a * m.gamma(a);
    double margin = bound_margin(phi, s.v, m, tol);
    margin = std::min(margin, phi.min() + tol);
    v.worst_margin = margin;
    v.status = margin >= 0.0 ? CheckVerdict::Status::Pass : CheckVerdict::Status::Fail;
    std::ostringstream os;
    os << "tol=" << tol << " a=" << a;
    v.detail = os.str();
    return v;
}

double reformulation_residual(const ScalarField& u, const Motility& m,
                              const HelmholtzSolver& h) {
    const ScalarField v = h.solve(u);
    if (v.min() < m.lower_limit())
        throw std::invalid_argument(
            "reformulation residual needs min v >= the motility lower limit");
    const ScalarField g2 = gradient_squared(v);
    ScalarField big(v.grid(), 0.0);
    ScalarField f(v.grid(), 0.0);
    ScalarField w(v.grid(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double g = m.gamma(v[i]);
        big[i] = m.big_gamma(v[i]);
        f[i] = v[i] * g + m.gamma_prime(v[i]) * g2[i] - big[i];
        w[i] = u[i] * g;
    }
    const ScalarField phi = h.solve(w);
    const ScalarField corr = h.solve(f);
    double res = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        res = std::max(res, std::abs(phi[i] - big[i] - corr[i]));
    return res;
}

std::vector<double> ladder_exponents(int space_dim, double k, int rungs) {
    if (space_dim <= 2)
        throw std::domain_error("the exponent ladder is defined for dimension >= 3");
    if (!(k >= 0.0)) throw std::invalid_argument("ladder needs k >= 0");
    if (rungs < 1) throw std::invalid_argument("ladder needs at least one rung");
    const double n = static_cast<double>(space_dim);
    std::vector<double> p(static_cast<std::size_t>(rungs));
    p[0] = k * n / 2.0 + 2.0 * (n - 1.0) / (n - 2.0);
    for (std::size_t j = 1; j < p.size(); ++j)
        p[j] = (n + 2.0) / n * p[j - 1] - k;
    return p;
}

LadderTable lp_ladder(const DiagnosticsReport& rep, int space_dim, double k) {
    int rungs = 0;
    while (true) {
        const std::string name = "v_p" + std::to_string(rungs);
        if (std::find(rep.columns.begin(), rep.columns.end(), name) == rep.columns.end())
            break;
        ++rungs;
    }
    if (rungs == 0)
        throw std::invalid_argument("report has no ladder columns; enable ladder recording");
    const std::vector<double> p = ladder_exponents(space_dim, k, rungs);

    LadderTable table;
    table.rungs.resize(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        const auto col = rep.column("v_p" + std::to_string(j));
        double sup = 0.0;
        for (double x : col)
            if (!std::isnan(x)) sup = std::max(sup, x);
        table.rungs[j] = {p[j], sup};
    }
    table.non_increasing = true;
    for (std::size_t j = 0; j + 1 < table.rungs.size(); ++j)
        if (table.rungs[j + 1].sup_norm > 1.05 * table.rungs[j].sup_norm + 1e-8)
            table.non_increasing = false;
    return table;
}

void MoserParams::validate() const {
    if (!(rho > 1.0)) throw std::invalid_argument("moser: rho must exceed 1");
    if (!(b >= 0.0)) throw std::invalid_argument("moser: b must be non-negative");
    if (!(big_c0 >= 1.0) || !(big_c1 >= 1.0))
        throw std::invalid_argument("moser: C0 and C1 must be at least 1");
    if (!(delta0 + c / (rho - 1.0) > 0.0))
        throw std::invalid_argument("moser: needs delta0 + c/(rho-1) > 0");
}

MoserResult moser_lemma_check(const MoserParams& p, int terms) {
    p.validate();
    if (terms < 12) throw std::invalid_argument("moser: needs at least 12 terms");

    MoserResult r;
    const auto n = static_cast<std::size_t>(terms);
    r.delta.resize(n + 1);
    r.eta_root.resize(n + 1);
    std::vector<double> log_eta(n + 1), running(n + 1);

    r.delta[0] = p.delta0;
    log_eta[0] = p.delta0 * std::log(p.big_c1);
    for (std::size_t j = 0; j < n; ++j) {
        r.delta[j + 1] = p.rho * r.delta[j] + p.c;
        if (p.b > 0.0 && r.delta[j + 1] <= 0.0)
            throw std::invalid_argument(
                "moser: b > 0 needs positive exponents along the whole recurrence");
        const double grow = p.b > 0.0 ? p.b * std::log(r.delta[j + 1]) : 0.0;
        log_eta[j + 1] = std::log(p.big_c0) + grow +
                         std::max(r.delta[j + 1] * std::log(p.big_c1),
                                  p.rho * log_eta[j]);
    }

    double max_y = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= n; ++j) {
        const double y = r.delta[j] != 0.0 ? log_eta[j] / r.delta[j]
                                           : -std::numeric_limits<double>::infinity();
        r.eta_root[j] = std::exp(y);
        max_y = std::max(max_y, y);
        running[j] = max_y;
    }
    r.bound = std::exp(max_y);
    const double scale = std::max(std::abs(running[n]), 1.0);
    r.bounded = running[n] - running[n - 10] < 1e-9 * scale;
    return r;
}

StabilizationFit stabilization_rate(const DiagnosticsReport& rep) {
    StabilizationFit fit;
    const auto t = rep.column("t");
    const auto dev = rep.column("stab_dev");
    if (t.size() < 4) return fit;

    double mean_scale = 1.0;
    if (auto it = std::find(rep.columns.begin(), rep.columns.end(), std::string("mass"));
        it != rep.columns.end()) {
        mean_scale = std::max(std::abs(rep.rows.front()[static_cast<std::size_t>(
                                  it - rep.columns.begin())]),
                              1e-30);
    }

    double dev_max = 0.0;
    for (double d : dev) dev_max = std::max(dev_max, d);
    // Deviations below roughly 1e-12 of the solution scale are dominated by
    // rounding noise from the linear solves; fitting into that plateau would
    // produce a meaningless slope, so the window stops above it.
    const double floor = std::max(1e-12 * dev_max, 1e-12 * mean_scale);
    if (dev_max <= floor || dev_max == 0.0) {
        fit.outcome = StabilizationFit::Outcome::AtEquilibrium;
        return fit;
    }

    std::size_t last = dev.size();
    while (last > 0 && dev[last - 1] <= floor) --last;
    if (last == 0) {
        fit.outcome = StabilizationFit::Outcome::AtEquilibrium;
        return fit;
    }
    const double final_dev = dev[last - 1];
    if (final_dev >= 0.5 * dev_max) return fit;  // NoDecay

    auto window = [&](double span) {
        std::size_t lo = last;
        while (lo > 0 && dev[lo - 1] <= span * final_dev && dev[lo - 1] > 0.0) --lo;
        return lo;
    };
    std::size_t lo = window(10.0);
    if (last - lo < 5) lo = window(100.0);
    if (last - lo < 3) return fit;

    std::vector<double> logdev(dev.size());
    for (std::size_t i = lo; i < last; ++i) logdev[i] = std::log(dev[i]);
    double slope = 0.0, intercept = 0.0;
    fit.fit_residual = fit_time(t, logdev, lo, last, &slope, &intercept);
    fit.rate = -slope;
    fit.samples_used = last - lo;
    fit.outcome = StabilizationFit::Outcome::Fitted;
    return fit;
}

CheckVerdict gronwall_envelope_check(const DiagnosticsReport& rep, const Motility& m,
                                     double tol) {
    CheckVerdict v;
    v.status = CheckVerdict::Status::Pass;
    if (rep.rows.empty()) {
        v.status = CheckVerdict::Status::NotApplicable;
        v.detail = "no samples";
        return v;
    }
    const auto t = rep.column("t");
    const auto vmin = rep.column("v_min");
    const auto ratio = rep.column("v_ratio_max");

    double vlow = std::numeric_limits<double>::infinity();
    for (double x : vmin) vlow = std::min(vlow, x);
    if (!(vlow > 0.0)) {
        v.status = CheckVerdict::Status::Fail;
        v.worst_margin = vlow;
        v.detail = "v is not positive along the trajectory";
        return v;
    }
    const double k_star = m.tail_envelope(vlow);

    double worst = std::numeric_limits<double>::infinity();
    double worst_t = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double margin = (1.0 + tol) - ratio[i] * std::exp(-k_star * t[i]);
        if (margin < worst) {
            worst = margin;
            worst_t = t[i];
        }
    }
    v.worst_margin = worst;
    v.worst_time = worst_t;
    v.status = worst >= 0.0 ? CheckVerdict::Status::Pass : CheckVerdict::Status::Fail;
    std::ostringstream os;
    os << "K*=" << k_star << " at min v=" << vlow << ", slack " << tol;
    v.detail = os.str();
    return v;
}

CheckVerdict lower_bound_check(const DiagnosticsReport& rep, const HelmholtzSolver& h) {
    CheckVerdict v;
    if (rep.rows.empty()) {
        v.status = CheckVerdict::Status::NotApplicable;
        v.detail = "no samples";
        return v;
    }
    const auto t = rep.column("t");
    const auto vmin = rep.column("v_min");
    const auto mass = rep.column("mass");
    const double bound = h.green_min() * mass.front() - 1e-10;

    double worst = std::numeric_limits<double>::infinity();
    double worst_t = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double margin = vmin[i] - bound;
        if (margin < worst) {
            worst = margin;
            worst_t = t[i];
        }
    }
    v.worst_margin = worst;
    v.worst_time = worst_t;
    v.status = worst >= 0.0 ? CheckVerdict::Status::Pass : CheckVerdict::Status::Fail;
    std::ostringstream os;
    os << "green_min*mass = " << bound + 1e-10;
    v.detail = os.str();
    return v;
}

DiagnosticsRecorder::DiagnosticsRecorder(const RecorderConfig& cfg, const Motility& m,
                                         const HelmholtzSolver& h)
    : cfg_(cfg), m_(&m), h_(&h) {
    rep_.columns = {"t",     "mass",  "u_min",       "u_max",       "v_min",
                    "v_max", "v_l2",  "grad_v_max",  "v_ratio_max", "phi_min_norm",
                    "phi_mass_err",   "key_res",     "stab_dev"};
    if (m.monotone()) rep_.columns.push_back("gamma_margin");
    if (cfg_.ladder) {
        ladder_p_ = ladder_exponents(h.grid()->space_dim(), cfg_.ladder_k,
                                     cfg_.ladder_rungs);
        for (std::size_t j = 0; j < ladder_p_.size(); ++j)
            rep_.columns.push_back("v_p" + std::to_string(j));
    }
    if (cfg_.trend && m.monotone()) {
        rep_.columns.push_back("moment_hi");
        rep_.columns.push_back("moment_lo");
        rep_.columns.push_back("trend_rhs");
    }
}

void DiagnosticsRecorder::push_row(const SimState& s, double key_res) {
    std::vector<double> row;
    row.reserve(rep_.columns.size());

    const ScalarField phi = nonlocal_source(s, *m_, *h_);
    const ScalarField w = density_flux_product(s, *m_);
    const double phi_total = integrate(phi);
    const double w_total = integrate(w);
    const double mass = integrate(s.u);
    const double mean = mass0_ / s.u.grid()->total_measure();

    double ratio = 0.0;
    for (std::size_t i = 0; i < s.v.size(); ++i)
        ratio = std::max(ratio, s.v[i] / (*v_in_)[i]);
    double stab = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i)
        stab = std::max(stab, std::abs(s.u[i] - mean));

    row.push_back(s.t);
    row.push_back(mass);
    row.push_back(s.u.min());
    row.push_back(s.u.max());
    row.push_back(s.v.min());
    row.push_back(s.v.max());
    row.push_back(lp_norm(s.v, 2.0));
    row.push_back(max_face_gradient(s.v));
    row.push_back(ratio);
    row.push_back(phi.min() / (1.0 + phi.max()));
    row.push_back(std::abs(phi_total - w_total) / std::max(std::abs(w_total), 1e-300));
    row.push_back(key_res);
    row.push_back(stab);

    if (m_->monotone()) {
        const double a = m_->lower_limit();
        const double tol = cfg_.bound_abs_tol + 0.01 * a * m_->gamma(a);
        row.push_back(bound_margin(phi, s.v, *m_, tol));
    }
    for (double p : ladder_p_) row.push_back(lp_norm(s.v, p));
    if (cfg_.trend && m_->monotone()) {
        const double a = m_->lower_limit();
        const double k = m_->declared_k().value_or(1.0);
        const double q = std::max(3.0 - k, 1.0);
        ScalarField hi(s.v.grid(), 0.0), lo(s.v.grid(), 0.0), rhs(s.v.grid(), 0.0);
        for (std::size_t i = 0; i < s.v.size(); ++i) {
            const double vv = s.v[i];
            hi[i] = vv * vv * vv;
            lo[i] = std::pow(vv, q);
            const double big = m_->big_gamma(std::max(vv, a));
            rhs[i] = vv * vv * (big + 1.0);
        }
        row.push_back(integrate(hi));
        row.push_back(integrate(lo));
        row.push_back(integrate(rhs));
    }
    rep_.rows.push_back(std::move(row));
}

void DiagnosticsRecorder::record_initial(const SimState& s0) {
    v_in_ = s0.v;
    mass0_ = integrate(s0.u);
    has_rows_ = true;
    push_row(s0, kNaN);
}

void DiagnosticsRecorder::sample(const SimState& prev, const SimState& next) {
    if (!has_rows_) record_initial(prev);
    push_row(next, key_identity_residual(prev, next, *m_, *h_));
}

DiagnosticsReport DiagnosticsRecorder::finalize() {
    if (rep_.rows.empty()) {
        CheckVerdict v;
        v.status = CheckVerdict::Status::NotApplicable;
        v.detail = "no samples";
        for (const char* name : {"mass_conservation", "positivity", "lower_bound",
                                 "gronwall_envelope", "gamma_bound", "nonlocal_source"})
            rep_.verdicts[name] = v;
        return std::move(rep_);
    }

    const auto t = rep_.column("t");
    auto scan_min = [&](const std::string& col, double* at) {
        const auto c = rep_.column(col);
        double best = std::numeric_limits<double>::infinity();
        *at = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i)
            if (!std::isnan(c[i]) && c[i] < best) {
                best = c[i];
                *at = t[i];
            }
        return best;
    };
    auto scan_max = [&](const std::string& col, double* at) {
        const auto c = rep_.column(col);
        double best = -std::numeric_limits<double>::infinity();
        *at = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i)
            if (!std::isnan(c[i]) && c[i] > best) {
                best = c[i];
                *at = t[i];
            }
        return best;
    };

    {
        CheckVerdict v;
        const auto mass = rep_.column("mass");
        double worst = 0.0;
        v.worst_time = t.front();
        for (std::size_t i = 0; i < mass.size(); ++i) {
            const double rel = std::abs(mass[i] - mass0_) / mass0_;
            if (rel > worst) {
                worst = rel;
                v.worst_time = t[i];
            }
        }
        v.worst_margin = cfg_.mass_rel_tol - worst;
        v.status = v.worst_margin >= 0.0 ? CheckVerdict::Status::Pass
                                         : CheckVerdict::Status::Fail;
        std::ostringstream os;
        os << "worst relative drift " << worst;
        v.detail = os.str();
        rep_.verdicts["mass_conservation"] = v;
    }
    {
        CheckVerdict v;
        v.worst_margin = scan_min("u_min", &v.worst_time);
        v.status = v.worst_margin >= 0.0 ? CheckVerdict::Status::Pass
                                         : CheckVerdict::Status::Fail;
        rep_.verdicts["positivity"] = v;
    }
    rep_.verdicts["lower_bound"] = lower_bound_check(rep_, *h_);
    rep_.verdicts["gronwall_envelope"] =
        gronwall_envelope_check(rep_, *m_, cfg_.envelope_tol);
    {
        CheckVerdict v;
        if (m_->monotone()) {
            v.worst_margin = scan_min("gamma_margin", &v.worst_time);
            v.status = v.worst_margin >= 0.0 ? CheckVerdict::Status::Pass
                                             : CheckVerdict::Status::Fail;
        } else {
            v.status = CheckVerdict::Status::NotApplicable;
            v.detail = "requires a non-increasing motility";
        }
        rep_.verdicts["gamma_bound"] = v;
    }
    {
        CheckVerdict v;
        double t_neg = 0.0, t_err = 0.0;
        const double worst_neg = scan_min("phi_min_norm", &t_neg);
        const double worst_err = scan_max("phi_mass_err", &t_err);
        const double m1 = worst_neg + 1e-12;
        const double m2 = 1e-10 - worst_err;
        v.worst_margin = std::min(m1, m2);
        v.worst_time = m1 < m2 ? t_neg : t_err;
        v.status = v.worst_margin >= 0.0 ? CheckVerdict::Status::Pass
                                         : CheckVerdict::Status::Fail;
        std::ostringstream os;
        os << "min phi (norm.) " << worst_neg << ", worst mass error " << worst_err;
        v.detail = os.str();
        rep_.verdicts["nonlocal_source"] = v;
    }
    {
        CheckVerdict v;
        v.status = CheckVerdict::Status::Info;
        v.worst_margin = scan_max("key_res", &v.worst_time);
        v.detail = "sup-norm identity residual; first order in dt by construction";
        rep_.verdicts["key_identity"] = v;
    }
    {
        CheckVerdict v;
        v.status = CheckVerdict::Status::Info;
        const StabilizationFit fit = stabilization_rate(rep_);
        std::ostringstream os;
        switch (fit.outcome) {
            case StabilizationFit::Outcome::Fitted:
                v.worst_margin = fit.rate;
                os << "decay rate " << fit.rate << " (rms " << fit.fit_residual
                   << ", n=" << fit.samples_used << ")";
                break;
            case StabilizationFit::Outcome::NoDecay:
                os << "no decay detected";
                break;
            case StabilizationFit::Outcome::AtEquilibrium:
                os << "already at equilibrium";
                break;
        }
        v.detail = os.str();
        rep_.verdicts["stabilization"] = v;
    }
    if (cfg_.ladder && !ladder_p_.empty()) {
        CheckVerdict v;
        v.status = CheckVerdict::Status::Info;
        const LadderTable table =
            lp_ladder(rep_, h_->grid()->space_dim(), cfg_.ladder_k);
        v.worst_margin = table.rungs.back().sup_norm;
        std::ostringstream os;
        os << (table.non_increasing ? "norms non-increasing along the ladder"
                                    : "norms increase along the ladder");
        v.detail = os.str();
        rep_.verdicts["lp_ladder"] = v;
    }
    if (cfg_.trend && m_->monotone() && rep_.rows.size() >= 5) {
        CheckVerdict v;
        v.status = CheckVerdict::Status::Info;
        const auto x = rep_.column("moment_hi");
        const auto y = rep_.column("moment_lo");
        const auto r = rep_.column("trend_rhs");
        // least squares for dX/dt = -lambda Y + C R
        double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
        std::vector<double> dx(x.size(), 0.0);
        for (std::size_t i = 1; i + 1 < x.size(); ++i)
            dx[i] = (x[i + 1] - x[i - 1]) / (t[i + 1] - t[i - 1]);
        for (std::size_t i = 1; i + 1 < x.size(); ++i) {
            a11 += y[i] * y[i];
            a12 += -y[i] * r[i];
            a22 += r[i] * r[i];
            b1 += -y[i] * dx[i];
            b2 += r[i] * dx[i];
        }
        const double det = a11 * a22 - a12 * a12;
        if (det != 0.0) {
            const double lambda = (b1 * a22 - a12 * b2) / det;
            const double cc = (a11 * b2 - a12 * b1) / det;
            std::size_t ok = 0, total = 0;
            for (std::size_t i = 1; i + 1 < x.size(); ++i) {
                ++total;
                if (dx[i] + lambda * y[i] <= cc * r[i] * 1.05 + 1e-8) ++ok;
            }
            std::ostringstream os;
            os << "fitted lambda=" << lambda << " C=" << cc << "; holds at " << ok
               << "/" << total << " samples";
            v.detail = os.str();
            v.worst_margin = total > 0 ? static_cast<double>(ok) / total : 0.0;
        } else {
            v.detail = "trend fit degenerate";
        }
        rep_.verdicts["moment_trend"] = v;
    }
    return std::move(rep_);
}

}  // namespace mlab
