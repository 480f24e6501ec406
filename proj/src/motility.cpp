#include "mlab/motility.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

void require_param(bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("motility: ") + what);
}

void validate(const MotilityFamily& fam) {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PowerLaw>) {
                require_param(f.k >= 0.0, "power family needs k >= 0");
            } else if constexpr (std::is_same_v<T, ShiftedPowerLaw>) {
                require_param(f.a1 >= 0.0 && f.k1 >= 0.0,
                              "shifted power family needs a1 >= 0, k1 >= 0");
            } else if constexpr (std::is_same_v<T, Exponential>) {
                require_param(f.chi >= 0.0, "exponential family needs chi >= 0");
            } else if constexpr (std::is_same_v<T, StretchedExponential>) {
                require_param(f.chi >= 0.0 && f.beta > 0.0,
                              "stretched exponential needs chi >= 0, beta > 0");
            } else if constexpr (std::is_same_v<T, LogCorrectedPower>) {
                require_param(f.a1 >= 0.0 && f.k1 >= 0.0 && f.k2 >= 0.0,
                              "log-corrected power needs a1, k1, k2 >= 0");
                require_param(f.a2 > 1.0, "log-corrected power needs a2 > 1");
            } else if constexpr (std::is_same_v<T, SumOfPowers>) {
                require_param(f.a1 >= 0.0 && f.a2 >= 0.0 && f.k1 >= 0.0 && f.k2 >= 0.0,
                              "sum of powers needs non-negative parameters");
            } else if constexpr (std::is_same_v<T, ConstantMotility>) {
                require_param(f.c > 0.0, "constant motility must be positive");
            } else if constexpr (std::is_same_v<T, CustomMotility>) {
                require_param(static_cast<bool>(f.gamma) && static_cast<bool>(f.gamma_prime),
                              "custom motility needs gamma and gamma_prime callables");
            }
        },
        fam);
}

bool family_monotone(const MotilityFamily& fam) {
    if (const auto* c = std::get_if<CustomMotility>(&fam)) return c->monotone;
    return true;  // built-ins are non-increasing for the validated parameter ranges
}

std::optional<double> default_k(const MotilityFamily& fam) {
    struct V {
        std::optional<double> operator()(const PowerLaw& f) const { return f.k; }
        std::optional<double> operator()(const ShiftedPowerLaw& f) const { return f.k1; }
        std::optional<double> operator()(const Exponential&) const { return std::nullopt; }
        std::optional<double> operator()(const StretchedExponential&) const { return std::nullopt; }
        std::optional<double> operator()(const LogCorrectedPower& f) const { return f.k1; }
        std::optional<double> operator()(const SumOfPowers& f) const {
            return std::min(f.k1, f.k2);
        }
        std::optional<double> operator()(const ConstantMotility&) const { return 0.0; }
        std::optional<double> operator()(const CustomMotility&) const { return std::nullopt; }
    };
    return std::visit(V{}, fam);
}

/// integral of (a1 + t)^(-k1) over [lo, hi]
double shifted_power_integral(double a1, double k1, double lo, double hi) {
    if (k1 == 1.0) return std::log((a1 + hi) / (a1 + lo));
    return (std::pow(a1 + hi, 1.0 - k1) - std::pow(a1 + lo, 1.0 - k1)) / (1.0 - k1);
}

}  // namespace

Motility::Motility(MotilityFamily family, double a, std::optional<double> declared_k,
                   std::optional<double> declared_l)
    : family_(std::move(family)), a_(a) {
    validate(family_);
    if (!(a_ > 0.0) || !std::isfinite(a_))
        throw ConfigError("motility: lower limit a must be positive and finite");
    k_ = declared_k ? declared_k : default_k(family_);
    l_ = declared_l ? declared_l : k_;
    monotone_ = family_monotone(family_);
}

Motility Motility::with_lower_limit(double a) const {
    return Motility(family_, a, k_, l_);
}

double Motility::gamma(double s) const {
    if (!(s > 0.0)) throw std::domain_error("gamma requires s > 0");
    struct V {
        double s;
        double operator()(const PowerLaw& f) const { return std::pow(s, -f.k); }
        double operator()(const ShiftedPowerLaw& f) const { return std::pow(f.a1 + s, -f.k1); }
        double operator()(const Exponential& f) const { return std::exp(-f.chi * s); }
        double operator()(const StretchedExponential& f) const {
            return std::exp(-f.chi * std::pow(s, f.beta));
        }
        double operator()(const LogCorrectedPower& f) const {
            return std::pow(f.a1 + s, -f.k1) * std::pow(std::log(f.a2 + s), -f.k2);
        }
        double operator()(const SumOfPowers& f) const {
            return std::pow(f.a1 + s, -f.k1) + std::pow(f.a2 + s, -f.k2);
        }
        double operator()(const ConstantMotility& f) const { return f.c; }
        double operator()(const CustomMotility& f) const { return f.gamma(s); }
    };
    return std::visit(V{s}, family_);
}

double Motility::gamma_prime(double s) const {
    if (!(s > 0.0)) throw std::domain_error("gamma_prime requires s > 0");
    struct V {
        double s;
        double operator()(const PowerLaw& f) const {
            return f.k == 0.0 ? 0.0 : -f.k * std::pow(s, -f.k - 1.0);
        }
        double operator()(const ShiftedPowerLaw& f) const {
            return f.k1 == 0.0 ? 0.0 : -f.k1 * std::pow(f.a1 + s, -f.k1 - 1.0);
        }
        double operator()(const Exponential& f) const { return -f.chi * std::exp(-f.chi * s); }
        double operator()(const StretchedExponential& f) const {
            return -f.chi * f.beta * std::pow(s, f.beta - 1.0) *
                   std::exp(-f.chi * std::pow(s, f.beta));
        }
        double operator()(const LogCorrectedPower& f) const {
            const double lg = std::log(f.a2 + s);
            const double g = std::pow(f.a1 + s, -f.k1) * std::pow(lg, -f.k2);
            return g * (-f.k1 / (f.a1 + s) - f.k2 / ((f.a2 + s) * lg));
        }
        double operator()(const SumOfPowers& f) const {
            const double d1 = f.k1 == 0.0 ? 0.0 : -f.k1 * std::pow(f.a1 + s, -f.k1 - 1.0);
            const double d2 = f.k2 == 0.0 ? 0.0 : -f.k2 * std::pow(f.a2 + s, -f.k2 - 1.0);
            return d1 + d2;
        }
        double operator()(const ConstantMotility&) const { return 0.0; }
        double operator()(const CustomMotility& f) const { return f.gamma_prime(s); }
    };
    return std::visit(V{s}, family_);
}

double Motility::big_gamma(double s) const {
    if (!(s >= a_)) throw std::domain_error("big_gamma requires s >= lower limit a");
    if (s == a_) return 0.0;
    struct V {
        double a, s;
        const Motility* m;
        double quadrature() const {
            double err = 0.0;
            const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                [this](double t) { return m->gamma(t); }, a, s, 15, 1e-11, &err);
            return val;
        }
        double operator()(const PowerLaw& f) const {
            return shifted_power_integral(0.0, f.k, a, s);
        }
        double operator()(const ShiftedPowerLaw& f) const {
            return shifted_power_integral(f.a1, f.k1, a, s);
        }
        double operator()(const Exponential& f) const {
            if (f.chi == 0.0) return s - a;
            return (std::exp(-f.chi * a) - std::exp(-f.chi * s)) / f.chi;
        }
        double operator()(const StretchedExponential&) const { return quadrature(); }
        double operator()(const LogCorrectedPower&) const { return quadrature(); }
        double operator()(const SumOfPowers& f) const {
            return shifted_power_integral(f.a1, f.k1, a, s) +
                   shifted_power_integral(f.a2, f.k2, a, s);
        }
        double operator()(const ConstantMotility& f) const { return f.c * (s - a); }
        double operator()(const CustomMotility&) const { return quadrature(); }
    };
    return std::visit(V{a_, s, this}, family_);
}

double Motility::tail_envelope(double s) const {
    if (!(s > 0.0)) throw std::domain_error("tail_envelope requires s > 0");
    if (monotone_) return gamma(s);
    const double s_max = std::max(1e3, 1e3 * s);
    const int n = 400;
    const double step = std::log(s_max / s) / n;
    double sup = 0.0;
    for (int i = 0; i <= n; ++i)
        sup = std::max(sup, gamma(s * std::exp(step * i)));
    return 1.01 * sup;
}

std::string Motility::family_name() const {
    struct V {
        std::string operator()(const PowerLaw&) const { return "power"; }
        std::string operator()(const ShiftedPowerLaw&) const { return "shifted_power"; }
        std::string operator()(const Exponential&) const { return "exponential"; }
        std::string operator()(const StretchedExponential&) const {
            return "stretched_exponential";
        }
        std::string operator()(const LogCorrectedPower&) const { return "log_power"; }
        std::string operator()(const SumOfPowers&) const { return "sum_of_powers"; }
        std::string operator()(const ConstantMotility&) const { return "constant"; }
        std::string operator()(const CustomMotility& f) const { return f.name; }
    };
    return std::visit(V{}, family_);
}

AssumptionReport check_assumptions(const Motility& m) {
    AssumptionReport rep;
    constexpr double lo = 1e-3, hi = 1e6;
    constexpr int per_decade = 20;
    const int n = static_cast<int>(per_decade * std::log10(hi / lo));
    rep.probe_s.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        rep.probe_s.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / n));

    double min_gamma = std::numeric_limits<double>::infinity();
    double max_gamma = 0.0;
    double max_prime = -std::numeric_limits<double>::infinity();
    for (double s : rep.probe_s) {
        const double g = m.gamma(s);
        const double gp = m.gamma_prime(s);
        rep.gamma_values.push_back(g);
        rep.gamma_prime_values.push_back(gp);
        min_gamma = std::min(min_gamma, g);
        max_gamma = std::max(max_gamma, g);
        max_prime = std::max(max_prime, gp);
    }
    rep.gamma_positive = min_gamma >= 0.0 && max_gamma > 0.0;
    rep.a1_holds = max_prime <= 1e-12;

    for (int d = -3; d <= 3; ++d) {
        const double s = std::pow(10.0, d);
        rep.k_table.emplace_back(s, m.tail_envelope(s));
    }
    rep.a0_holds = rep.gamma_positive;
    for (const auto& [s, ks] : rep.k_table)
        if (!std::isfinite(ks)) rep.a0_holds = false;

    std::ostringstream notes;
    if (!rep.a1_holds)
        notes << "a1: gamma' reaches " << max_prime << " on the probe grid; ";

    if (m.declared_k() && m.declared_l()) {
        const double k = *m.declared_k();
        const double l = *m.declared_l();
        for (double s : rep.probe_s) {
            const double g = m.gamma(s);
            rep.tail_k_product.push_back(std::pow(s, k) * g);
            rep.tail_l_product.push_back(std::pow(s, l) * g);
        }
        // Judge the tail on the top four decades of the probe grid.
        std::size_t tail_begin = 0;
        while (tail_begin < rep.probe_s.size() && rep.probe_s[tail_begin] < 1e2) ++tail_begin;

        double tk_max = 0.0;
        double tl_first = rep.tail_l_product[tail_begin];
        double tl_last = rep.tail_l_product.back();
        bool finite = true;
        for (std::size_t i = tail_begin; i < rep.probe_s.size(); ++i) {
            tk_max = std::max(tk_max, rep.tail_k_product[i]);
            if (!std::isfinite(rep.tail_k_product[i]) || !std::isfinite(rep.tail_l_product[i]))
                finite = false;
        }
        const double tk_last = rep.tail_k_product.back();

        const bool lower_ok = finite && tk_last > 1e-8 * tk_max && tk_max > 0.0;
        const bool upper_ok = finite && tl_last <= 10.0 * std::max(tl_first, 1e-300);
        rep.a2_holds = lower_ok && upper_ok && k >= l;
        if (!lower_ok)
            notes << "a2: s^k gamma collapses toward zero on the top decades; ";
        if (!upper_ok)
            notes << "a2: s^l gamma keeps growing on the top decades; ";
        if (k < l) notes << "a2: declared k < l; ";
    } else {
        rep.a2_holds = false;
        notes << "a2: no finite tail exponent declared for this family; ";
    }
    rep.notes = notes.str();
    return rep;
}

}  // namespace mlab
