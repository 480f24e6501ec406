#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mlab {

// Motility families gamma(s). All built-in families are positive and
// non-increasing for non-negative parameters; "monotone" below always
// means non-increasing.

struct PowerLaw {
    double k = 1.0;  // s^(-k)
};

struct ShiftedPowerLaw {
    double a1 = 1.0;  // (a1 + s)^(-k1)
    double k1 = 1.0;
};

struct Exponential {
    double chi = 1.0;  // exp(-chi s)
};

struct StretchedExponential {
    double chi = 1.0;  // exp(-chi s^beta)
    double beta = 0.5;
};

struct LogCorrectedPower {
    double a1 = 1.0;  // (a1 + s)^(-k1) * log(a2 + s)^(-k2)
    double k1 = 1.0;
    double a2 = 2.0;  // must exceed 1 so the log stays positive on s > 0
    double k2 = 1.0;
};

struct SumOfPowers {
    double a1 = 1.0;  // (a1 + s)^(-k1) + (a2 + s)^(-k2)
    double k1 = 1.0;
    double a2 = 1.0;
    double k2 = 1.0;
};

struct ConstantMotility {
    double c = 1.0;
};

/// Programmatic family for tests and probes; not reachable from config
/// files. Callables must be pure.
struct CustomMotility {
    std::function<double(double)> gamma;
    std::function<double(double)> gamma_prime;
    bool monotone = false;
    std::string name = "custom";
};

using MotilityFamily =
    std::variant<PowerLaw, ShiftedPowerLaw, Exponential, StretchedExponential,
                 LogCorrectedPower, SumOfPowers, ConstantMotility, CustomMotility>;

/// A motility gamma together with the lower integration limit a of
/// Gamma(s) = integral_a^s gamma, a monotonicity flag, and optional tail
/// exponents (k, l) meaning: gamma decays no faster than s^-k and at least
/// as fast as s^-l for large s.
class Motility {
public:
    explicit Motility(MotilityFamily family, double a = 1.0,
                      std::optional<double> declared_k = std::nullopt,
                      std::optional<double> declared_l = std::nullopt);

    double gamma(double s) const;
    double gamma_prime(double s) const;

    /// Gamma(s) = integral of gamma over [a, s]; closed form where the
    /// family admits one, otherwise adaptive quadrature (relative
    /// tolerance 1e-10). Requires s >= a.
    double big_gamma(double s) const;

    /// K_s = sup of gamma over [s, infinity). Exact (= gamma(s)) for
    /// monotone families; for non-monotone ones an upper estimate from a
    /// log-spaced probe of [s, max(1e3, 1e3 s)] scaled by 1.01.
    double tail_envelope(double s) const;

    double lower_limit() const { return a_; }
    bool monotone() const { return monotone_; }
    std::optional<double> declared_k() const { return k_; }
    std::optional<double> declared_l() const { return l_; }
    const MotilityFamily& family() const { return family_; }
    std::string family_name() const;

    /// Same family and tail metadata with a different lower limit.
    Motility with_lower_limit(double a) const;

private:
    MotilityFamily family_;
    double a_ = 1.0;
    std::optional<double> k_;
    std::optional<double> l_;
    bool monotone_ = true;
};

struct AssumptionReport {
    bool a0_holds = false;  // K_s finite on the probe set
    bool a1_holds = false;  // gamma' <= 0 at every sample
    bool a2_holds = false;  // declared tail exponents consistent with samples
    bool gamma_positive = false;

    std::vector<double> probe_s;  // log grid [1e-3, 1e6]
    std::vector<double> gamma_values;
    std::vector<double> gamma_prime_values;
    std::vector<double> tail_k_product;  // s^k gamma(s), empty without declared k
    std::vector<double> tail_l_product;
    std::vector<std::pair<double, double>> k_table;  // s -> K_s

    std::string notes;
};

/// Samples gamma and gamma' on a log grid [1e-3, 1e6] and checks the
/// standing assumptions: A1 fails if any gamma' sample exceeds 1e-12; A2
/// compares the declared tail exponents against the sampled products
/// s^k gamma and s^l gamma on the top decades (collapse toward zero or
/// unbounded growth both refute the declaration). Families without
/// declared exponents (faster-than-any-power decay) report a2 = false.
AssumptionReport check_assumptions(const Motility& m);

}  // namespace mlab
