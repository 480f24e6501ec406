#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mlab {

struct CheckVerdict {
    enum class Status { Pass, Fail, NotApplicable, Info };

    Status status = Status::Info;
    /// Signed satisfaction margin; for asserted checks, negative means
    /// the inequality was violated. Info checks store their headline
    /// scalar here (a residual, a rate, ...).
    double worst_margin = 0.0;
    double worst_time = 0.0;
    std::string detail;

    bool failed() const { return status == Status::Fail; }
};

const char* to_string(CheckVerdict::Status s);

/// Scalar time series sampled along a run plus per-check verdicts.
/// Columns are fixed once the run starts; every row has one value per
/// column (NaN marks a cell with no defined value, exported empty).
struct DiagnosticsReport {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::map<std::string, CheckVerdict> verdicts;

    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;

    bool all_asserted_pass() const;
    std::vector<std::string> failing_checks() const;

    /// One row per time sample, one column per monitored scalar.
    void write_csv(const std::filesystem::path& path) const;

    /// Human-readable verdict table.
    std::string summary() const;
};

/// Controls what the run recorder samples and asserts.
struct RecorderConfig {
    double envelope_tol = 0.05;       // multiplicative slack on the growth envelope
    double bound_abs_tol = 1e-8;      // additive slack on pointwise inequality checks
    double mass_rel_tol = 1e-10;      // conservation budget over a whole run
    bool ladder = false;              // record the L^p exponent-ladder norms
    double ladder_k = 1.0;
    int ladder_rungs = 8;
    bool trend = true;                // cubic-moment trend monitor
};

}  // namespace mlab
