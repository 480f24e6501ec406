#pragma once

#include <stdexcept>
#include <string>

namespace mlab {

/// Invalid scenario/config input (bad geometry, unknown key, missing file).
/// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear-solver breakdown. Carries the final relative residual so the
/// failure can be recorded in manifests and diagnostics.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_ = 0.0;
};

/// Mixing fields or solvers that belong to different grids.
class GridMismatchError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mlab
