#include "mlab/helmholtz.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "mlab/errors.hpp"
#include "mlab/operators.hpp"

namespace mlab {

namespace {
constexpr std::size_t kDirectCellLimit = 100000;
}

struct HelmholtzSolver::Impl {
    GridPtr grid;
    double tol;
    bool direct;
    Eigen::SparseMatrix<double> a;      // diag(V) - VL
    Eigen::SparseMatrix<double> abs_a;  // entrywise |A|, for backward error
    Eigen::VectorXd vol;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

    mutable std::once_flag green_once;
    mutable double green = 0.0;

    explicit Impl(GridPtr g, double tolerance, Mode mode)
        : grid(std::move(g)), tol(tolerance) {
        const auto n = static_cast<Eigen::Index>(grid->cell_count());
        a = assemble_volume_laplacian(*grid);
        a *= -1.0;
        vol.resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
            vol[i] = grid->cell_volume(static_cast<std::size_t>(i));
        for (Eigen::Index i = 0; i < n; ++i) a.coeffRef(i, i) += vol[i];
        a.makeCompressed();
        abs_a = a.cwiseAbs();
        abs_a.makeCompressed();

        direct = mode == Mode::Direct ||
                 (mode == Mode::Auto && grid->cell_count() <= kDirectCellLimit);
        if (direct) {
            ldlt.compute(a);
            if (ldlt.info() != Eigen::Success)
                throw SolverError("sparse factorization of (I - Lap) failed", 0.0);
        }
    }

    Eigen::VectorXd raw_solve(const Eigen::VectorXd& b) const {
        if (direct) return ldlt.solve(b);
        // A fresh solver per call keeps concurrent solves safe.
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                 Eigen::Lower | Eigen::Upper>
            cg(a);
        cg.setTolerance(0.01 * tol);
        cg.setMaxIterations(10 * a.rows() + 1000);
        return cg.solve(b);
    }

    /// Relative residual in the row form (I - Lap)x - f against ||f||.
    // Componentwise relative backward error of A x = b: scale-invariant,
    // so rows with tiny cell volumes (3D radial cores) do not amplify
    // rounding noise above the tolerance.
    double row_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
        const Eigen::VectorXd r = (a * x - b).cwiseAbs();
        const Eigen::VectorXd denom =
            (abs_a * x.cwiseAbs() + b.cwiseAbs()).eval();
        double worst = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            if (denom[i] > 0.0)
                worst = std::max(worst, r[i] / denom[i]);
            else if (r[i] != 0.0)
                worst = std::numeric_limits<double>::infinity();
        }
        return worst;
    }

    Eigen::VectorXd solve_checked(const Eigen::VectorXd& f) const {
        const Eigen::VectorXd b = vol.cwiseProduct(f);
        Eigen::VectorXd x = raw_solve(b);
        double res = row_residual(x, b);
        for (int pass = 0; pass < 3 && res > tol; ++pass) {
            x += raw_solve(b - a * x);
            res = row_residual(x, b);
        }
        if (!(res <= tol) || !x.allFinite())
            throw SolverError("(I - Lap) solve did not reach tolerance", res);
        return x;
    }
};

HelmholtzSolver::HelmholtzSolver(GridPtr grid, double tolerance, Mode mode) {
    if (!grid) throw ConfigError("helmholtz solver requires a grid");
    if (!(tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
    impl_ = std::make_unique<Impl>(std::move(grid), tolerance, mode);
}

HelmholtzSolver::~HelmholtzSolver() = default;
HelmholtzSolver::HelmholtzSolver(HelmholtzSolver&&) noexcept = default;
HelmholtzSolver& HelmholtzSolver::operator=(HelmholtzSolver&&) noexcept = default;

ScalarField HelmholtzSolver::solve(const ScalarField& f) const {
    if (!f.grid()->same_grid(*impl_->grid))
        throw GridMismatchError("field does not live on the solver's grid");
    const auto n = static_cast<Eigen::Index>(f.size());
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs[i] = f[static_cast<std::size_t>(i)];
    const Eigen::VectorXd x = impl_->solve_checked(rhs);
    std::vector<double> out(f.size());
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = x[i];
    return ScalarField(impl_->grid, std::move(out));
}

ScalarField HelmholtzSolver::apply(const ScalarField& v) const {
    if (!v.grid()->same_grid(*impl_->grid))
        throw GridMismatchError("field does not live on the solver's grid");
    ScalarField lap = apply_laplacian(v);
    ScalarField out(impl_->grid, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lap[i];
    return out;
}

double HelmholtzSolver::green_min() const {
    std::call_once(impl_->green_once, [this] {
        const auto n = static_cast<Eigen::Index>(impl_->grid->cell_count());
        double g = std::numeric_limits<double>::infinity();
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            e[j] = 1.0;
            const Eigen::VectorXd col = impl_->raw_solve(e);
            g = std::min(g, col.minCoeff());
            e[j] = 0.0;
        }
        impl_->green = g;
    });
    return impl_->green;
}

const GridPtr& HelmholtzSolver::grid() const { return impl_->grid; }
double HelmholtzSolver::tolerance() const { return impl_->tol; }

}  // namespace mlab
