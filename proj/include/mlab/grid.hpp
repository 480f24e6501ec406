#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "mlab/errors.hpp"

namespace mlab {

struct Interval {
    double length = 1.0;
};

struct Rectangle {
    double lx = 1.0;
    double ly = 1.0;
};

/// Ball of given radius in R^dim, discretized along the radius under the
/// assumption of radial symmetry.
struct RadialBall {
    double radius = 1.0;
    int dim = 2;
};

using Geometry = std::variant<Interval, Rectangle, RadialBall>;

/// Requested discretization: geometry plus cells per axis. `cells_y` is
/// ignored except for rectangles.
struct GridSpec {
    Geometry geometry = Interval{};
    std::size_t cells_x = 0;
    std::size_t cells_y = 0;
};

/// Uniform cell-centered finite-volume grid with zero-flux boundaries.
///
/// Cells are addressed by a flat index. For rectangles the x index runs
/// fastest: cell = iy * nx + ix. Radial grids store one cell per spherical
/// shell; volumes and face areas are exact shell measures, so discrete
/// integrals of radially symmetric functions match their continuum values
/// up to quadrature error only.
///
/// Immutable after construction and safe to share across threads.
class Grid {
public:
    Grid(Geometry geometry, std::size_t cells_x, std::size_t cells_y = 0);

    const Geometry& geometry() const { return geom_; }

    /// Spatial dimension N of the underlying domain (radial grids report
    /// the ambient dimension, not the number of mesh axes).
    int space_dim() const { return space_dim_; }

    /// Number of mesh axes: 1 for intervals and radial grids, 2 for
    /// rectangles.
    int axis_count() const { return axes_; }

    std::size_t cell_count() const { return volumes_.size(); }
    std::size_t cells_along(int axis) const { return cells_.at(static_cast<std::size_t>(axis)); }
    double spacing(int axis) const { return spacing_.at(static_cast<std::size_t>(axis)); }

    /// Coordinate of the cell center along `axis` (radius for radial grids).
    double center(std::size_t cell, int axis) const;

    std::span<const double> cell_volumes() const { return volumes_; }
    double cell_volume(std::size_t cell) const { return volumes_[cell]; }

    /// Measure of the whole domain; equals the sum of cell volumes exactly.
    double total_measure() const { return total_measure_; }

    /// Area of the radial face at node index i (0..n); zero at the origin,
    /// which encodes the zero-flux condition at r = 0.
    double radial_face_area(std::size_t face) const { return face_area_[face]; }

    bool same_grid(const Grid& other) const { return this == &other; }

private:
    Geometry geom_;
    int space_dim_ = 1;
    int axes_ = 1;
    std::array<std::size_t, 2> cells_{0, 0};
    std::array<double, 2> spacing_{0.0, 0.0};
    std::vector<double> volumes_;
    std::vector<double> face_area_;  // radial grids only
    double total_measure_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Validates the spec (positive extents, at least 3 cells per axis) and
/// builds the grid.
GridPtr build_grid(const GridSpec& spec);

GridPtr make_interval(double length, std::size_t cells);
GridPtr make_rectangle(double lx, double ly, std::size_t nx, std::size_t ny);
GridPtr make_radial_ball(double radius, int dim, std::size_t cells);

/// Cell-centered scalar sampled on a Grid. Holds a shared reference to its
/// grid so fields can outlive the factory that made them.
class ScalarField {
public:
    explicit ScalarField(GridPtr grid, double fill = 0.0);
    ScalarField(GridPtr grid, std::vector<double> values);

    const GridPtr& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool all_finite() const;
    double min() const;
    double max() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Calls visit(i, j, trans, dist) once per interior face, where i < j are
/// the adjacent cells, dist is the center distance and trans = area / dist
/// is the face transmissibility. Boundary faces carry no flux and are not
/// visited, so operators built from this loop are conservative by
/// construction.
template <class F>
void for_each_face(const Grid& g, F&& visit) {
    if (std::holds_alternative<Rectangle>(g.geometry())) {
        const std::size_t nx = g.cells_along(0);
        const std::size_t ny = g.cells_along(1);
        const double dx = g.spacing(0);
        const double dy = g.spacing(1);
        const double tx = dy / dx;  // face area dy, distance dx
        const double ty = dx / dy;
        for (std::size_t iy = 0; iy < ny; ++iy) {
            for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
                const std::size_t c = iy * nx + ix;
                visit(c, c + 1, tx, dx);
            }
        }
        for (std::size_t iy = 0; iy + 1 < ny; ++iy) {
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const std::size_t c = iy * nx + ix;
                visit(c, c + nx, ty, dy);
            }
        }
        return;
    }
    const std::size_t n = g.cells_along(0);
    const double dr = g.spacing(0);
    if (std::holds_alternative<Interval>(g.geometry())) {
        for (std::size_t i = 0; i + 1 < n; ++i) visit(i, i + 1, 1.0 / dr, dr);
        return;
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        visit(i, i + 1, g.radial_face_area(i + 1) / dr, dr);
}

/// Discrete Neumann Laplacian: (Lf)_i = (1/V_i) * sum of face fluxes.
/// Annihilates constants exactly and is self-adjoint in the cell-volume
/// inner product.
ScalarField apply_laplacian(const ScalarField& f);

/// Volume-weighted integral over the domain.
double integrate(const ScalarField& f);

/// L^p norm with the cell-volume measure; p may be infinity.
double lp_norm(const ScalarField& f, double p);

/// Largest face-difference quotient |f_j - f_i| / dist; a sup-norm proxy
/// for the gradient.
double max_face_gradient(const ScalarField& f);

/// Cell-centered |grad f|^2 from central differences with reflected ghost
/// values (consistent with the zero-flux boundary).
ScalarField gradient_squared(const ScalarField& f);

void require_same_grid(const ScalarField& a, const ScalarField& b);

}  // namespace mlab
