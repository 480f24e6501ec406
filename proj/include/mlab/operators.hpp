#pragma once

#include <Eigen/SparseCore>

#include "mlab/grid.hpp"

namespace mlab {

/// Volume-weighted discrete Laplacian VL with (VL f)_i = V_i (Lf)_i.
/// Symmetric with zero row and column sums: off-diagonals are the positive
/// face transmissibilities, the diagonal their negated row totals. Diagonal
/// entries are always present in the sparsity pattern, as explicit zeros if
/// need be.
Eigen::SparseMatrix<double> assemble_volume_laplacian(const Grid& g);

}  // namespace mlab
