#include "mlab/operators.hpp"

#include <vector>

namespace mlab {

Eigen::SparseMatrix<double> assemble_volume_laplacian(const Grid& g) {
    using T = Eigen::Triplet<double>;
    const auto n = static_cast<Eigen::Index>(g.cell_count());
    std::vector<T> trip;
    trip.reserve(5 * g.cell_count());
    for (std::size_t i = 0; i < g.cell_count(); ++i)
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 0.0);
    for_each_face(g, [&](std::size_t i, std::size_t j, double tc, double) {
        const int bi = static_cast<int>(i), bj = static_cast<int>(j);
        trip.emplace_back(bi, bj, tc);
        trip.emplace_back(bj, bi, tc);
        trip.emplace_back(bi, bi, -tc);
        trip.emplace_back(bj, bj, -tc);
    });
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

}  // namespace mlab
