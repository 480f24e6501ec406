#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mlab/grid.hpp"

namespace mlab {

/// Binary field snapshot. Layout (little-endian):
///   bytes 0..4   magic "MLAB1"
///   byte  5      geometry code: 0 interval, 1 rectangle, 2 radial ball
///   byte  6      spatial dimension N
///   byte  7      mesh axis count
///   byte  8      reserved (zero)
///   per axis     u64 cell count, then f64 spacing
///   payload      cell values as f64, x index fastest
void write_field(std::ostream& out, const ScalarField& f);
ScalarField read_field(std::istream& in);

void write_snapshot(const std::filesystem::path& path, const ScalarField& f);
ScalarField read_snapshot(const std::filesystem::path& path);

/// Text export: header row "index,value", one cell per line, doubles
/// printed with 17 significant digits so round-trips are exact.
void write_csv(const std::filesystem::path& path, const ScalarField& f);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace mlab
