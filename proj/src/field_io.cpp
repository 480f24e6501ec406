#include "mlab/field_io.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <vector>

namespace mlab {

namespace {

constexpr char kMagic[5] = {'M', 'L', 'A', 'B', '1'};

enum : std::uint8_t { kGeomInterval = 0, kGeomRectangle = 1, kGeomRadial = 2 };

template <class T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) throw ConfigError("snapshot truncated");
    return value;
}

std::uint8_t geometry_code(const Geometry& g) {
    if (std::holds_alternative<Interval>(g)) return kGeomInterval;
    if (std::holds_alternative<Rectangle>(g)) return kGeomRectangle;
    return kGeomRadial;
}

}  // namespace

void write_field(std::ostream& out, const ScalarField& f) {
    const Grid& g = *f.grid();
    out.write(kMagic, sizeof kMagic);
    put<std::uint8_t>(out, geometry_code(g.geometry()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(g.space_dim()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(g.axis_count()));
    put<std::uint8_t>(out, 0);
    for (int axis = 0; axis < g.axis_count(); ++axis)
        put<std::uint64_t>(out, g.cells_along(axis));
    for (int axis = 0; axis < g.axis_count(); ++axis)
        put<double>(out, g.spacing(axis));
    auto values = f.values();
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

ScalarField read_field(std::istream& in) {
    char magic[5];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw ConfigError("not a field snapshot (bad magic)");

    const auto code = get<std::uint8_t>(in);
    const auto dim = get<std::uint8_t>(in);
    const auto axes = get<std::uint8_t>(in);
    get<std::uint8_t>(in);  // reserved

    std::array<std::uint64_t, 2> cells{0, 0};
    std::array<double, 2> spacing{0.0, 0.0};
    for (int a = 0; a < axes; ++a) cells[static_cast<std::size_t>(a)] = get<std::uint64_t>(in);
    for (int a = 0; a < axes; ++a) spacing[static_cast<std::size_t>(a)] = get<double>(in);

    Geometry geom;
    switch (code) {
        case kGeomInterval:
            geom = Interval{spacing[0] * static_cast<double>(cells[0])};
            break;
        case kGeomRectangle:
            geom = Rectangle{spacing[0] * static_cast<double>(cells[0]),
                             spacing[1] * static_cast<double>(cells[1])};
            break;
        case kGeomRadial:
            geom = RadialBall{spacing[0] * static_cast<double>(cells[0]), dim};
            break;
        default:
            throw ConfigError("snapshot has unknown geometry code");
    }
    auto grid = std::make_shared<Grid>(geom, cells[0], cells[1]);

    std::vector<double> values(grid->cell_count());
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw ConfigError("snapshot truncated");
    return ScalarField(std::move(grid), std::move(values));
}

void write_snapshot(const std::filesystem::path& path, const ScalarField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    write_field(out, f);
    if (!out) throw ConfigError("failed writing " + path.string());
}

ScalarField read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    return read_field(in);
}

std::string format_double(double v) {
    std::array<char, 64> buf;
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

void write_csv(const std::filesystem::path& path, const ScalarField& f) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << "index,value\n";
    auto values = f.values();
    for (std::size_t i = 0; i < values.size(); ++i)
        out << i << ',' << format_double(values[i]) << '\n';
    if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace mlab
