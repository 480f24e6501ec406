#include "mlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mlab/errors.hpp"
#include "mlab/field_io.hpp"

namespace mlab {

const char* to_string(CheckVerdict::Status s) {
    switch (s) {
        case CheckVerdict::Status::Pass: return "PASS";
        case CheckVerdict::Status::Fail: return "FAIL";
        case CheckVerdict::Status::NotApplicable: return "N/A";
        case CheckVerdict::Status::Info: return "INFO";
    }
    return "?";
}

std::size_t DiagnosticsReport::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end())
        throw std::invalid_argument("report has no column named '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> DiagnosticsReport::column(const std::string& name) const {
    const std::size_t idx = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row.at(idx));
    return out;
}

bool DiagnosticsReport::all_asserted_pass() const {
    for (const auto& [name, v] : verdicts)
        if (v.failed()) return false;
    return true;
}

std::vector<std::string> DiagnosticsReport::failing_checks() const {
    std::vector<std::string> out;
    for (const auto& [name, v] : verdicts)
        if (v.failed()) out.push_back(name);
    return out;
}

void DiagnosticsReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out << ',';
        out << columns[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            if (!std::isnan(row[c])) out << format_double(row[c]);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string DiagnosticsReport::summary() const {
    std::ostringstream os;
    for (const auto& [name, v] : verdicts) {
        os << to_string(v.status) << "  " << name;
        if (v.status == CheckVerdict::Status::Pass ||
            v.status == CheckVerdict::Status::Fail ||
            v.status == CheckVerdict::Status::Info) {
            os << "  margin=" << format_double(v.worst_margin) << " at t="
               << format_double(v.worst_time);
        }
        if (!v.detail.empty()) os << "  (" << v.detail << ")";
        os << '\n';
    }
    return os.str();
}

}  // namespace mlab
