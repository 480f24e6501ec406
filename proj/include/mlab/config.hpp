#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace mlab::config {

/// Scenario files use a line-based key/value grammar with sections:
///
///     schema = 1
///     seed = 7                      # comment
///     [gamma]
///     family = "power"
///     k = 2.0
///     k_list = [0.5, 1.0, 2.0]
///
/// A top-level inline table `gamma = { family = "power" }` is equivalent
/// to the section form. Values are strings (quoted), booleans, integers,
/// floats, arrays, and inline tables. Parsed trees keep the int/float
/// distinction.
using Value = nlohmann::json;

Value parse_string(std::string_view text, const std::string& origin = "<string>");
Value parse_file(const std::filesystem::path& path);

/// Applies a command-line override "section.key=value". The value is
/// parsed with the grammar above; text that is not a valid scalar/array
/// is taken as a bare string, so `--set gamma.family=power` works
/// unquoted. Intermediate tables are created on demand.
void apply_override(Value& root, const std::string& assignment);

/// Canonical text form: top-level scalars first, then one section per
/// table, keys sorted; round-trips through parse_string with identical
/// types. Used for manifests so reruns diff cleanly.
std::string canonical(const Value& root);

}  // namespace mlab::config
