#include "mlab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mlab/errors.hpp"
#include "mlab/field_io.hpp"

namespace mlab::config {

namespace {

bool is_bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

[[noreturn]] void fail(const std::string& origin, std::size_t line,
                       const std::string& what) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << what;
    throw ConfigError(os.str());
}

/// Removes a trailing comment, honoring quoted strings.
std::string_view strip_comment(std::string_view s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_str) {
            if (c == '\\') ++i;
            else if (c == '"') in_str = false;
        } else if (c == '"') {
            in_str = true;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

class ValueParser {
public:
    ValueParser(std::string_view s, const std::string& origin, std::size_t line)
        : s_(s), origin_(origin), line_(line) {}

    Value parse_to_end() {
        Value v = parse_value();
        skip_ws();
        if (pos_ != s_.size()) fail_here("trailing characters after value");
        return v;
    }

    Value parse_value() {
        skip_ws();
        if (pos_ >= s_.size()) fail_here("expected a value");
        const char c = s_[pos_];
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        if (c == '{') return parse_table();
        return parse_scalar();
    }

    std::string parse_key() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && is_bare_char(s_[pos_])) ++pos_;
        if (pos_ == start) fail_here("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    void skip_ws() {
        while (pos_ < s_.size() &&
               std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!consume(c)) fail_here(std::string("expected '") + c + "' " + what);
    }

private:
    [[noreturn]] void fail_here(const std::string& what) { fail(origin_, line_, what); }

    Value parse_string() {
        ++pos_;  // opening quote
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) fail_here("truncated escape");
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    case 'r': c = '\r'; break;
                    case '"': c = '"'; break;
                    case '\\': c = '\\'; break;
                    default: fail_here("unknown escape in string");
                }
            }
            out.push_back(c);
        }
        if (pos_ >= s_.size()) fail_here("unterminated string");
        ++pos_;  // closing quote
        return Value(out);
    }

    Value parse_array() {
        ++pos_;  // '['
        Value arr = Value::array();
        skip_ws();
        if (consume(']')) return arr;
        while (true) {
            arr.push_back(parse_value());
            if (consume(']')) return arr;
            expect(',', "between array elements");
            if (consume(']')) return arr;  // trailing comma
        }
    }

    Value parse_table() {
        ++pos_;  // '{'
        Value tab = Value::object();
        if (consume('}')) return tab;
        while (true) {
            const std::string key = parse_key();
            expect('=', "after key");
            if (tab.contains(key)) fail_here("duplicate key '" + key + "'");
            tab[key] = parse_value();
            if (consume('}')) return tab;
            expect(',', "between table entries");
            if (consume('}')) return tab;
        }
    }

    Value parse_scalar() {
        const std::size_t start = pos_;
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == ',' || c == ']' || c == '}' ||
                std::isspace(static_cast<unsigned char>(c)))
                break;
            ++pos_;
        }
        const std::string_view tok = s_.substr(start, pos_ - start);
        if (tok == "true") return Value(true);
        if (tok == "false") return Value(false);

        const char* b = tok.data();
        const char* e = tok.data() + tok.size();
        const bool looks_int = tok.find_first_of(".eEnN") == std::string_view::npos;
        if (looks_int) {
            std::int64_t i = 0;
            auto [p, ec] = std::from_chars(b, e, i);
            if (ec == std::errc() && p == e) return Value(i);
        }
        double d = 0.0;
        auto [p, ec] = std::from_chars(b, e, d);
        if (ec == std::errc() && p == e) return Value(d);
        fail_here("cannot parse value '" + std::string(tok) +
                  "' (strings must be quoted)");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    const std::string& origin_;
    std::size_t line_;
};

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    out += '"';
    return out;
}

std::string float_text(double d) {
    std::string s = format_double(d);
    if (s.find_first_of(".eEnN") == std::string::npos) s += ".0";
    return s;
}

std::string value_text(const Value& v) {
    switch (v.type()) {
        case Value::value_t::boolean: return v.get<bool>() ? "true" : "false";
        case Value::value_t::number_integer:
            return std::to_string(v.get<std::int64_t>());
        case Value::value_t::number_unsigned:
            return std::to_string(v.get<std::uint64_t>());
        case Value::value_t::number_float: return float_text(v.get<double>());
        case Value::value_t::string: return quote(v.get<std::string>());
        case Value::value_t::array: {
            std::string out = "[";
            bool first = true;
            for (const auto& e : v) {
                if (!first) out += ", ";
                first = false;
                out += value_text(e);
            }
            return out + "]";
        }
        case Value::value_t::object: {
            std::string out = "{ ";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ", ";
                first = false;
                out += it.key() + " = " + value_text(it.value());
            }
            return out + (first ? "}" : " }");
        }
        default: throw ConfigError("cannot serialize null config value");
    }
}

}  // namespace

Value parse_string(std::string_view text, const std::string& origin) {
    Value root = Value::object();
    Value* current = &root;
    std::string current_name;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(
            pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        std::string_view line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated section header");
            const std::string name(trim(line.substr(1, line.size() - 2)));
            if (name.empty()) fail(origin, line_no, "empty section name");
            for (char c : name)
                if (!is_bare_char(c))
                    fail(origin, line_no, "invalid section name '" + name + "'");
            if (root.contains(name))
                fail(origin, line_no, "duplicate section '" + name + "'");
            root[name] = Value::object();
            current = &root[name];
            current_name = name;
            continue;
        }

        ValueParser p(line, origin, line_no);
        const std::string key = p.parse_key();
        p.expect('=', "after key");
        p.skip_ws();
        Value v = p.parse_to_end();
        if (current->contains(key))
            fail(origin, line_no,
                 "duplicate key '" +
                     (current_name.empty() ? key : current_name + "." + key) + "'");
        if (current != &root && v.is_object())
            fail(origin, line_no, "tables nest at most one level deep");
        if (v.is_object())
            for (const auto& entry : v)
                if (entry.is_object())
                    fail(origin, line_no, "tables nest at most one level deep");
        (*current)[key] = std::move(v);
    }
    return root;
}

Value parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

void apply_override(Value& root, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' must look like key=value");
    const std::string path = std::string(trim(assignment.substr(0, eq)));
    const std::string text = std::string(trim(assignment.substr(eq + 1)));
    if (path.empty()) throw ConfigError("override '" + assignment + "' has no key");

    std::vector<std::string> segments;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        segments.push_back(path.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (const auto& seg : segments) {
        if (seg.empty()) throw ConfigError("override key '" + path + "' is malformed");
        for (char c : seg)
            if (!is_bare_char(c))
                throw ConfigError("override key '" + path + "' is malformed");
    }

    Value parsed;
    try {
        ValueParser p(text, "<override>", 1);
        parsed = p.parse_to_end();
    } catch (const ConfigError&) {
        if (text.empty()) throw;
        parsed = Value(text);  // bare strings are allowed on the command line
    }

    Value* cur = &root;
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
        Value& next = (*cur)[segments[i]];
        if (next.is_null()) next = Value::object();
        if (!next.is_object())
            throw ConfigError("override '" + path + "' descends into a non-table");
        cur = &next;
    }
    (*cur)[segments.back()] = std::move(parsed);
}

std::string canonical(const Value& root) {
    if (!root.is_object()) throw ConfigError("config root must be a table");
    std::string out;
    for (auto it = root.begin(); it != root.end(); ++it)
        if (!it.value().is_object())
            out += it.key() + " = " + value_text(it.value()) + "\n";
    for (auto it = root.begin(); it != root.end(); ++it) {
        if (!it.value().is_object()) continue;
        out += "\n[" + it.key() + "]\n";
        for (auto jt = it.value().begin(); jt != it.value().end(); ++jt)
            out += jt.key() + " = " + value_text(jt.value()) + "\n";
    }
    return out;
}

}  // namespace mlab::config
