#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tep/errors.hpp"

namespace tep::cli {

enum class OptType { integer, real, boolean, text };

/// One accepted flag / config key: its type, default (textual), an optional
/// numeric range, and a help line (with units where applicable).
struct OptionSpec {
    std::string name;
    OptType type = OptType::text;
    std::string default_value;
    bool required = false;
    std::string help;
    std::optional<double> min; // inclusive bounds for numeric options
    std::optional<double> max;

    OptionSpec() = default;
    OptionSpec(std::string name_, OptType type_, std::string default_value_,
               bool required_, std::string help_, std::optional<double> min_ = {},
               std::optional<double> max_ = {})
        : name(std::move(name_)), type(type_), default_value(std::move(default_value_)),
          required(required_), help(std::move(help_)), min(min_), max(max_) {}
};

using OptionSchema = std::vector<OptionSpec>;

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline const char* type_name(OptType t) {
    switch (t) {
        case OptType::integer: return "integer";
        case OptType::real: return "real";
        case OptType::boolean: return "boolean";
        default: return "text";
    }
}

inline long long parse_integer(const std::string& key, const std::string& text) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || text.empty())
        throw ConfigError("key '" + key + "': expected integer, got '" + text + "'");
    return v;
}

inline double parse_real(const std::string& key, const std::string& text) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || text.empty())
        throw ConfigError("key '" + key + "': expected real number, got '" + text + "'");
    return v;
}

inline bool parse_boolean(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("key '" + key + "': expected boolean (true/false), got '" + text + "'");
}

inline std::string range_text(const OptionSpec& spec) {
    std::ostringstream os;
    if (spec.min && spec.max)
        os << " (accepted: " << *spec.min << " .. " << *spec.max << ")";
    else if (spec.min)
        os << " (accepted: >= " << *spec.min << ")";
    else if (spec.max)
        os << " (accepted: <= " << *spec.max << ")";
    return os.str();
}

} // namespace detail

/// Effective key -> value table after merging defaults, config file, and
/// flags. Values stay textual; typed getters validate on access.
class Config {
public:
    Config() = default;
    Config(OptionSchema schema, std::map<std::string, std::string> values)
        : schema_(std::move(schema)), values_(std::move(values)) {}

    bool has(const std::string& key) const {
        auto it = values_.find(key);
        return it != values_.end() && !it->second.empty();
    }

    const std::string& get_text(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end())
            throw InternalError("config key '" + key + "' is not in the schema");
        return it->second;
    }

    long long get_int(const std::string& key) const {
        return detail::parse_integer(key, get_text(key));
    }

    double get_real(const std::string& key) const {
        return detail::parse_real(key, get_text(key));
    }

    bool get_bool(const std::string& key) const {
        return detail::parse_boolean(key, get_text(key));
    }

    const std::map<std::string, std::string>& values() const { return values_; }
    const OptionSchema& schema() const { return schema_; }

private:
    OptionSchema schema_;
    std::map<std::string, std::string> values_;
};

/// Reads a plain-text key=value file ('#' starts a comment, blank lines
/// ignored). Returns pairs in file order so later assignments win.
inline std::vector<std::pair<std::string, std::string>>
read_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config file '" + path + "' line " +
                              std::to_string(lineno) + ": expected key=value");
        pairs.emplace_back(detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
    return pairs;
}

/// Splits raw CLI tokens into --key/value pairs and positionals. Supports
/// `--key value` and `--key=value`; a flag followed by another flag (or
/// nothing) is treated as boolean true. When a schema is supplied, that
/// fallback is rejected for flags the schema types as non-boolean, so
/// `--output` with no value errors instead of naming a file "true".
struct ParsedArgs {
    std::vector<std::string> positional;
    std::vector<std::pair<std::string, std::string>> flags;
};

inline ParsedArgs split_args(const std::vector<std::string>& args,
                             const OptionSchema* schema = nullptr) {
    auto requires_value = [schema](const std::string& name) {
        if (name == "config") return true; // global text flag, never a switch
        if (!schema) return false;
        for (const OptionSpec& s : *schema)
            if (s.name == name) return s.type != OptType::boolean;
        return false; // unknown flags fall through to the schema check later
    };
    ParsedArgs out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& tok = args[i];
        if (tok.rfind("--", 0) == 0) {
            const std::string body = tok.substr(2);
            if (body.empty()) throw ConfigError("empty flag '--'");
            const std::size_t eq = body.find('=');
            if (eq != std::string::npos) {
                out.flags.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            } else if (i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0) {
                out.flags.emplace_back(body, args[++i]);
            } else if (requires_value(body)) {
                throw ConfigError("flag '--" + body + "' requires a value");
            } else {
                out.flags.emplace_back(body, "true");
            }
        } else {
            out.positional.push_back(tok);
        }
    }
    return out;
}

// Keys every config file may carry because run manifests double as replay
// configs; they are cross-checked or ignored rather than rejected.
inline bool is_manifest_metadata(const std::string& key) {
    return key == "command" || key == "version" || key == "duration_ms" ||
           key.rfind("input_digest.", 0) == 0;
}

/// Merges defaults <- config file <- flags (later wins), rejects unknown
/// keys, checks required keys, and type/range-checks every value.
inline Config parse_config(const std::string& command, const OptionSchema& schema,
                           const std::vector<std::pair<std::string, std::string>>& flags,
                           const std::string& config_path) {
    std::map<std::string, std::string> values;
    auto find_spec = [&schema](const std::string& key) -> const OptionSpec* {
        for (const OptionSpec& s : schema)
            if (s.name == key) return &s;
        return nullptr;
    };
    for (const OptionSpec& s : schema) values[s.name] = s.default_value;

    if (!config_path.empty()) {
        for (const auto& [key, value] : read_key_value_file(config_path)) {
            if (is_manifest_metadata(key)) {
                if (key == "command" && value != command)
                    throw ConfigError("config file was recorded for command '" + value +
                                      "', not '" + command + "'");
                continue;
            }
            if (!find_spec(key))
                throw ConfigError("unknown key '" + key + "' for 'tep " + command + "'");
            values[key] = value;
        }
    }

    for (const auto& [key, value] : flags) {
        if (key == "config") continue; // consumed before merging
        if (!find_spec(key))
            throw ConfigError("unknown flag '--" + key + "' for 'tep " + command + "'");
        values[key] = value;
    }

    for (const OptionSpec& s : schema) {
        const std::string& v = values[s.name];
        if (v.empty()) {
            if (s.required)
                throw ConfigError("missing required flag '--" + s.name + "'");
            continue;
        }
        double num = 0.0;
        switch (s.type) {
            case OptType::integer:
                num = static_cast<double>(detail::parse_integer(s.name, v));
                break;
            case OptType::real:
                num = detail::parse_real(s.name, v);
                break;
            case OptType::boolean:
                detail::parse_boolean(s.name, v);
                continue;
            default:
                continue;
        }
        if ((s.min && num < *s.min) || (s.max && num > *s.max))
            throw ConfigError("key '" + s.name + "': value " + v + " out of range" +
                              detail::range_text(s));
    }

    return Config(schema, std::move(values));
}

/// Renders the flag table for --help: name, type, default, description.
inline std::string format_help(const std::string& command, const std::string& summary,
                               const OptionSchema& schema) {
    std::ostringstream os;
    os << "usage: tep " << command << " [flags]\n" << summary << "\n\nflags:\n";
    for (const OptionSpec& s : schema) {
        std::string head = "  --" + s.name + " <" + detail::type_name(s.type) + ">";
        os << head;
        for (std::size_t i = head.size(); i < 26; ++i) os << ' ';
        os << s.help;
        if (!s.default_value.empty())
            os << " (default: " << s.default_value << ")";
        else if (s.required)
            os << " (required)";
        os << "\n";
    }
    os << "  --config <text>         key=value config file; flags take precedence\n";
    os << "  --help                  show this message\n";
    return os.str();
}

} // namespace tep::cli
