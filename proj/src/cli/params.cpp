#include "cavity/cli/params.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cavity::cli {

std::string to_string(ParamType type) {
    switch (type) {
        case ParamType::real: return "real";
        case ParamType::integer: return "integer";
        case ParamType::text: return "string";
        case ParamType::boolean: return "boolean";
    }
    return "unknown";
}

std::string to_string(Provenance provenance) {
    switch (provenance) {
        case Provenance::default_value: return "default";
        case Provenance::file: return "file";
        case Provenance::flag: return "flag";
    }
    return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

/// Drops a trailing "# comment" that sits outside double quotes.
std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

std::string article(ParamType type) {
    return (type == ParamType::integer ? "an " : "a ") + to_string(type);
}

std::string location(const std::string& where, std::size_t line) {
    return line > 0 ? where + ":" + std::to_string(line) : where;
}

}  // namespace

ParameterSet::ParameterSet(std::vector<ParamSpec> schema) : schema_(std::move(schema)) {
    slots_.resize(schema_.size());
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (!index_.emplace(schema_[i].key, i).second) {
            throw std::logic_error("duplicate parameter key in schema: " + schema_[i].key);
        }
        slots_[i].value = parse_value(schema_[i], schema_[i].default_value, "default", 0);
    }
}

const ParamSpec& ParameterSet::spec(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + key + "'", key);
    return schema_[it->second];
}

nlohmann::json ParameterSet::parse_value(const ParamSpec& spec, std::string_view raw,
                                         const std::string& where, std::size_t line) const {
    const std::string_view v = trim(raw);
    auto mismatch = [&]() {
        return ConfigError(location(where, line) + ": parameter '" + spec.key + "' expects " +
                               article(spec.type) + ", got '" + std::string(v) + "'",
                           spec.key, line);
    };
    switch (spec.type) {
        case ParamType::real: {
            double d = 0.0;
            const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
            if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || std::isnan(d)) {
                throw mismatch();
            }
            return d;
        }
        case ParamType::integer: {
            long long n = 0;
            const auto res = std::from_chars(v.data(), v.data() + v.size(), n);
            if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) throw mismatch();
            return n;
        }
        case ParamType::boolean: {
            std::string lower(v);
            std::transform(lower.begin(), lower.end(), lower.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") return true;
            if (lower == "false" || lower == "0" || lower == "no" || lower == "off") return false;
            throw mismatch();
        }
        case ParamType::text: {
            if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
                return std::string(v.substr(1, v.size() - 2));
            }
            return std::string(v);
        }
    }
    throw mismatch();
}

void ParameterSet::load_text(std::string_view text, const std::string& source) {
    std::istringstream in{std::string(text)};
    std::set<std::string> seen;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string_view body = trim(strip_comment(raw));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (body.front() == '[' || eq == std::string_view::npos) {
            throw ConfigError(location(source, line) + ": expected 'key = value', got '" +
                                  std::string(body) + "'",
                              "", line);
        }
        const std::string key(trim(body.substr(0, eq)));
        if (!index_.count(key)) {
            throw ConfigError(location(source, line) + ": unknown parameter '" + key + "'", key, line);
        }
        if (!seen.insert(key).second) {
            throw ConfigError(location(source, line) + ": parameter '" + key + "' is set twice", key, line);
        }
        const std::size_t i = index_.at(key);
        slots_[i] = {parse_value(schema_[i], body.substr(eq + 1), source, line), Provenance::file};
    }
}

void ParameterSet::load_manifest(const nlohmann::json& manifest, const std::string& command,
                                 const std::string& source) {
    if (!manifest.is_object() || !manifest.contains("parameters") || !manifest["parameters"].is_object()) {
        throw ConfigError(source + ": manifest has no 'parameters' object", "parameters");
    }
    if (manifest.value("command", std::string()) != command) {
        throw ConfigError(source + ": manifest records command '" + manifest.value("command", std::string()) +
                              "', not '" + command + "'",
                          "command");
    }
    for (const auto& [key, val] : manifest["parameters"].items()) {
        if (!index_.count(key)) throw ConfigError(source + ": unknown parameter '" + key + "'", key);
        const std::size_t i = index_.at(key);
        const ParamSpec& s = schema_[i];
        const bool ok = (s.type == ParamType::real && val.is_number()) ||
                        (s.type == ParamType::integer && val.is_number_integer()) ||
                        (s.type == ParamType::boolean && val.is_boolean()) ||
                        (s.type == ParamType::text && val.is_string());
        if (!ok) {
            throw ConfigError(source + ": parameter '" + key + "' expects " + article(s.type) +
                                  ", got " + val.dump(),
                              key);
        }
        slots_[i] = {s.type == ParamType::real ? nlohmann::json(val.get<double>()) : val, Provenance::file};
    }
}

void ParameterSet::load_file(const std::filesystem::path& path, const std::string& command) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'", "config");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json manifest;
        try {
            manifest = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(path.string() + ": invalid JSON manifest: " + e.what(), "config");
        }
        load_manifest(manifest, command, path.string());
    } else {
        load_text(text, path.string());
    }
}

void ParameterSet::set_flag(const std::string& key, const std::string& value) {
    const ParamSpec& s = spec(key);
    slots_[index_.at(key)] = {parse_value(s, value, "--" + key, 0), Provenance::flag};
}

const nlohmann::json& ParameterSet::value(const std::string& key, ParamType type) const {
    const ParamSpec& s = spec(key);
    if (s.type != type) {
        throw std::logic_error("parameter '" + key + "' is a " + to_string(s.type) + ", read as " +
                               to_string(type));
    }
    return slots_[index_.at(key)].value;
}

double ParameterSet::real(const std::string& key) const {
    return value(key, ParamType::real).get<double>();
}

long long ParameterSet::integer(const std::string& key) const {
    return value(key, ParamType::integer).get<long long>();
}

const std::string& ParameterSet::text(const std::string& key) const {
    return value(key, ParamType::text).get_ref<const std::string&>();
}

bool ParameterSet::boolean(const std::string& key) const {
    return value(key, ParamType::boolean).get<bool>();
}

Provenance ParameterSet::provenance(const std::string& key) const {
    spec(key);
    return slots_[index_.at(key)].origin;
}

nlohmann::ordered_json ParameterSet::values_json() const {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < schema_.size(); ++i) out[schema_[i].key] = slots_[i].value;
    return out;
}

nlohmann::ordered_json ParameterSet::provenance_json() const {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < schema_.size(); ++i) out[schema_[i].key] = to_string(slots_[i].origin);
    return out;
}

}  // namespace cavity::cli
