// Typed parameter sets resolved from defaults, a config file and command-line
// flags, with the origin of every value tracked for the run manifest.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cavity::cli {

enum class ParamType { real, integer, text, boolean };
enum class Provenance { default_value, file, flag };

std::string to_string(ParamType type);
std::string to_string(Provenance provenance);

struct ParamSpec {
    std::string key;
    ParamType type = ParamType::real;
    std::string default_value;  ///< parsed with the same rules as file values
    std::string help;
};

/// Raised for unknown keys, malformed lines and type mismatches.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::string key, std::size_t line = 0)
        : std::runtime_error(message), key_(std::move(key)), line_(line) {}

    const std::string& key() const { return key_; }
    std::size_t line() const { return line_; }

private:
    std::string key_;
    std::size_t line_;
};

class ParameterSet {
public:
    explicit ParameterSet(std::vector<ParamSpec> schema);

    /// Key-value text: "key = value" lines, '#' comments, blank lines ignored.
    void load_text(std::string_view text, const std::string& source);
    /// A key-value file, or a run manifest (JSON) whose command must match.
    void load_file(const std::filesystem::path& path, const std::string& command);
    void load_manifest(const nlohmann::json& manifest, const std::string& command,
                       const std::string& source);
    void set_flag(const std::string& key, const std::string& value);

    double real(const std::string& key) const;
    long long integer(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    bool boolean(const std::string& key) const;

    Provenance provenance(const std::string& key) const;
    bool has(const std::string& key) const { return index_.count(key) != 0; }
    const std::vector<ParamSpec>& schema() const { return schema_; }

    /// Typed values in schema order.
    nlohmann::ordered_json values_json() const;
    nlohmann::ordered_json provenance_json() const;

private:
    struct Slot {
        nlohmann::json value;
        Provenance origin = Provenance::default_value;
    };

    const ParamSpec& spec(const std::string& key) const;
    nlohmann::json parse_value(const ParamSpec& spec, std::string_view raw, const std::string& where,
                               std::size_t line) const;
    const nlohmann::json& value(const std::string& key, ParamType type) const;

    std::vector<ParamSpec> schema_;
    std::map<std::string, std::size_t> index_;
    std::vector<Slot> slots_;
};

}  // namespace cavity::cli
