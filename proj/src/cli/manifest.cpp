#include "cavity/cli/manifest.hpp"

#include "cavity/digest.hpp"
#include "cavity/version.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace cavity::cli {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunManifest make_manifest(const std::string& command, const std::vector<std::string>& argv,
                          const ParameterSet& params) {
    RunManifest m;
    m.command = command;
    m.argv = argv;
    m.parameters = params.values_json();
    m.provenance = params.provenance_json();
    m.version = version_string();
    m.started_utc = utc_timestamp();
    return m;
}

namespace {

void digest_into(std::vector<FileDigest>& out, const std::vector<std::filesystem::path>& paths) {
    for (const auto& p : paths) out.push_back({p.string(), sha256_file(p)});
}

nlohmann::ordered_json digests_json(const std::vector<FileDigest>& files) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return arr;
}

}  // namespace

void record_inputs(RunManifest& manifest, const std::vector<std::filesystem::path>& paths) {
    digest_into(manifest.inputs, paths);
}

void record_outputs(RunManifest& manifest, const std::vector<std::filesystem::path>& paths) {
    digest_into(manifest.outputs, paths);
}

nlohmann::ordered_json to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["argv"] = m.argv;
    j["version"] = m.version;
    j["parameters"] = m.parameters;
    j["provenance"] = m.provenance;
    j["started_utc"] = m.started_utc;
    j["wall_seconds"] = m.wall_seconds;
    j["inputs"] = digests_json(m.inputs);
    j["outputs"] = digests_json(m.outputs);
    j["status"] = m.status;
    return j;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
    out << to_json(manifest).dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing manifest '" + path.string() + "'");
}

}  // namespace cavity::cli
