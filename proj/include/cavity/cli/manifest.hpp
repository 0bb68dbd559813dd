// Run manifests: everything needed to reproduce a CLI invocation and to check
// its outputs.

#pragma once

#include "cavity/cli/params.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace cavity::cli {

struct FileDigest {
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::ordered_json parameters;
    nlohmann::ordered_json provenance;
    std::string version;
    std::string started_utc;
    double wall_seconds = 0.0;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    std::string status = "ok";
};

RunManifest make_manifest(const std::string& command, const std::vector<std::string>& argv,
                          const ParameterSet& params);

/// Digests each path now; call after the files are complete.
void record_inputs(RunManifest& manifest, const std::vector<std::filesystem::path>& paths);
void record_outputs(RunManifest& manifest, const std::vector<std::filesystem::path>& paths);

nlohmann::ordered_json to_json(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

std::string utc_timestamp();

}  // namespace cavity::cli
