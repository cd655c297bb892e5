#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mixlinear::cli {

/// Flat `key = value` document; `#` starts a comment. Duplicate keys are errors.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

struct RunManifest {
    std::string command;
    std::string config_path;
    std::map<std::string, std::string> effective;  // every value, defaults materialized
    std::filesystem::path out_dir;
};

/// Renders the effective configuration in config-file syntax.
std::string render_manifest(const RunManifest& manifest);

/// Entry point. `args` excludes the program name. Returns the process exit code:
/// 0 success, 1 gradient check failure, 2 configuration, 3 data, 4 numeric.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mixlinear::cli
