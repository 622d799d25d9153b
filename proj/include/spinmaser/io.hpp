#pragma once

// Output-directory plumbing shared by the command-line tools: directory
// creation, whole-file writes, and the run manifest. Every output directory
// carries exactly one manifest.json; together with the config it pins down
// everything needed to reproduce the outputs bit-identically.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace spinmaser {

inline constexpr const char* tool_version = "0.1.0";

inline void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + path + "': " + ec.message());
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
}

struct RunManifest {
    std::string command;
    std::string config_path;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    unsigned long long rng_seed = 0;
    double wall_time_s = 0.0;
};

inline void write_manifest(const std::string& out_dir, const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["config_path"] = m.config_path;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    j["rng_seed"] = m.rng_seed;
    j["tool_version"] = tool_version;
    j["wall_time_s"] = m.wall_time_s;
    write_text_file((std::filesystem::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

class WallClock {
  public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace spinmaser
