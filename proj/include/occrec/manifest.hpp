#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace occrec {

// FNV-1a over file bytes; enough to pin artifacts in the run manifest.
inline std::uint64_t file_fnv1a(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("manifest: cannot open '" + path + "' for hashing");
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (in.gcount() < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

// Every emitted artifact is listed with a content hash, so a run can be
// reproduced (and verified) from the manifest alone.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double elapsed_ms = 0.0;

    void write(const std::string& path) const {
        nlohmann::json j;
        j["command"] = command;
        j["config"] = config;
        j["seed"] = seed;
        j["inputs"] = nlohmann::json::array();
        for (const auto& p : inputs) j["inputs"].push_back({{"path", p}, {"fnv1a", file_fnv1a(p)}});
        j["outputs"] = nlohmann::json::array();
        for (const auto& p : outputs) j["outputs"].push_back({{"path", p}, {"fnv1a", file_fnv1a(p)}});
        j["elapsed_ms"] = elapsed_ms;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("manifest: cannot open '" + path + "' for writing");
        out << j.dump(1) << '\n';
    }
};

class StageTimer {
public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace occrec
