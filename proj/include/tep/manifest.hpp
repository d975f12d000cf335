#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tep/errors.hpp"
#include "tep/version.hpp"

namespace tep::cli {

/// FNV-1a 64-bit content hash; stable across platforms, used to fingerprint
/// input files in run manifests.
inline std::uint64_t fnv1a64(const char* data, std::size_t n) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0')
        << fnv1a64(bytes.data(), bytes.size());
    return hex.str();
}

/// Reproducibility record written next to every primary output. The block
/// doubles as a config file: parameter lines replay the run, metadata lines
/// (command, version, duration_ms, input_digest.*) are cross-checked or
/// ignored by the config loader.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> params;        // effective config values
    std::map<std::string, std::string> input_digests; // label -> 16-hex FNV-1a
    double duration_ms = 0.0;

    std::string serialize() const {
        std::ostringstream os;
        os << "# tep run manifest\n";
        os << "command=" << command << "\n";
        for (const auto& [k, v] : params) os << k << "=" << v << "\n";
        for (const auto& [k, v] : input_digests) os << "input_digest." << k << "=" << v << "\n";
        os << "version=" << version_string << "\n";
        os << "duration_ms=" << std::fixed << std::setprecision(3) << duration_ms << "\n";
        return os.str();
    }
};

inline void write_manifest(const std::string& output_path, const RunManifest& m) {
    const std::string path = output_path + ".manifest.txt";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << m.serialize();
    if (!out) throw IoError("failed writing manifest '" + path + "'");
}

class StopWatch {
public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        const auto d = std::chrono::steady_clock::now() - start_;
        return std::chrono::duration<double, std::milli>(d).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace tep::cli
