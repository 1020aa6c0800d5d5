#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "renorm/cfrac.hpp"

namespace renorm::cli {

inline constexpr const char* kVersion = "1.0.0";

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericalError = 3;
inline constexpr int kBudgetError = 4;

const std::vector<std::string>& experiments();

// Flat key/value parameters for one experiment, defaults filled in.
struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, std::string> values;

    const std::string& get(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    double real(const std::string& key) const;
    std::vector<std::int64_t> integers(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
};

// "golden:N", "cf:a1,a2,...[,inf]" or "rational:p/q".
ContinuedFraction parse_theta(const std::string& spec);

// `key = value` lines, '#' comments.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Defaults, then the file, then overrides; unknown keys and bad values throw a config error.
ExperimentConfig make_config(const std::string& experiment, const std::map<std::string, std::string>& file,
                             const std::map<std::string, std::string>& overrides);

struct OutputFile {
    std::string name;
    std::string content;
};

struct ManifestEntry {
    std::string name;
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct RunManifest {
    ExperimentConfig config;
    std::string version = kVersion;
    double wall_clock = 0;  // seconds
    std::vector<ManifestEntry> files;
};

// Compute every output of the experiment in memory.
std::vector<OutputFile> compute(const ExperimentConfig& config);

// compute(), then write outputs and manifest.json under out_dir atomically.
RunManifest run(const ExperimentConfig& config);

std::string sha256_hex(const std::string& data);

// Entry point: `<subcommand> --config <path> [--key value ...]`; returns the exit code.
int main(int argc, char** argv);

}  // namespace renorm::cli
