#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "focidose/calibrate.hpp"

namespace focidose {

// Self-contained calibration exchange object: everything a second laboratory
// needs for dose estimation, with no access to the raw calibration data.
// Versioned line-oriented text so the coefficient and covariance figures can
// be audited directly. Numbers are written in shortest round-trip form;
// serialize -> parse -> serialize is byte-identical, and re-running a seeded
// calibration reproduces the file exactly (no wall-clock metadata).
struct CalibrationArtifact {
    int format_version = 1;
    std::string tool_version;
    std::string provenance;
    std::uint64_t seed = 0;
    CalibrationResult result;

    std::string serialize() const;
    static CalibrationArtifact parse(std::string_view text);

    // Writes through a temporary file and renames; a failed run never leaves
    // a partial artifact behind.
    void save(const std::filesystem::path& path) const;
    static CalibrationArtifact load(const std::filesystem::path& path);
};

// Shortest representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

// Plain mixture parameter file for the simulate workflow (either this format
// or a full calibration artifact is accepted as a parameter source).
std::string serialize_params(const MixtureParams& params);
MixtureParams parse_params(std::string_view text);
MixtureParams load_params_or_artifact(const std::filesystem::path& path);

// Atomic text-file write used by every command that emits output files.
void atomic_write(const std::filesystem::path& path, std::string_view content);

}  // namespace focidose
