#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "sgdlab/runner.hpp"

namespace sgdlab {

/// FNV-1a 64-bit content hash, rendered as fixed-width hex in manifests.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

std::string to_json_text(const CltReport& rep);
std::string to_json_text(const RhoSweepReport& rep);
std::string to_json_text(const RateReport& rep);
std::string to_json_text(const OracleReport& rep);
std::string to_json_text(const FeasibleRegionReport& rep);
std::string to_json_text(const ConditionReport& rep);

std::string deviations_csv(const CltReport& rep);
std::string rates_csv(const std::vector<RatePoint>& points);
std::string qq_csv(const CltReport& rep);

/// Writes config.json, report.json, the CSV set appropriate for the report
/// kind, and manifest.json (config hash, version, seeds, wall clock,
/// per-file checksums). Returns the manifest text.
std::string write_run_artifacts(const ExperimentConfig& cfg,
                                const std::string& report_json,
                                const std::vector<std::pair<std::string, std::string>>& files,
                                double wall_clock_seconds);

/// Recomputes every checksum listed in dir/manifest.json. Returns true when
/// all files match; a description of the first mismatch lands in *error.
bool verify_manifest(const std::string& dir, std::string* error = nullptr);

}  // namespace sgdlab
