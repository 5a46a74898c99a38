#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentpatch/experiments.hpp"

namespace latentpatch {

inline constexpr std::string_view kResultsHeader = "experiment,layer,series,mean,ci_low,ci_high,n";
inline constexpr std::string_view kPlotHeader =
    "experiment,series,layer,mean,ci_low,ci_high,half_width,n";

/// One row per (experiment, series, layer), series-major, floats at 9
/// significant digits.
std::string results_csv(std::span<const LayerSweepResult> results);
void write_results(std::span<const LayerSweepResult> results, const std::filesystem::path& path);

/// Series only; baselines, accuracy and config live in the sidecar.
std::vector<LayerSweepResult> parse_results_csv(std::string_view text);
std::vector<LayerSweepResult> read_results(const std::filesystem::path& path);

/// Compact dump with object keys sorted, so field order never matters.
std::string canonical_json(const nlohmann::json& j);
std::string sha256_hex(std::string_view data);
std::string config_hash(const nlohmann::json& config);

/// Config echo, its hash, seed, tool version, and per-experiment baselines
/// and accuracy series.
nlohmann::json sidecar(std::span<const LayerSweepResult> results, const nlohmann::json& config);
void write_sidecar(std::span<const LayerSweepResult> results, const nlohmann::json& config,
                   const std::filesystem::path& path);

/// Long format with the interval half-width spelled out.
std::string plot_data(std::span<const LayerSweepResult> results);

std::string format_float(double v);

}  // namespace latentpatch
