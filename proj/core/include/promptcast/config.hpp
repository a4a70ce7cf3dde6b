#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptcast/csv.hpp"
#include "promptcast/evaluation.hpp"
#include "promptcast/gateway.hpp"

namespace promptcast {

struct TraceSpec {
    std::string path;
    std::string scenario;

    bool operator==(const TraceSpec&) const = default;
};

/// Resolved run configuration. Every report embeds the resolved form plus its
/// fingerprint, so a run is reproducible from the report alone.
struct RunConfig {
    int history_window = 5;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::vector<TraceSpec> traces;
    ColumnMap column_map;
    SelectionConfig selection;
    BackendConfig backend;
    MockMode mock_mode = MockMode::noisy_oracle;
    double mock_noise_scale = 0.0;
    std::vector<Strategy> strategies = {Strategy::zero_shot, Strategy::icl};
    BaselineParams baselines;
    double guard_multiplier = 10.0;
    std::string prompt_template_path;
    std::string er_table_dir;  // defaults to <out_dir>/er
    std::vector<double> sweep_thresholds = {0.05, 0.15, 0.35, 0.5, 0.8};
    std::string cross_demo_scenario;
    std::string cross_test_scenario;

    bool operator==(const RunConfig&) const = default;
};

/// Command-line values that win over the config file.
struct CliOverrides {
    std::optional<std::string> backend_kind;
    std::optional<double> er_threshold;
    std::optional<int> shots;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::vector<std::string>> strategies;
    std::optional<std::vector<double>> sweep_thresholds;
    std::optional<std::string> cross_demo_scenario;
    std::optional<std::string> cross_test_scenario;
};

/// Defaults only; the stock 5G trace column mapping and feature set.
RunConfig default_run_config();

RunConfig parse_run_config(const nlohmann::json& json);
RunConfig load_run_config(const std::filesystem::path& path);

void apply_overrides(RunConfig& config, const CliOverrides& overrides);

/// Resolved-config echo embedded into every report.
nlohmann::json config_to_json(const RunConfig& config);

/// Stable FNV-1a hash of the resolved config, as 16 hex digits.
std::string config_fingerprint(const RunConfig& config);

/// Accepts a number or the string "inf"; threshold knobs use it.
double threshold_from_string(const std::string& text);

}  // namespace promptcast
