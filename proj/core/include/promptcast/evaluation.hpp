#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptcast/dataset.hpp"
#include "promptcast/predictors.hpp"

namespace promptcast {

struct BaselineParams {
    int sma_window = 5;
    int wma_window = 5;
    int arima_p = 2;
    double kalman_q = 1.0;
    double kalman_r = 10.0;

    bool operator==(const BaselineParams&) const = default;
};

struct RunOptions {
    std::vector<Strategy> strategies;
    SelectionConfig selection;
    BaselineParams baselines;
    double guard_multiplier = 10.0;
    int workers = 4;
};

struct StrategyCounts {
    std::uint64_t hallucinations = 0;
    std::uint64_t parse_failures = 0;
    std::uint64_t backend_errors = 0;
    std::uint64_t excluded_outliers = 0;

    bool operator==(const StrategyCounts&) const = default;
};

/// Metrics over exactly the per-sample records marked included. r2 is absent
/// (with a note) when the included truth slice has zero variance.
struct StrategyMetrics {
    std::optional<double> mae;
    std::optional<double> rmse;
    std::optional<double> r2;
    std::string r2_note;
    std::uint64_t included = 0;
    StrategyCounts counts;

    bool operator==(const StrategyMetrics&) const = default;
};

struct SampleStrategyRecord {
    std::optional<double> value_kbps;
    OutcomeFlags flags;
    std::optional<SelectionDecision> decision;
    bool included = false;

    bool operator==(const SampleStrategyRecord&) const = default;
};

struct SampleRecord {
    std::string id;
    double truth_kbps = 0.0;
    std::map<std::string, SampleStrategyRecord> strategies;

    bool operator==(const SampleRecord&) const = default;
};

struct EvaluationReport {
    std::string demo_scenario;
    std::string test_scenario;
    std::string model_id;
    std::uint64_t seed = 0;
    std::map<std::string, StrategyMetrics> metrics;
    std::optional<double> icl_ratio;  // present when an ICL strategy ran
    StrategyCounts totals;
    std::vector<SampleRecord> samples;
    nlohmann::json config_echo;
    std::string fingerprint;

    bool operator==(const EvaluationReport&) const = default;
};

/// Evaluates every test sample of the split under every requested strategy.
/// Predictions flagged as hallucinations (or otherwise failed) are excluded
/// from the metric sums but fully counted and listed.
EvaluationReport run_scenario(const DatasetSplit& split, CompletionBackend& backend,
                              const PromptSpec& prompt_spec, const RunOptions& options,
                              const ErTable& er_table);

/// Same pipeline with the demo pool and the test samples taken from
/// different scenarios. Throws SchemaMismatch when windows or context
/// schemas disagree.
EvaluationReport run_cross_scenario(const DatasetSplit& demo_split,
                                    const DatasetSplit& test_split, CompletionBackend& backend,
                                    const PromptSpec& prompt_spec, const RunOptions& options,
                                    const ErTable& er_table);

struct SweepRow {
    double threshold = 0.0;
    double icl_ratio = 0.0;
    StrategyMetrics metrics;

    bool operator==(const SweepRow&) const = default;
};

/// Evaluates the ICL strategy under each threshold, reusing cached per-shot
/// and zero-shot predictions wherever gate decisions coincide. Rows come back
/// ordered by ascending threshold.
std::vector<SweepRow> sweep_threshold(const DatasetSplit& split, std::vector<double> thresholds,
                                      CompletionBackend& backend, const PromptSpec& prompt_spec,
                                      const RunOptions& options, const ErTable& er_table);

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& json);

void write_report(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport read_report(const std::filesystem::path& path);

/// Plot-ready CSV: t, truth, one prediction column per strategy, flags.
void write_plot_csv(const EvaluationReport& report, const std::filesystem::path& path);

/// Per-sample trace, one JSON object per line.
void write_sample_trace(const EvaluationReport& report, const std::filesystem::path& path);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);

}  // namespace promptcast
