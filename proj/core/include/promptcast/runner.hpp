#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "promptcast/config.hpp"
#include "promptcast/dataset.hpp"
#include "promptcast/evaluation.hpp"

namespace promptcast {

/// Loads, windowizes and splits every configured trace.
std::vector<DatasetSplit> load_splits(const RunConfig& config);

/// Rendering context for one scenario under this config.
PromptSpec make_prompt_spec(const RunConfig& config, const std::string& scenario);

/// Backend per config; for the noisy_oracle mock the answer book is filled
/// from every windowized sample of every configured trace.
std::unique_ptr<CompletionBackend> build_backend(const RunConfig& config,
                                                 const std::vector<DatasetSplit>& splits);

/// Output directory stamped with the config fingerprint, created on demand.
std::filesystem::path run_dir(const RunConfig& config);

/// Er table location for one scenario; stable across config tweaks so
/// precompute runs stay resumable.
std::filesystem::path er_table_path(const RunConfig& config, const std::string& scenario);

struct IngestScenarioSummary {
    std::string scenario;
    std::size_t samples = 0;
    std::size_t demo_pool = 0;
    std::size_t test_set = 0;
    std::filesystem::path dump_path;
};

struct IngestSummary {
    std::vector<IngestScenarioSummary> scenarios;
    std::filesystem::path schema_path;
};

/// ingest: canonical JSON Lines dump plus per-scenario counts.
IngestSummary cmd_ingest(const RunConfig& config);

struct PrecomputeScenarioSummary {
    std::string scenario;
    std::size_t computed = 0;
    std::size_t skipped = 0;   // entries already present, not re-queried
    std::vector<int> failed;   // backend failures, rerun to fill
    std::filesystem::path table_path;
};

struct PrecomputeSummary {
    std::vector<PrecomputeScenarioSummary> scenarios;
    std::uint64_t backend_requests = 0;
};

/// precompute-er: zero-shot error rates for every demo pool; resumable.
PrecomputeSummary cmd_precompute_er(const RunConfig& config);

struct EvaluateScenarioSummary {
    std::string scenario;
    std::filesystem::path report_path;
};

struct EvaluateSummary {
    std::vector<EvaluateScenarioSummary> scenarios;
};

/// evaluate: full report, plot CSV and per-sample trace per scenario.
EvaluateSummary cmd_evaluate(const RunConfig& config);

/// compare-baselines: evaluate with every strategy enabled.
EvaluateSummary cmd_compare_baselines(const RunConfig& config);

struct SweepScenarioSummary {
    std::string scenario;
    std::filesystem::path csv_path;
    std::filesystem::path json_path;
    std::vector<SweepRow> rows;
};

struct SweepSummary {
    std::vector<SweepScenarioSummary> scenarios;
};

/// sweep: ICL metrics and ratio per threshold, rows ordered by threshold.
SweepSummary cmd_sweep(const RunConfig& config);

struct CrossScenarioSummary {
    std::string demo_scenario;
    std::string test_scenario;
    std::filesystem::path report_path;
};

/// cross-scenario: demo pool from one scenario, tests from another.
CrossScenarioSummary cmd_cross_scenario(const RunConfig& config);

/// Exit code policy: 2 for configuration and data errors, 1 otherwise.
int classify_exit_code(const std::exception& error);

}  // namespace promptcast
