#include "promptcast/runner.hpp"

#include <algorithm>
#include <fstream>

#include "promptcast/errors.hpp"
#include "promptcast/prompt.hpp"

namespace promptcast {
namespace {

namespace fs = std::filesystem;

std::string sanitize(const std::string& label) {
    std::string out;
    out.reserve(label.size());
    for (char c : label) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '.';
        out += ok ? c : '_';
    }
    return out;
}

void require_traces(const RunConfig& config) {
    if (config.traces.empty()) {
        throw ConfigError("no traces configured (dataset.traces)");
    }
    for (const auto& t : config.traces) {
        if (!fs::exists(t.path)) {
            throw ConfigError("trace file does not exist: " + t.path);
        }
    }
    if (!config.prompt_template_path.empty() && !fs::exists(config.prompt_template_path)) {
        throw ConfigError("prompt template does not exist: " + config.prompt_template_path);
    }
}

const DatasetSplit& find_split(const std::vector<DatasetSplit>& splits,
                               const std::string& scenario) {
    for (const auto& s : splits) {
        if (s.scenario == scenario) return s;
    }
    throw ConfigError("scenario not found in configured traces: " + scenario);
}

RunOptions make_run_options(const RunConfig& config) {
    RunOptions options;
    options.strategies = config.strategies;
    options.selection = config.selection;
    options.baselines = config.baselines;
    options.guard_multiplier = config.guard_multiplier;
    options.workers = config.backend.max_concurrency;
    return options;
}

bool needs_er_table(const RunConfig& config) {
    return std::any_of(config.strategies.begin(), config.strategies.end(), [](Strategy s) {
        return s == Strategy::icl || s == Strategy::icl_multishot;
    });
}

std::vector<DemoCandidate> pool_candidates(const DatasetSplit& split) {
    std::vector<DemoCandidate> pool;
    pool.reserve(split.demo_pool.size());
    for (std::size_t i = 0; i < split.demo_pool.size(); ++i) {
        pool.push_back(DemoCandidate{split.demo_pool[i], std::nullopt, static_cast<int>(i)});
    }
    return pool;
}

ErTable load_er_table_checked(const RunConfig& config, const std::string& scenario,
                              const CompletionBackend& backend) {
    const auto path = er_table_path(config, scenario);
    if (!fs::exists(path)) {
        throw ConfigError("er table not found for scenario \"" + scenario +
                          "\"; run precompute-er first (" + path.string() + ")");
    }
    ErTable table = load_er_table(path);
    for (const auto& [index, entry] : table) {
        if (entry.model_id != backend.model_id()) {
            throw ConfigError("er table " + path.string() + " was computed with model \"" +
                              entry.model_id + "\" but the run uses \"" + backend.model_id() +
                              "\"; re-run precompute-er");
        }
    }
    return table;
}

void attach_run_provenance(EvaluationReport& report, const RunConfig& config) {
    report.seed = config.seed;
    report.config_echo = config_to_json(config);
    report.fingerprint = config_fingerprint(config);
}

}  // namespace

std::vector<DatasetSplit> load_splits(const RunConfig& config) {
    require_traces(config);
    std::vector<DatasetSplit> splits;
    splits.reserve(config.traces.size());
    for (const auto& trace : config.traces) {
        const auto records = load_trace(trace.path, config.column_map);
        const auto samples = windowize(records, config.history_window, trace.scenario);
        splits.push_back(split_half(samples));
    }
    return splits;
}

PromptSpec make_prompt_spec(const RunConfig& config, const std::string& scenario) {
    PromptSpec spec;
    spec.scenario_label = scenario;
    spec.schema = config.column_map.features;
    if (!config.prompt_template_path.empty()) {
        spec.template_text = load_prompt_template(config.prompt_template_path);
    }
    return spec;
}

std::unique_ptr<CompletionBackend> build_backend(const RunConfig& config,
                                                 const std::vector<DatasetSplit>& splits) {
    MockPolicy policy;
    policy.mode = config.mock_mode;
    policy.seed = config.seed;
    policy.noise_scale = config.mock_noise_scale;
    if (config.backend.kind == BackendKind::mock && config.mock_mode == MockMode::noisy_oracle) {
        for (const auto& split : splits) {
            for (const auto* half : {&split.demo_pool, &split.test_set}) {
                for (const auto& sample : *half) {
                    if (sample.target_kbps) {
                        policy.answer_book[sample.origin.id()] = *sample.target_kbps;
                    }
                }
            }
        }
    }
    return make_backend(config.backend, policy);
}

fs::path run_dir(const RunConfig& config) {
    const fs::path dir = fs::path(config.out_dir) / config_fingerprint(config);
    fs::create_directories(dir);
    return dir;
}

fs::path er_table_path(const RunConfig& config, const std::string& scenario) {
    const fs::path dir = config.er_table_dir.empty() ? fs::path(config.out_dir) / "er"
                                                     : fs::path(config.er_table_dir);
    return dir / (sanitize(scenario) + ".json");
}

IngestSummary cmd_ingest(const RunConfig& config) {
    require_traces(config);
    const fs::path dir = run_dir(config) / "samples";
    fs::create_directories(dir);

    IngestSummary summary;
    for (const auto& trace : config.traces) {
        const auto records = load_trace(trace.path, config.column_map);
        const auto samples = windowize(records, config.history_window, trace.scenario);
        const auto split = split_half(samples);

        IngestScenarioSummary s;
        s.scenario = trace.scenario;
        s.samples = samples.size();
        s.demo_pool = split.demo_pool.size();
        s.test_set = split.test_set.size();
        s.dump_path = dir / (sanitize(trace.scenario) + ".jsonl");
        dump_samples_jsonl(samples, s.dump_path);
        summary.scenarios.push_back(std::move(s));
    }

    nlohmann::json schema;
    schema["h"] = config.history_window;
    schema["features"] = config_to_json(config)["dataset"]["column_map"]["features"];
    summary.schema_path = dir / "schema.json";
    std::ofstream out(summary.schema_path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write schema: " + summary.schema_path.string());
    }
    out << schema.dump(2) << '\n';
    return summary;
}

PrecomputeSummary cmd_precompute_er(const RunConfig& config) {
    const auto splits = load_splits(config);
    const auto backend = build_backend(config, splits);

    PrecomputeSummary summary;
    for (const auto& split : splits) {
        const auto path = er_table_path(config, split.scenario);
        fs::create_directories(path.parent_path());

        ErTable existing;
        if (fs::exists(path)) existing = load_er_table(path);

        PrecomputeOptions options;
        options.er_floor_kbps = config.selection.er_floor_kbps;
        options.guard_multiplier = config.guard_multiplier;
        options.workers = config.backend.max_concurrency;

        const auto pool = pool_candidates(split);
        const auto result = precompute_er(pool, *backend, make_prompt_spec(config, split.scenario),
                                          options, existing);
        save_er_table(result.table, path);

        PrecomputeScenarioSummary s;
        s.scenario = split.scenario;
        s.skipped = existing.size();
        s.computed = result.table.size() - existing.size();
        s.failed = result.failed;
        s.table_path = path;
        summary.scenarios.push_back(std::move(s));
    }
    summary.backend_requests = backend->counters().requests;
    return summary;
}

EvaluateSummary cmd_evaluate(const RunConfig& config) {
    if (config.strategies.empty()) {
        throw ConfigError("no strategies configured");
    }
    const auto splits = load_splits(config);
    const auto backend = build_backend(config, splits);
    const auto options = make_run_options(config);
    const fs::path dir = run_dir(config);

    EvaluateSummary summary;
    for (const auto& split : splits) {
        ErTable table;
        if (needs_er_table(config)) {
            table = load_er_table_checked(config, split.scenario, *backend);
        }
        auto report = run_scenario(split, *backend, make_prompt_spec(config, split.scenario),
                                   options, table);
        attach_run_provenance(report, config);

        const std::string stem = sanitize(split.scenario);
        EvaluateScenarioSummary s;
        s.scenario = split.scenario;
        s.report_path = dir / ("report-" + stem + ".json");
        write_report(report, s.report_path);
        write_plot_csv(report, dir / ("plot-" + stem + ".csv"));
        write_sample_trace(report, dir / ("trace-" + stem + ".jsonl"));
        summary.scenarios.push_back(std::move(s));
    }
    return summary;
}

EvaluateSummary cmd_compare_baselines(const RunConfig& config) {
    RunConfig all = config;
    all.strategies = {Strategy::zero_shot, Strategy::icl,    Strategy::sma,
                      Strategy::wma,       Strategy::arima,  Strategy::kalman};
    return cmd_evaluate(all);
}

SweepSummary cmd_sweep(const RunConfig& config) {
    const auto splits = load_splits(config);
    const auto backend = build_backend(config, splits);
    const auto options = make_run_options(config);
    const fs::path dir = run_dir(config);

    SweepSummary summary;
    for (const auto& split : splits) {
        const auto table = load_er_table_checked(config, split.scenario, *backend);
        auto rows = sweep_threshold(split, config.sweep_thresholds, *backend,
                                    make_prompt_spec(config, split.scenario), options, table);

        const std::string stem = sanitize(split.scenario);
        SweepScenarioSummary s;
        s.scenario = split.scenario;
        s.csv_path = dir / ("sweep-" + stem + ".csv");
        s.json_path = dir / ("sweep-" + stem + ".json");
        write_sweep_csv(rows, s.csv_path);
        std::ofstream out(s.json_path, std::ios::binary);
        if (!out) {
            throw DataError("cannot write sweep json: " + s.json_path.string());
        }
        out << sweep_to_json(rows).dump(2) << '\n';
        s.rows = std::move(rows);
        summary.scenarios.push_back(std::move(s));
    }
    return summary;
}

CrossScenarioSummary cmd_cross_scenario(const RunConfig& config) {
    if (config.cross_demo_scenario.empty() || config.cross_test_scenario.empty()) {
        throw ConfigError("cross-scenario runs need cross.demo_scenario and cross.test_scenario");
    }
    const auto splits = load_splits(config);
    const auto& demo_split = find_split(splits, config.cross_demo_scenario);
    const auto& test_split = find_split(splits, config.cross_test_scenario);
    const auto backend = build_backend(config, splits);
    const auto options = make_run_options(config);

    ErTable table;
    if (needs_er_table(config)) {
        table = load_er_table_checked(config, demo_split.scenario, *backend);
    }
    auto report =
        run_cross_scenario(demo_split, test_split, *backend,
                           make_prompt_spec(config, test_split.scenario), options, table);
    attach_run_provenance(report, config);

    const fs::path dir = run_dir(config);
    const std::string stem =
        sanitize(demo_split.scenario) + "-to-" + sanitize(test_split.scenario);
    CrossScenarioSummary summary;
    summary.demo_scenario = demo_split.scenario;
    summary.test_scenario = test_split.scenario;
    summary.report_path = dir / ("report-cross-" + stem + ".json");
    write_report(report, summary.report_path);
    write_plot_csv(report, dir / ("plot-cross-" + stem + ".csv"));
    return summary;
}

int classify_exit_code(const std::exception& error) {
    if (dynamic_cast<const ConfigError*>(&error) != nullptr ||
        dynamic_cast<const DataError*>(&error) != nullptr) {
        return 2;
    }
    return 1;
}

}  // namespace promptcast
