#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promptcast/config.hpp"
#include "promptcast/errors.hpp"
#include "promptcast/runner.hpp"

namespace {

using namespace promptcast;

struct CliState {
    std::string config_path;
    std::string threshold_text;
    std::string strategies_text;
    std::string thresholds_text;
    CliOverrides overrides;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

RunConfig resolve_config(CliState& state) {
    RunConfig config =
        state.config_path.empty() ? default_run_config() : load_run_config(state.config_path);
    if (!state.threshold_text.empty()) {
        state.overrides.er_threshold = threshold_from_string(state.threshold_text);
    }
    if (!state.strategies_text.empty()) {
        state.overrides.strategies = split_list(state.strategies_text);
    }
    if (!state.thresholds_text.empty()) {
        std::vector<double> values;
        for (const auto& item : split_list(state.thresholds_text)) {
            values.push_back(threshold_from_string(item));
        }
        state.overrides.sweep_thresholds = values;
    }
    apply_overrides(config, state.overrides);
    return config;
}

void add_common_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--config", state.config_path, "Run config file (JSON)");
    cmd->add_option_function<std::string>(
        "--backend", [&state](const std::string& v) { state.overrides.backend_kind = v; },
        "Completion backend: mock or remote");
    cmd->add_option("--threshold", state.threshold_text,
                    "Informativeness threshold (number or \"inf\")");
    cmd->add_option_function<int>(
        "--shots", [&state](int v) { state.overrides.shots = v; },
        "Demonstrations to rank per test case");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&state](std::uint64_t v) { state.overrides.seed = v; }, "Run seed");
    cmd->add_option_function<std::string>(
        "--out", [&state](const std::string& v) { state.overrides.out_dir = v; },
        "Output directory");
    cmd->add_option("--strategies", state.strategies_text,
                    "Comma-separated strategy list (zero_shot,icl,icl_multishot,sma,wma,arima,kalman)");
}

int dispatch(const std::string& command, CliState& state) {
    RunConfig config = resolve_config(state);
    if (command == "ingest") {
        const auto summary = cmd_ingest(config);
        for (const auto& s : summary.scenarios) {
            std::cout << "scenario \"" << s.scenario << "\": " << s.samples << " samples ("
                      << s.demo_pool << " demo pool, " << s.test_set << " test)\n"
                      << "  dump: " << s.dump_path.string() << "\n";
        }
        std::cout << "schema: " << summary.schema_path.string() << "\n";
        return 0;
    }
    if (command == "precompute-er") {
        const auto summary = cmd_precompute_er(config);
        for (const auto& s : summary.scenarios) {
            std::cout << "scenario \"" << s.scenario << "\": " << s.computed << " computed, "
                      << s.skipped << " skipped, " << s.failed.size() << " failed\n"
                      << "  table: " << s.table_path.string() << "\n";
        }
        std::cout << "backend requests: " << summary.backend_requests << "\n";
        bool any_failed = false;
        for (const auto& s : summary.scenarios) any_failed |= !s.failed.empty();
        return any_failed ? 1 : 0;
    }
    if (command == "evaluate" || command == "compare-baselines") {
        const auto summary =
            command == "evaluate" ? cmd_evaluate(config) : cmd_compare_baselines(config);
        for (const auto& s : summary.scenarios) {
            std::cout << "scenario \"" << s.scenario << "\": " << s.report_path.string() << "\n";
        }
        return 0;
    }
    if (command == "sweep") {
        const auto summary = cmd_sweep(config);
        for (const auto& s : summary.scenarios) {
            std::cout << "scenario \"" << s.scenario << "\": " << s.csv_path.string() << "\n";
            for (const auto& row : s.rows) {
                std::cout << "  threshold " << row.threshold << ": icl ratio " << row.icl_ratio
                          << "\n";
            }
        }
        return 0;
    }
    if (command == "cross-scenario") {
        const auto summary = cmd_cross_scenario(config);
        std::cout << "demos \"" << summary.demo_scenario << "\" on tests \""
                  << summary.test_scenario << "\": " << summary.report_path.string() << "\n";
        return 0;
    }
    throw ConfigError("unknown command: " + command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM-based mobile traffic forecasting harness"};
    app.require_subcommand(1);

    CliState state;
    const std::vector<std::string> commands = {"ingest",  "precompute-er",     "evaluate",
                                               "sweep",   "compare-baselines", "cross-scenario"};
    const std::vector<std::string> descriptions = {
        "Load traces, windowize, split and dump canonical samples",
        "Precompute zero-shot error rates for every demo pool",
        "Run configured strategies and write evaluation reports",
        "Evaluate the ICL strategy across a threshold grid",
        "Evaluate every strategy for a side-by-side comparison",
        "Use one scenario's demo pool against another's test set"};
    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto* cmd = app.add_subcommand(commands[i], descriptions[i]);
        add_common_options(cmd, state);
        if (commands[i] == "sweep") {
            cmd->add_option("--thresholds", state.thresholds_text,
                            "Comma-separated threshold grid");
        }
        if (commands[i] == "cross-scenario") {
            cmd->add_option_function<std::string>(
                "--demo-scenario",
                [&state](const std::string& v) { state.overrides.cross_demo_scenario = v; },
                "Scenario providing the demo pool");
            cmd->add_option_function<std::string>(
                "--test-scenario",
                [&state](const std::string& v) { state.overrides.cross_test_scenario = v; },
                "Scenario providing the test set");
        }
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return dispatch(app.get_subcommands().front()->get_name(), state);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_exit_code(e);
    }
}
