#include "promptcast/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "promptcast/errors.hpp"

namespace promptcast {
namespace {

using nlohmann::json;

double number_or_inf(const json& j, const char* what) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
        throw ConfigError(std::string(what) + ": expected a number or \"inf\", got \"" + s + "\"");
    }
    return j.get<double>();
}

json inf_aware(double v) {
    if (std::isinf(v)) return json("inf");
    return json(v);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& scope) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError("unknown config key: " + scope + key);
    }
}

FeatureKind parse_kind(const std::string& kind) {
    if (kind == "numeric") return FeatureKind::numeric;
    if (kind == "categorical") return FeatureKind::categorical;
    throw ConfigError("unknown feature kind: " + kind);
}

MockMode parse_mock_mode(const std::string& mode) {
    if (mode == "echo_last") return MockMode::echo_last;
    if (mode == "linear_extrapolate") return MockMode::linear_extrapolate;
    if (mode == "noisy_oracle") return MockMode::noisy_oracle;
    throw ConfigError("unknown mock mode: " + mode);
}

const char* mock_mode_string(MockMode mode) {
    switch (mode) {
        case MockMode::echo_last: return "echo_last";
        case MockMode::linear_extrapolate: return "linear_extrapolate";
        case MockMode::noisy_oracle: return "noisy_oracle";
    }
    return "unknown";
}

}  // namespace

double threshold_from_string(const std::string& text) {
    if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("threshold must be a number or \"inf\", got \"" + text + "\"");
    }
}

RunConfig default_run_config() {
    RunConfig config;
    config.column_map.dl_bitrate_column = "DL_bitrate";
    config.column_map.features = {
        {"uplink throughput", "UL_bitrate", FeatureKind::numeric, "kbps"},
        {"serving cell RSRP", "RSRP", FeatureKind::numeric, "dBm"},
        {"neighbor cell RSRP", "NRxRSRP", FeatureKind::numeric, "dBm"},
        {"network mode", "NetworkMode", FeatureKind::categorical, ""},
    };
    return config;
}

RunConfig parse_run_config(const json& j) {
    RunConfig config = default_run_config();
    reject_unknown_keys(j,
                        {"h", "seed", "out_dir", "dataset", "selection", "backend", "mock",
                         "strategies", "baselines", "prompt", "er_table_dir", "sweep", "cross"},
                        "");

    if (j.contains("h")) config.history_window = j.at("h").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        reject_unknown_keys(d, {"traces", "column_map"}, "dataset.");
        if (d.contains("traces")) {
            config.traces.clear();
            for (const auto& t : d.at("traces")) {
                reject_unknown_keys(t, {"path", "scenario"}, "dataset.traces.");
                config.traces.push_back(
                    {t.at("path").get<std::string>(), t.at("scenario").get<std::string>()});
            }
        }
        if (d.contains("column_map")) {
            const auto& cm = d.at("column_map");
            reject_unknown_keys(cm, {"dl_bitrate", "missing_sentinels", "features"},
                                "dataset.column_map.");
            if (cm.contains("dl_bitrate")) {
                config.column_map.dl_bitrate_column = cm.at("dl_bitrate").get<std::string>();
            }
            if (cm.contains("missing_sentinels")) {
                config.column_map.missing_sentinels =
                    cm.at("missing_sentinels").get<std::vector<std::string>>();
            }
            if (cm.contains("features")) {
                config.column_map.features.clear();
                for (const auto& f : cm.at("features")) {
                    reject_unknown_keys(f, {"name", "column", "kind", "unit"},
                                        "dataset.column_map.features.");
                    FeatureSpec spec;
                    spec.name = f.at("name").get<std::string>();
                    spec.column = f.at("column").get<std::string>();
                    spec.kind = parse_kind(f.at("kind").get<std::string>());
                    if (f.contains("unit")) spec.unit = f.at("unit").get<std::string>();
                    config.column_map.features.push_back(std::move(spec));
                }
            }
        }
    }

    if (j.contains("selection")) {
        const auto& s = j.at("selection");
        reject_unknown_keys(s, {"shots", "er_threshold", "er_floor_kbps"}, "selection.");
        if (s.contains("shots")) config.selection.shots = s.at("shots").get<int>();
        if (s.contains("er_threshold")) {
            config.selection.er_threshold = number_or_inf(s.at("er_threshold"), "er_threshold");
        }
        if (s.contains("er_floor_kbps")) {
            config.selection.er_floor_kbps = s.at("er_floor_kbps").get<double>();
        }
    }

    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        reject_unknown_keys(b,
                            {"kind", "endpoint", "model", "temperature", "max_tokens",
                             "timeout_ms", "max_concurrency", "retries", "api_key_env",
                             "transcript_path"},
                            "backend.");
        if (b.contains("kind")) {
            const auto kind = b.at("kind").get<std::string>();
            if (kind == "mock") {
                config.backend.kind = BackendKind::mock;
            } else if (kind == "remote") {
                config.backend.kind = BackendKind::remote;
            } else {
                throw ConfigError("unknown backend kind: " + kind);
            }
        }
        if (b.contains("endpoint")) config.backend.endpoint = b.at("endpoint").get<std::string>();
        if (b.contains("model")) config.backend.model = b.at("model").get<std::string>();
        if (b.contains("temperature")) {
            config.backend.temperature = b.at("temperature").get<double>();
        }
        if (b.contains("max_tokens")) config.backend.max_tokens = b.at("max_tokens").get<int>();
        if (b.contains("timeout_ms")) config.backend.timeout_ms = b.at("timeout_ms").get<int>();
        if (b.contains("max_concurrency")) {
            config.backend.max_concurrency = b.at("max_concurrency").get<int>();
        }
        if (b.contains("retries")) config.backend.retries = b.at("retries").get<int>();
        if (b.contains("api_key_env")) {
            config.backend.api_key_env = b.at("api_key_env").get<std::string>();
        }
        if (b.contains("transcript_path")) {
            config.backend.transcript_path = b.at("transcript_path").get<std::string>();
        }
    }

    if (j.contains("mock")) {
        const auto& m = j.at("mock");
        reject_unknown_keys(m, {"mode", "noise_scale"}, "mock.");
        if (m.contains("mode")) config.mock_mode = parse_mock_mode(m.at("mode").get<std::string>());
        if (m.contains("noise_scale")) config.mock_noise_scale = m.at("noise_scale").get<double>();
    }

    if (j.contains("strategies")) {
        config.strategies.clear();
        for (const auto& s : j.at("strategies")) {
            config.strategies.push_back(parse_strategy(s.get<std::string>()));
        }
    }

    if (j.contains("baselines")) {
        const auto& b = j.at("baselines");
        reject_unknown_keys(b, {"sma_window", "wma_window", "arima_p", "kalman_q", "kalman_r"},
                            "baselines.");
        if (b.contains("sma_window")) config.baselines.sma_window = b.at("sma_window").get<int>();
        if (b.contains("wma_window")) config.baselines.wma_window = b.at("wma_window").get<int>();
        if (b.contains("arima_p")) config.baselines.arima_p = b.at("arima_p").get<int>();
        if (b.contains("kalman_q")) config.baselines.kalman_q = b.at("kalman_q").get<double>();
        if (b.contains("kalman_r")) config.baselines.kalman_r = b.at("kalman_r").get<double>();
    }

    if (j.contains("prompt")) {
        const auto& p = j.at("prompt");
        reject_unknown_keys(p, {"template_path", "guard_multiplier"}, "prompt.");
        if (p.contains("template_path")) {
            config.prompt_template_path = p.at("template_path").get<std::string>();
        }
        if (p.contains("guard_multiplier")) {
            config.guard_multiplier = p.at("guard_multiplier").get<double>();
        }
    }

    if (j.contains("er_table_dir")) config.er_table_dir = j.at("er_table_dir").get<std::string>();

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        reject_unknown_keys(s, {"thresholds"}, "sweep.");
        if (s.contains("thresholds")) {
            config.sweep_thresholds.clear();
            for (const auto& t : s.at("thresholds")) {
                config.sweep_thresholds.push_back(number_or_inf(t, "sweep threshold"));
            }
        }
    }

    if (j.contains("cross")) {
        const auto& c = j.at("cross");
        reject_unknown_keys(c, {"demo_scenario", "test_scenario"}, "cross.");
        if (c.contains("demo_scenario")) {
            config.cross_demo_scenario = c.at("demo_scenario").get<std::string>();
        }
        if (c.contains("test_scenario")) {
            config.cross_test_scenario = c.at("test_scenario").get<std::string>();
        }
    }

    if (config.history_window < 2) throw ConfigError("h must be >= 2");
    if (config.selection.shots < 0) throw ConfigError("selection.shots must be >= 0");
    if (config.selection.er_floor_kbps <= 0) throw ConfigError("er_floor_kbps must be > 0");
    if (config.guard_multiplier <= 0) throw ConfigError("guard_multiplier must be > 0");
    if (config.backend.max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (config.backend.retries < 0) throw ConfigError("retries must be >= 0");
    if (config.backend.temperature < 0) throw ConfigError("temperature must be >= 0");
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

void apply_overrides(RunConfig& config, const CliOverrides& overrides) {
    if (overrides.backend_kind) {
        if (*overrides.backend_kind == "mock") {
            config.backend.kind = BackendKind::mock;
        } else if (*overrides.backend_kind == "remote") {
            config.backend.kind = BackendKind::remote;
        } else {
            throw ConfigError("unknown backend kind: " + *overrides.backend_kind);
        }
    }
    if (overrides.er_threshold) config.selection.er_threshold = *overrides.er_threshold;
    if (overrides.shots) config.selection.shots = *overrides.shots;
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.strategies) {
        config.strategies.clear();
        for (const auto& name : *overrides.strategies) {
            config.strategies.push_back(parse_strategy(name));
        }
    }
    if (overrides.sweep_thresholds) config.sweep_thresholds = *overrides.sweep_thresholds;
    if (overrides.cross_demo_scenario) {
        config.cross_demo_scenario = *overrides.cross_demo_scenario;
    }
    if (overrides.cross_test_scenario) {
        config.cross_test_scenario = *overrides.cross_test_scenario;
    }
}

nlohmann::json config_to_json(const RunConfig& config) {
    json j;
    j["h"] = config.history_window;
    j["seed"] = config.seed;
    j["out_dir"] = config.out_dir;

    json traces = json::array();
    for (const auto& t : config.traces) {
        traces.push_back({{"path", t.path}, {"scenario", t.scenario}});
    }
    json features = json::array();
    for (const auto& f : config.column_map.features) {
        features.push_back({{"name", f.name},
                            {"column", f.column},
                            {"kind", f.kind == FeatureKind::numeric ? "numeric" : "categorical"},
                            {"unit", f.unit}});
    }
    j["dataset"] = {{"traces", std::move(traces)},
                    {"column_map",
                     {{"dl_bitrate", config.column_map.dl_bitrate_column},
                      {"missing_sentinels", config.column_map.missing_sentinels},
                      {"features", std::move(features)}}}};

    j["selection"] = {{"shots", config.selection.shots},
                      {"er_threshold", inf_aware(config.selection.er_threshold)},
                      {"er_floor_kbps", config.selection.er_floor_kbps}};

    j["backend"] = {{"kind", config.backend.kind == BackendKind::mock ? "mock" : "remote"},
                    {"endpoint", config.backend.endpoint},
                    {"model", config.backend.model},
                    {"temperature", config.backend.temperature},
                    {"max_tokens", config.backend.max_tokens},
                    {"timeout_ms", config.backend.timeout_ms},
                    {"max_concurrency", config.backend.max_concurrency},
                    {"retries", config.backend.retries},
                    {"api_key_env", config.backend.api_key_env},
                    {"transcript_path", config.backend.transcript_path}};

    j["mock"] = {{"mode", mock_mode_string(config.mock_mode)},
                 {"noise_scale", config.mock_noise_scale}};

    json strategies = json::array();
    for (Strategy s : config.strategies) strategies.push_back(strategy_name(s));
    j["strategies"] = std::move(strategies);

    j["baselines"] = {{"sma_window", config.baselines.sma_window},
                      {"wma_window", config.baselines.wma_window},
                      {"arima_p", config.baselines.arima_p},
                      {"kalman_q", config.baselines.kalman_q},
                      {"kalman_r", config.baselines.kalman_r}};

    j["prompt"] = {{"template_path", config.prompt_template_path},
                   {"guard_multiplier", config.guard_multiplier}};

    j["er_table_dir"] = config.er_table_dir;

    json sweeps = json::array();
    for (double t : config.sweep_thresholds) sweeps.push_back(inf_aware(t));
    j["sweep"] = {{"thresholds", std::move(sweeps)}};

    j["cross"] = {{"demo_scenario", config.cross_demo_scenario},
                  {"test_scenario", config.cross_test_scenario}};
    return j;
}

std::string config_fingerprint(const RunConfig& config) {
    const std::string dump = config_to_json(config).dump();
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace promptcast
