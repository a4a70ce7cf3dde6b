#include "promptcast/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "promptcast/errors.hpp"
#include "promptcast/metrics.hpp"

namespace promptcast {
namespace {

using nlohmann::json;

/// JSON has no infinity: +inf round-trips as the string "inf".
json json_double(double v) {
    if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
    return json(v);
}

double double_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ConfigError("unexpected numeric string: " + s);
    }
    return j.get<double>();
}

json optional_double_json(const std::optional<double>& v) {
    return v ? json_double(*v) : json(nullptr);
}

std::optional<double> optional_double_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return double_from_json(j);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool wants_icl(const RunOptions& options) {
    return std::any_of(options.strategies.begin(), options.strategies.end(), [](Strategy s) {
        return s == Strategy::icl || s == Strategy::icl_multishot;
    });
}

std::vector<DemoCandidate> build_pool(const std::vector<Sample>& demo_samples,
                                      const ErTable& er_table, bool require_er) {
    std::vector<DemoCandidate> pool;
    pool.reserve(demo_samples.size());
    for (std::size_t i = 0; i < demo_samples.size(); ++i) {
        DemoCandidate cand;
        cand.sample = demo_samples[i];
        cand.pool_index = static_cast<int>(i);
        const auto it = er_table.find(cand.pool_index);
        if (it != er_table.end()) {
            cand.er = it->second.er;
        } else if (require_er) {
            throw MissingEr(cand.pool_index);
        }
        pool.push_back(std::move(cand));
    }
    return pool;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception
/// wins and is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (nthreads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) threads.emplace_back(body);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

SampleStrategyRecord to_record(const PredictionOutcome& outcome) {
    SampleStrategyRecord rec;
    rec.value_kbps = outcome.value_kbps;
    rec.flags = outcome.flags;
    rec.decision = outcome.decision;
    rec.included = outcome.value_kbps.has_value();
    return rec;
}

StrategyMetrics compute_metrics(const std::vector<SampleRecord>& samples,
                                const std::string& name) {
    StrategyMetrics m;
    std::vector<double> truth;
    std::vector<double> pred;
    for (const auto& sample : samples) {
        const auto it = sample.strategies.find(name);
        if (it == sample.strategies.end()) continue;
        const auto& rec = it->second;
        m.counts.hallucinations += static_cast<std::uint64_t>(rec.flags.hallucination) +
                                   static_cast<std::uint64_t>(rec.flags.dropped_hallucinations);
        m.counts.parse_failures += static_cast<std::uint64_t>(rec.flags.parse_failure) +
                                   static_cast<std::uint64_t>(rec.flags.dropped_parse_failures);
        m.counts.backend_errors += static_cast<std::uint64_t>(rec.flags.backend_error) +
                                   static_cast<std::uint64_t>(rec.flags.dropped_backend_errors);
        if (rec.included) {
            truth.push_back(sample.truth_kbps);
            pred.push_back(*rec.value_kbps);
        } else {
            ++m.counts.excluded_outliers;
        }
    }
    m.included = truth.size();
    if (!truth.empty()) {
        m.mae = mae(truth, pred);
        m.rmse = rmse(truth, pred);
        try {
            m.r2 = r2_score(truth, pred);
        } catch (const ZeroVariance&) {
            m.r2_note = "zero variance in included truth values";
        }
    }
    return m;
}

EvaluationReport finalize_report(std::vector<SampleRecord> samples, const RunOptions& options,
                                 std::string demo_scenario, std::string test_scenario,
                                 std::string model_id) {
    EvaluationReport report;
    report.demo_scenario = std::move(demo_scenario);
    report.test_scenario = std::move(test_scenario);
    report.model_id = std::move(model_id);
    report.samples = std::move(samples);

    for (Strategy s : options.strategies) {
        const auto name = strategy_name(s);
        report.metrics[name] = compute_metrics(report.samples, name);
        const auto& counts = report.metrics[name].counts;
        report.totals.hallucinations += counts.hallucinations;
        report.totals.parse_failures += counts.parse_failures;
        report.totals.backend_errors += counts.backend_errors;
        report.totals.excluded_outliers += counts.excluded_outliers;
    }

    for (const char* icl_name : {"icl", "icl_multishot"}) {
        bool any = false;
        std::size_t used = 0;
        for (const auto& sample : report.samples) {
            const auto it = sample.strategies.find(icl_name);
            if (it == sample.strategies.end() || !it->second.decision) continue;
            any = true;
            if (it->second.decision->use_icl) ++used;
        }
        if (any) {
            report.icl_ratio = static_cast<double>(used) /
                               static_cast<double>(report.samples.size());
            break;
        }
    }
    return report;
}

EvaluationReport run_impl(const std::vector<Sample>& demo_samples,
                          const std::vector<Sample>& test_samples,
                          const std::string& demo_scenario, const std::string& test_scenario,
                          CompletionBackend& backend, const PromptSpec& prompt_spec,
                          const RunOptions& options, const ErTable& er_table) {
    const bool icl_requested = wants_icl(options);
    const auto pool = build_pool(demo_samples, er_table, icl_requested);

    std::vector<SampleRecord> records(test_samples.size());
    parallel_for(test_samples.size(), options.workers, [&](std::size_t i) {
        const Sample& test = test_samples[i];
        if (!test.target_kbps) {
            throw Error("test sample " + test.origin.id() + " has no held-out target");
        }
        SampleRecord rec;
        rec.id = test.origin.id();
        rec.truth_kbps = *test.target_kbps;

        std::optional<PredictionOutcome> zero_shot_memo;
        auto zero_shot = [&]() -> PredictionOutcome {
            if (!zero_shot_memo) {
                zero_shot_memo = predict_zero_shot(test, backend, prompt_spec,
                                                   options.guard_multiplier);
            }
            return *zero_shot_memo;
        };

        for (Strategy strategy : options.strategies) {
            PredictionOutcome outcome;
            switch (strategy) {
                case Strategy::zero_shot:
                    outcome = zero_shot();
                    break;
                case Strategy::icl: {
                    auto decision = informativeness_gate(
                        rank_top_m(test, pool, options.selection.shots), options.selection);
                    std::vector<ShotOutcome> shots;
                    shots.reserve(decision.admitted.size());
                    for (int pool_index : decision.admitted) {
                        shots.push_back(one_shot_predict(
                            test, pool[static_cast<std::size_t>(pool_index)].sample, pool_index,
                            backend, prompt_spec, options.guard_multiplier));
                    }
                    outcome =
                        assemble_icl_outcome(std::move(decision), std::move(shots), zero_shot);
                    break;
                }
                case Strategy::icl_multishot:
                    outcome = predict_icl_multishot(test, pool, options.selection, backend,
                                                    prompt_spec, options.guard_multiplier);
                    break;
                case Strategy::sma:
                    outcome.strategy = Strategy::sma;
                    outcome.value_kbps = predict_sma(test.series, options.baselines.sma_window);
                    break;
                case Strategy::wma:
                    outcome.strategy = Strategy::wma;
                    outcome.value_kbps = predict_wma(test.series, options.baselines.wma_window);
                    break;
                case Strategy::arima: {
                    outcome.strategy = Strategy::arima;
                    const auto fc = predict_arima_lite(test.series, options.baselines.arima_p);
                    outcome.value_kbps = fc.value_kbps;
                    outcome.flags.singular_fit = fc.singular;
                    break;
                }
                case Strategy::kalman:
                    outcome.strategy = Strategy::kalman;
                    outcome.value_kbps = predict_kalman(test.series, options.baselines.kalman_q,
                                                        options.baselines.kalman_r);
                    break;
            }
            rec.strategies[strategy_name(strategy)] = to_record(outcome);
        }
        records[i] = std::move(rec);
    });

    return finalize_report(std::move(records), options, demo_scenario, test_scenario,
                           backend.model_id());
}

}  // namespace

EvaluationReport run_scenario(const DatasetSplit& split, CompletionBackend& backend,
                              const PromptSpec& prompt_spec, const RunOptions& options,
                              const ErTable& er_table) {
    return run_impl(split.demo_pool, split.test_set, split.scenario, split.scenario, backend,
                    prompt_spec, options, er_table);
}

EvaluationReport run_cross_scenario(const DatasetSplit& demo_split,
                                    const DatasetSplit& test_split, CompletionBackend& backend,
                                    const PromptSpec& prompt_spec, const RunOptions& options,
                                    const ErTable& er_table) {
    if (!demo_split.demo_pool.empty() && !test_split.test_set.empty()) {
        const auto& demo = demo_split.demo_pool.front();
        const auto& test = test_split.test_set.front();
        if (demo.series.size() != test.series.size()) {
            throw SchemaMismatch("history windows differ between scenarios");
        }
        const std::size_t demo_width =
            demo.context.rows.empty() ? 0 : demo.context.rows.front().size();
        const std::size_t test_width =
            test.context.rows.empty() ? 0 : test.context.rows.front().size();
        if (demo_width != test_width) {
            throw SchemaMismatch("context schemas differ between scenarios");
        }
    }
    return run_impl(demo_split.demo_pool, test_split.test_set, demo_split.scenario,
                    test_split.scenario, backend, prompt_spec, options, er_table);
}

std::vector<SweepRow> sweep_threshold(const DatasetSplit& split, std::vector<double> thresholds,
                                      CompletionBackend& backend, const PromptSpec& prompt_spec,
                                      const RunOptions& options, const ErTable& er_table) {
    if (thresholds.empty()) {
        throw ConfigError("threshold sweep needs at least one threshold");
    }
    std::sort(thresholds.begin(), thresholds.end());
    const auto pool = build_pool(split.demo_pool, er_table, true);
    const auto& tests = split.test_set;

    struct TestCache {
        SelectionDecision base;  // ranked demos; admitted recomputed per threshold
        std::map<int, ShotOutcome> shots;
        std::optional<PredictionOutcome> zero_shot;
    };
    std::vector<TestCache> caches(tests.size());

    const double min_threshold = thresholds.front();
    parallel_for(tests.size(), options.workers, [&](std::size_t i) {
        TestCache cache;
        cache.base.ranked = rank_top_m(tests[i], pool, options.selection.shots);

        // Shots any threshold in the sweep could admit.
        for (const auto& demo : cache.base.ranked) {
            if (!demo.er) throw MissingEr(demo.pool_index);
            if (*demo.er > min_threshold) {
                cache.shots.emplace(
                    demo.pool_index,
                    one_shot_predict(tests[i], pool[static_cast<std::size_t>(demo.pool_index)].sample,
                                     demo.pool_index, backend, prompt_spec,
                                     options.guard_multiplier));
            }
        }

        // The zero-shot fallback is needed as soon as one threshold yields an
        // empty admitted set or loses every shot.
        bool need_zero_shot = false;
        for (double threshold : thresholds) {
            int admitted = 0;
            int surviving = 0;
            for (const auto& demo : cache.base.ranked) {
                if (*demo.er > threshold) {
                    ++admitted;
                    const auto it = cache.shots.find(demo.pool_index);
                    if (it != cache.shots.end() && it->second.ok()) ++surviving;
                }
            }
            if (admitted == 0 || surviving == 0) {
                need_zero_shot = true;
                break;
            }
        }
        if (need_zero_shot) {
            cache.zero_shot =
                predict_zero_shot(tests[i], backend, prompt_spec, options.guard_multiplier);
        }
        caches[i] = std::move(cache);
    });

    std::vector<SweepRow> rows;
    rows.reserve(thresholds.size());
    for (double threshold : thresholds) {
        SelectionConfig cfg = options.selection;
        cfg.er_threshold = threshold;

        std::vector<SampleRecord> records(tests.size());
        std::size_t used = 0;
        for (std::size_t i = 0; i < tests.size(); ++i) {
            const auto& cache = caches[i];
            auto decision = informativeness_gate(cache.base.ranked, cfg);
            std::vector<ShotOutcome> shots;
            shots.reserve(decision.admitted.size());
            for (int pool_index : decision.admitted) {
                shots.push_back(cache.shots.at(pool_index));
            }
            if (decision.use_icl) ++used;
            auto outcome =
                assemble_icl_outcome(std::move(decision), std::move(shots),
                                     [&]() -> PredictionOutcome {
                                         if (!cache.zero_shot) {
                                             throw Error("sweep cache missing zero-shot fallback");
                                         }
                                         return *cache.zero_shot;
                                     });
            SampleRecord rec;
            rec.id = tests[i].origin.id();
            rec.truth_kbps = *tests[i].target_kbps;
            rec.strategies["icl"] = to_record(outcome);
            records[i] = std::move(rec);
        }

        SweepRow row;
        row.threshold = threshold;
        row.icl_ratio = tests.empty() ? 0.0
                                      : static_cast<double>(used) /
                                            static_cast<double>(tests.size());
        row.metrics = compute_metrics(records, "icl");
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

json flags_to_json(const OutcomeFlags& flags) {
    json j;
    j["hallucination"] = flags.hallucination;
    j["parse_failure"] = flags.parse_failure;
    j["backend_error"] = flags.backend_error;
    j["fallback_zero_shot"] = flags.fallback_zero_shot;
    j["singular_fit"] = flags.singular_fit;
    j["dropped_hallucinations"] = flags.dropped_hallucinations;
    j["dropped_parse_failures"] = flags.dropped_parse_failures;
    j["dropped_backend_errors"] = flags.dropped_backend_errors;
    return j;
}

OutcomeFlags flags_from_json(const json& j) {
    OutcomeFlags f;
    f.hallucination = j.at("hallucination").get<bool>();
    f.parse_failure = j.at("parse_failure").get<bool>();
    f.backend_error = j.at("backend_error").get<bool>();
    f.fallback_zero_shot = j.at("fallback_zero_shot").get<bool>();
    f.singular_fit = j.at("singular_fit").get<bool>();
    f.dropped_hallucinations = j.at("dropped_hallucinations").get<int>();
    f.dropped_parse_failures = j.at("dropped_parse_failures").get<int>();
    f.dropped_backend_errors = j.at("dropped_backend_errors").get<int>();
    return f;
}

json decision_to_json(const SelectionDecision& d) {
    json ranked = json::array();
    for (const auto& demo : d.ranked) {
        json r;
        r["pool_index"] = demo.pool_index;
        r["e1"] = json_double(demo.e1);
        r["e2"] = json_double(demo.e2);
        r["er"] = demo.er ? json_double(*demo.er) : json(nullptr);
        ranked.push_back(std::move(r));
    }
    json j;
    j["ranked"] = std::move(ranked);
    j["admitted"] = d.admitted;
    j["use_icl"] = d.use_icl;
    return j;
}

SelectionDecision decision_from_json(const json& j) {
    SelectionDecision d;
    for (const auto& r : j.at("ranked")) {
        RankedDemo demo;
        demo.pool_index = r.at("pool_index").get<int>();
        demo.e1 = double_from_json(r.at("e1"));
        demo.e2 = double_from_json(r.at("e2"));
        if (!r.at("er").is_null()) demo.er = double_from_json(r.at("er"));
        d.ranked.push_back(std::move(demo));
    }
    d.admitted = j.at("admitted").get<std::vector<int>>();
    d.use_icl = j.at("use_icl").get<bool>();
    return d;
}

json counts_to_json(const StrategyCounts& c) {
    json j;
    j["hallucinations"] = c.hallucinations;
    j["parse_failures"] = c.parse_failures;
    j["backend_errors"] = c.backend_errors;
    j["excluded_outliers"] = c.excluded_outliers;
    return j;
}

StrategyCounts counts_from_json(const json& j) {
    StrategyCounts c;
    c.hallucinations = j.at("hallucinations").get<std::uint64_t>();
    c.parse_failures = j.at("parse_failures").get<std::uint64_t>();
    c.backend_errors = j.at("backend_errors").get<std::uint64_t>();
    c.excluded_outliers = j.at("excluded_outliers").get<std::uint64_t>();
    return c;
}

json metrics_to_json(const StrategyMetrics& m) {
    json j;
    j["mae"] = optional_double_json(m.mae);
    j["rmse"] = optional_double_json(m.rmse);
    j["r2"] = optional_double_json(m.r2);
    j["r2_note"] = m.r2_note;
    j["included"] = m.included;
    j["counts"] = counts_to_json(m.counts);
    return j;
}

StrategyMetrics metrics_from_json(const json& j) {
    StrategyMetrics m;
    m.mae = optional_double_from_json(j.at("mae"));
    m.rmse = optional_double_from_json(j.at("rmse"));
    m.r2 = optional_double_from_json(j.at("r2"));
    m.r2_note = j.at("r2_note").get<std::string>();
    m.included = j.at("included").get<std::uint64_t>();
    m.counts = counts_from_json(j.at("counts"));
    return m;
}

}  // namespace

json report_to_json(const EvaluationReport& report) {
    json j;
    j["demo_scenario"] = report.demo_scenario;
    j["test_scenario"] = report.test_scenario;
    j["model_id"] = report.model_id;
    j["seed"] = report.seed;
    j["fingerprint"] = report.fingerprint;
    j["config"] = report.config_echo;
    j["icl_ratio"] = optional_double_json(report.icl_ratio);
    j["totals"] = counts_to_json(report.totals);

    json metrics = json::object();
    for (const auto& [name, m] : report.metrics) metrics[name] = metrics_to_json(m);
    j["metrics"] = std::move(metrics);

    json samples = json::array();
    for (const auto& sample : report.samples) {
        json s;
        s["id"] = sample.id;
        s["truth"] = sample.truth_kbps;
        json strategies = json::object();
        for (const auto& [name, rec] : sample.strategies) {
            json r;
            r["value"] = optional_double_json(rec.value_kbps);
            r["included"] = rec.included;
            r["flags"] = flags_to_json(rec.flags);
            r["decision"] = rec.decision ? decision_to_json(*rec.decision) : json(nullptr);
            strategies[name] = std::move(r);
        }
        s["strategies"] = std::move(strategies);
        samples.push_back(std::move(s));
    }
    j["samples"] = std::move(samples);
    return j;
}

EvaluationReport report_from_json(const json& j) {
    EvaluationReport report;
    report.demo_scenario = j.at("demo_scenario").get<std::string>();
    report.test_scenario = j.at("test_scenario").get<std::string>();
    report.model_id = j.at("model_id").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.fingerprint = j.at("fingerprint").get<std::string>();
    report.config_echo = j.at("config");
    report.icl_ratio = optional_double_from_json(j.at("icl_ratio"));
    report.totals = counts_from_json(j.at("totals"));
    for (const auto& [name, m] : j.at("metrics").items()) {
        report.metrics[name] = metrics_from_json(m);
    }
    for (const auto& s : j.at("samples")) {
        SampleRecord sample;
        sample.id = s.at("id").get<std::string>();
        sample.truth_kbps = s.at("truth").get<double>();
        for (const auto& [name, r] : s.at("strategies").items()) {
            SampleStrategyRecord rec;
            rec.value_kbps = optional_double_from_json(r.at("value"));
            rec.included = r.at("included").get<bool>();
            rec.flags = flags_from_json(r.at("flags"));
            if (!r.at("decision").is_null()) rec.decision = decision_from_json(r.at("decision"));
            sample.strategies[name] = std::move(rec);
        }
        report.samples.push_back(std::move(sample));
    }
    return report;
}

void write_report(const EvaluationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write report: " + path.string());
    }
    out << report_to_json(report).dump(2) << '\n';
}

EvaluationReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read report: " + path.string());
    }
    return report_from_json(json::parse(in));
}

void write_plot_csv(const EvaluationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write plot csv: " + path.string());
    }
    std::vector<std::string> strategies;
    for (const auto& [name, _] : report.metrics) strategies.push_back(name);

    out << "t,truth";
    for (const auto& name : strategies) out << ",pred_" << name;
    out << ",flags\n";

    for (std::size_t t = 0; t < report.samples.size(); ++t) {
        const auto& sample = report.samples[t];
        out << t << ',' << format_double(sample.truth_kbps);
        std::vector<std::string> flag_notes;
        for (const auto& name : strategies) {
            out << ',';
            const auto it = sample.strategies.find(name);
            if (it == sample.strategies.end()) continue;
            if (it->second.value_kbps) out << format_double(*it->second.value_kbps);
            const auto& f = it->second.flags;
            std::string note;
            auto add = [&](bool cond, const char* label) {
                if (!cond) return;
                if (!note.empty()) note += '+';
                note += label;
            };
            add(f.hallucination, "hallucination");
            add(f.parse_failure, "parse_failure");
            add(f.backend_error, "backend_error");
            add(f.fallback_zero_shot, "fallback_zero_shot");
            add(f.singular_fit, "singular_fit");
            add(f.dropped_hallucinations > 0, "dropped_hallucinations");
            add(f.dropped_parse_failures > 0, "dropped_parse_failures");
            add(f.dropped_backend_errors > 0, "dropped_backend_errors");
            if (!note.empty()) flag_notes.push_back(name + "=" + note);
        }
        out << ',';
        for (std::size_t k = 0; k < flag_notes.size(); ++k) {
            if (k > 0) out << ';';
            out << flag_notes[k];
        }
        out << '\n';
    }
}

void write_sample_trace(const EvaluationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write sample trace: " + path.string());
    }
    const json full = report_to_json(report);
    for (const auto& sample : full.at("samples")) {
        out << sample.dump() << '\n';
    }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write sweep csv: " + path.string());
    }
    out << "threshold,icl_ratio,mae,rmse,r2,included,excluded\n";
    for (const auto& row : rows) {
        out << format_double(row.threshold) << ',' << format_double(row.icl_ratio) << ',';
        if (row.metrics.mae) out << format_double(*row.metrics.mae);
        out << ',';
        if (row.metrics.rmse) out << format_double(*row.metrics.rmse);
        out << ',';
        if (row.metrics.r2) out << format_double(*row.metrics.r2);
        out << ',' << row.metrics.included << ',' << row.metrics.counts.excluded_outliers << '\n';
    }
}

json sweep_to_json(const std::vector<SweepRow>& rows) {
    json arr = json::array();
    for (const auto& row : rows) {
        json j;
        j["threshold"] = json_double(row.threshold);
        j["icl_ratio"] = row.icl_ratio;
        j["metrics"] = metrics_to_json(row.metrics);
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace promptcast
