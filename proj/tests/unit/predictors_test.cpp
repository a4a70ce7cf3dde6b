#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "promptcast/errors.hpp"
#include "promptcast/predictors.hpp"
#include "../support/oracles.hpp"

using namespace promptcast;

namespace {

PromptSpec bare_spec() {
    PromptSpec spec;
    spec.scenario_label = "synthetic";
    return spec;
}

Sample sample_of(std::vector<double> values, double target, std::size_t row = 0) {
    Sample s;
    s.series = ThroughputSeries(std::move(values));
    s.target_kbps = target;
    s.origin = SampleOrigin{"scen", row};
    return s;
}

std::vector<DemoCandidate> pool_with_er(const std::vector<std::pair<std::vector<double>, double>>&
                                            entries,
                                        const std::vector<double>& ers) {
    std::vector<DemoCandidate> pool;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        DemoCandidate cand;
        cand.sample = sample_of(entries[i].first, entries[i].second, i);
        cand.pool_index = static_cast<int>(i);
        cand.er = ers[i];
        pool.push_back(std::move(cand));
    }
    return pool;
}

/// Replies with the demo target found in one-shot prompts; zero-shot prompts
/// get the last input value back.
class DemoTargetEcho final : public CompletionBackend {
public:
    explicit DemoTargetEcho(const BackendConfig& c) : CompletionBackend(c) {}
    std::string model_id() const override { return "demo-target-echo"; }

protected:
    std::string do_complete(const PromptBundle& prompt) override {
        static const std::string marker = "Answer: PREDICTION: ";
        const auto pos = prompt.text.find(marker);
        if (pos != std::string::npos) {
            const auto end = prompt.text.find('\n', pos);
            return prompt.text.substr(pos + 8, end - pos - 8);
        }
        return "PREDICTION: " +
               format_throughput(prompt.input_series_kbps.back(), prompt.scale) + ' ' +
               prompt.scale.label;
    }
};

/// One-shot prompts hallucinate; zero-shot prompts behave.
class ShotHallucinator final : public CompletionBackend {
public:
    explicit ShotHallucinator(const BackendConfig& c) : CompletionBackend(c) {}
    std::string model_id() const override { return "shot-hallucinator"; }

protected:
    std::string do_complete(const PromptBundle& prompt) override {
        if (prompt.shot_count > 0) return "PREDICTION: 99999999999 kbps";
        return "PREDICTION: " +
               format_throughput(prompt.input_series_kbps.back(), prompt.scale) + ' ' +
               prompt.scale.label;
    }
};

}  // namespace

TEST_CASE("sma and wma examples") {
    CHECK(predict_sma(ThroughputSeries({1, 2, 3}), 3) == 2.0);
    CHECK(predict_wma(ThroughputSeries({1, 2, 3}), 3) ==
          doctest::Approx(14.0 / 6.0).epsilon(1e-12));
    CHECK(predict_sma(ThroughputSeries({7, 7, 7, 7}), 3) == 7.0);
    CHECK(predict_wma(ThroughputSeries({7, 7, 7, 7}), 3) == 7.0);
    CHECK(predict_sma(ThroughputSeries({1, 2, 3, 4, 10}), 2) == 7.0);
    CHECK_THROWS_AS(predict_sma(ThroughputSeries({1, 2}), 3), WindowTooLarge);
    CHECK_THROWS_AS(predict_wma(ThroughputSeries({1, 2}), 3), WindowTooLarge);
}

TEST_CASE("arima-lite examples") {
    CHECK(predict_arima_lite(ThroughputSeries({1, 2, 3, 4, 5}), 1).value_kbps ==
          doctest::Approx(6.0).epsilon(1e-9));
    CHECK(predict_arima_lite(ThroughputSeries({1, 2, 3, 4, 5}), 2).value_kbps ==
          doctest::Approx(6.0).epsilon(1e-9));
    CHECK(predict_arima_lite(ThroughputSeries({4, 4, 4, 4, 4}), 1).value_kbps ==
          doctest::Approx(4.0).epsilon(1e-9));
    CHECK_THROWS_AS(predict_arima_lite(ThroughputSeries({1, 2, 3}), 2), WindowTooSmall);
    CHECK_THROWS_AS(predict_arima_lite(ThroughputSeries({1, 2, 3}), 0), ConfigError);
}

TEST_CASE("kalman filter limiting behaviour") {
    CHECK(predict_kalman(ThroughputSeries({5, 5, 5, 5, 5}), 1.0, 10.0) ==
          doctest::Approx(5.0).epsilon(1e-6));

    // q = 0 pins the filter to the first observation
    CHECK(predict_kalman(ThroughputSeries({10, 90, 20, 70, 40}), 0.0, 1000.0) ==
          doctest::Approx(10.0).epsilon(1e-9));

    // q >> r chases the last observation
    CHECK(predict_kalman(ThroughputSeries({10, 90, 20, 70, 40}), 1e9, 1e-3) ==
          doctest::Approx(40.0).epsilon(1e-4));
}

TEST_CASE("kalman matches a hand-stepped filter") {
    std::mt19937_64 rng(67);
    std::uniform_real_distribution<double> value(0.0, 1e4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> values;
        for (int i = 0; i < 8; ++i) values.push_back(value(rng));
        const ThroughputSeries series(values);

        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size());
        const double unit = var > 0.0 ? var : 1.0;

        CHECK(predict_kalman(series, 1.0, 10.0) ==
              doctest::Approx(oracle::stepped_kalman(values, 1.0 * unit, 10.0 * unit))
                  .epsilon(1e-12));
    }
    CHECK_THROWS_AS(predict_kalman(ThroughputSeries({1, 2}), -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(predict_kalman(ThroughputSeries({1, 2}), 1.0, 0.0), ConfigError);
}

TEST_CASE("baselines shift with a translated series") {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> value(0.0, 1e4);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> values;
        for (int i = 0; i < 6; ++i) values.push_back(value(rng));
        const double shift = value(rng);
        std::vector<double> shifted = values;
        for (auto& v : shifted) v += shift;
        const ThroughputSeries a(values);
        const ThroughputSeries b(shifted);

        CHECK(predict_sma(b, 4) == doctest::Approx(predict_sma(a, 4) + shift).epsilon(1e-9));
        CHECK(predict_wma(b, 4) == doctest::Approx(predict_wma(a, 4) + shift).epsilon(1e-9));
        CHECK(predict_kalman(b, 1.0, 10.0) ==
              doctest::Approx(predict_kalman(a, 1.0, 10.0) + shift).epsilon(1e-9));
    }

    // a shifted linear ramp forecasts the shifted next point
    CHECK(predict_arima_lite(ThroughputSeries({11, 12, 13, 14, 15}), 1).value_kbps ==
          doctest::Approx(16.0).epsilon(1e-9));
}

TEST_CASE("zero-shot prediction parses, flags and guards") {
    BackendConfig config;
    const auto test = sample_of({100, 200, 250, 280, 300}, 0);

    MockPolicy policy;
    policy.mode = MockMode::echo_last;
    MockBackend echo(config, policy);
    const auto ok = predict_zero_shot(test, echo, bare_spec(), 10.0);
    CHECK(ok.value_kbps == 300.0);
    CHECK_FALSE(ok.flags.terminal_failure());

    class Mumbler final : public CompletionBackend {
    public:
        explicit Mumbler(const BackendConfig& c) : CompletionBackend(c) {}
        std::string model_id() const override { return "mumbler"; }

    protected:
        std::string do_complete(const PromptBundle&) override { return "I think maybe..."; }
    };
    Mumbler mumbler(config);
    const auto failed = predict_zero_shot(test, mumbler, bare_spec(), 10.0);
    CHECK_FALSE(failed.value_kbps.has_value());
    CHECK(failed.flags.parse_failure);

    class Shouter final : public CompletionBackend {
    public:
        explicit Shouter(const BackendConfig& c) : CompletionBackend(c) {}
        std::string model_id() const override { return "shouter"; }

    protected:
        std::string do_complete(const PromptBundle&) override {
            return "PREDICTION: 6000 kbps";  // 20x the prompt maximum
        }
    };
    Shouter shouter(config);
    const auto out_of_range = predict_zero_shot(test, shouter, bare_spec(), 10.0);
    CHECK_FALSE(out_of_range.value_kbps.has_value());
    CHECK(out_of_range.flags.hallucination);

    class Unreachable final : public CompletionBackend {
    public:
        explicit Unreachable(const BackendConfig& c) : CompletionBackend(c) {}
        std::string model_id() const override { return "unreachable"; }

    protected:
        std::string do_complete(const PromptBundle&) override {
            throw Timeout("simulated outage");
        }
    };
    Unreachable dead(config);
    const auto errored = predict_zero_shot(test, dead, bare_spec(), 10.0);
    CHECK_FALSE(errored.value_kbps.has_value());
    CHECK(errored.flags.backend_error);
}

TEST_CASE("batch calibration averages the admitted shots") {
    BackendConfig config;
    DemoTargetEcho backend(config);
    SelectionConfig sel;
    sel.shots = 2;
    sel.er_threshold = 0.0;  // both demos admitted (er > 0)

    const auto pool = pool_with_er({{{100, 110, 120, 130, 140}, 10.0},
                                    {{100, 111, 121, 131, 141}, 12.0}},
                                   {0.5, 0.5});
    const auto test = sample_of({100, 110, 120, 130, 140}, 0);
    const auto outcome = predict_icl(test, pool, sel, backend, bare_spec(), 1000.0);
    REQUIRE(outcome.value_kbps.has_value());
    CHECK(*outcome.value_kbps == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(outcome.decision->use_icl);
    CHECK(outcome.shots.size() == 2);

    SelectionConfig one_shot = sel;
    one_shot.shots = 1;
    const auto single = predict_icl(test, pool, one_shot, backend, bare_spec(), 1000.0);
    CHECK(*single.value_kbps == 10.0);  // mean of one is the shot itself
}

TEST_CASE("the calibrated mean matches the arithmetic mean within 1e-12") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> value(0.0, 1e5);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        std::vector<ShotOutcome> shots;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            ShotOutcome shot;
            shot.pool_index = i;
            shot.status = ReplyStatus::ok;
            shot.value_kbps = value(rng);
            sum += *shot.value_kbps;
            shots.push_back(shot);
        }
        SelectionDecision decision;
        decision.use_icl = true;
        for (int i = 0; i < n; ++i) decision.admitted.push_back(i);
        const auto outcome = assemble_icl_outcome(decision, shots, [] {
            return PredictionOutcome{};
        });
        const double expected = sum / n;
        CHECK(std::abs(*outcome.value_kbps - expected) <=
              1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("shot order never changes the calibrated result") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> value(0.0, 1e5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ShotOutcome> shots;
        for (int i = 0; i < 4; ++i) {
            ShotOutcome shot;
            shot.pool_index = i;
            shot.status = ReplyStatus::ok;
            shot.value_kbps = value(rng);
            shots.push_back(shot);
        }
        SelectionDecision decision;
        decision.use_icl = true;
        decision.admitted = {0, 1, 2, 3};

        const auto base = assemble_icl_outcome(decision, shots, [] {
            return PredictionOutcome{};
        });
        auto shuffled = shots;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto permuted = assemble_icl_outcome(decision, shuffled, [] {
            return PredictionOutcome{};
        });
        CHECK(*base.value_kbps == *permuted.value_kbps);
    }
}

TEST_CASE("a closed gate falls back to zero-shot") {
    BackendConfig config;
    MockPolicy policy;
    policy.mode = MockMode::echo_last;
    MockBackend backend(config, policy);

    SelectionConfig sel;
    sel.shots = 2;
    sel.er_threshold = 0.9;  // nothing passes
    const auto pool = pool_with_er({{{100, 110, 120, 130, 140}, 150.0},
                                    {{200, 210, 220, 230, 240}, 250.0}},
                                   {0.1, 0.2});
    const auto test = sample_of({100, 110, 120, 130, 140}, 0);
    const auto outcome = predict_icl(test, pool, sel, backend, bare_spec(), 10.0);
    CHECK(outcome.flags.fallback_zero_shot);
    CHECK_FALSE(outcome.decision->use_icl);
    CHECK(*outcome.value_kbps == 140.0);  // echo_last zero-shot
}

TEST_CASE("all shots hallucinating falls back with full accounting") {
    BackendConfig config;
    ShotHallucinator backend(config);
    SelectionConfig sel;
    sel.shots = 2;
    sel.er_threshold = 0.0;

    const auto pool = pool_with_er({{{100, 110, 120, 130, 140}, 150.0},
                                    {{101, 111, 121, 131, 141}, 151.0}},
                                   {0.5, 0.6});
    const auto test = sample_of({100, 110, 120, 130, 140}, 0);
    const auto outcome = predict_icl(test, pool, sel, backend, bare_spec(), 10.0);
    CHECK(outcome.flags.fallback_zero_shot);
    CHECK(outcome.flags.dropped_hallucinations == 2);
    CHECK(*outcome.value_kbps == 140.0);  // zero-shot echo of the last value
    CHECK(outcome.decision->use_icl);     // the gate was open, the shots failed
}

TEST_CASE("an infinite threshold reduces icl to zero-shot everywhere") {
    BackendConfig config;
    MockPolicy policy;
    policy.mode = MockMode::linear_extrapolate;
    MockBackend backend(config, policy);

    SelectionConfig sel;
    sel.shots = 2;
    sel.er_threshold = std::numeric_limits<double>::infinity();

    const auto pool = pool_with_er({{{100, 110, 120, 130, 140}, 150.0},
                                    {{200, 210, 220, 230, 240}, 250.0}},
                                   {std::numeric_limits<double>::infinity(), 5.0});
    for (double start : {100.0, 500.0, 900.0}) {
        const auto test =
            sample_of({start, start + 10, start + 20, start + 30, start + 40}, 0);
        const auto icl = predict_icl(test, pool, sel, backend, bare_spec(), 10.0);
        const auto zs = predict_zero_shot(test, backend, bare_spec(), 10.0);
        CHECK(icl.value_kbps == zs.value_kbps);
        CHECK_FALSE(icl.decision->use_icl);
    }
}

TEST_CASE("value is absent exactly when a terminal failure flag is set") {
    BackendConfig config;
    const auto test = sample_of({100, 200, 250, 280, 300}, 0);

    std::vector<PredictionOutcome> outcomes;
    MockPolicy policy;
    policy.mode = MockMode::echo_last;
    MockBackend echo(config, policy);
    outcomes.push_back(predict_zero_shot(test, echo, bare_spec(), 10.0));

    class Mumbler final : public CompletionBackend {
    public:
        explicit Mumbler(const BackendConfig& c) : CompletionBackend(c) {}
        std::string model_id() const override { return "mumbler"; }

    protected:
        std::string do_complete(const PromptBundle&) override { return "hmm"; }
    };
    Mumbler mumbler(config);
    outcomes.push_back(predict_zero_shot(test, mumbler, bare_spec(), 10.0));

    for (const auto& outcome : outcomes) {
        CHECK(outcome.value_kbps.has_value() == !outcome.flags.terminal_failure());
    }
}

TEST_CASE("multishot ablation keeps the most similar demo first and parses one reply") {
    BackendConfig config;
    DemoTargetEcho backend(config);
    SelectionConfig sel;
    sel.shots = 2;
    sel.er_threshold = 0.0;

    const auto pool = pool_with_er({{{100, 110, 120, 130, 140}, 10.0},
                                    {{300, 310, 320, 330, 340}, 12.0}},
                                   {0.5, 0.5});
    const auto test = sample_of({100, 110, 120, 130, 140}, 0);
    const auto outcome =
        predict_icl_multishot(test, pool, sel, backend, bare_spec(), 1000.0);
    // DemoTargetEcho answers with the first demo target it sees: the closest demo
    CHECK(*outcome.value_kbps == 10.0);
    CHECK(outcome.decision->admitted.front() == 0);
}

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::zero_shot, Strategy::icl, Strategy::icl_multishot, Strategy::sma,
                       Strategy::wma, Strategy::arima, Strategy::kalman}) {
        CHECK(parse_strategy(strategy_name(s)) == s);
    }
    CHECK_THROWS_AS(parse_strategy("make_it_up"), ConfigError);
}
