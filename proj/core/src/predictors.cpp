#include "promptcast/predictors.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "promptcast/errors.hpp"

namespace promptcast {

std::string strategy_name(Strategy strategy) {
    switch (strategy) {
        case Strategy::zero_shot: return "zero_shot";
        case Strategy::icl: return "icl";
        case Strategy::icl_multishot: return "icl_multishot";
        case Strategy::sma: return "sma";
        case Strategy::wma: return "wma";
        case Strategy::arima: return "arima";
        case Strategy::kalman: return "kalman";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::zero_shot, Strategy::icl, Strategy::icl_multishot, Strategy::sma,
                       Strategy::wma, Strategy::arima, Strategy::kalman}) {
        if (strategy_name(s) == name) return s;
    }
    throw ConfigError("unknown strategy: " + name);
}

namespace {

const DemoCandidate& candidate_by_index(const std::vector<DemoCandidate>& pool, int pool_index) {
    const auto i = static_cast<std::size_t>(pool_index);
    if (i < pool.size() && pool[i].pool_index == pool_index) return pool[i];
    for (const auto& cand : pool) {
        if (cand.pool_index == pool_index) return cand;
    }
    throw EmptyPool("pool index " + std::to_string(pool_index) + " not found in pool");
}

PredictionOutcome from_reply(Strategy strategy, const ParsedReply& reply) {
    PredictionOutcome outcome;
    outcome.strategy = strategy;
    switch (reply.status) {
        case ReplyStatus::ok:
            outcome.value_kbps = reply.value_kbps;
            break;
        case ReplyStatus::parse_failure:
            outcome.flags.parse_failure = true;
            break;
        case ReplyStatus::out_of_range:
            outcome.flags.hallucination = true;
            break;
    }
    return outcome;
}

}  // namespace

PredictionOutcome predict_zero_shot(const Sample& test, CompletionBackend& backend,
                                    const PromptSpec& prompt_spec, double guard_multiplier) {
    const auto bundle = render_prompt(test, {}, prompt_spec);
    try {
        const std::string raw = backend.complete(bundle);
        return from_reply(Strategy::zero_shot, parse_reply(raw, bundle, guard_multiplier));
    } catch (const BackendError&) {
        PredictionOutcome outcome;
        outcome.strategy = Strategy::zero_shot;
        outcome.flags.backend_error = true;
        return outcome;
    }
}

ShotOutcome one_shot_predict(const Sample& test, const Sample& demo, int pool_index,
                             CompletionBackend& backend, const PromptSpec& prompt_spec,
                             double guard_multiplier) {
    ShotOutcome shot;
    shot.pool_index = pool_index;
    const auto bundle = render_prompt(test, {demo}, prompt_spec);
    try {
        const std::string raw = backend.complete(bundle);
        const auto reply = parse_reply(raw, bundle, guard_multiplier);
        shot.status = reply.status;
        if (reply.status == ReplyStatus::ok) shot.value_kbps = reply.value_kbps;
    } catch (const BackendError&) {
        shot.backend_error = true;
    }
    return shot;
}

PredictionOutcome assemble_icl_outcome(SelectionDecision decision,
                                       std::vector<ShotOutcome> shots,
                                       const std::function<PredictionOutcome()>& zero_shot) {
    PredictionOutcome outcome;
    outcome.strategy = Strategy::icl;

    OutcomeFlags flags;
    std::vector<std::pair<int, double>> surviving_shots;
    for (const auto& shot : shots) {
        if (shot.backend_error) {
            ++flags.dropped_backend_errors;
        } else if (shot.status == ReplyStatus::parse_failure) {
            ++flags.dropped_parse_failures;
        } else if (shot.status == ReplyStatus::out_of_range) {
            ++flags.dropped_hallucinations;
        } else if (shot.value_kbps) {
            surviving_shots.emplace_back(shot.pool_index, *shot.value_kbps);
        }
    }
    // Sum in pool order so the mean is bit-identical under any shot permutation.
    std::sort(surviving_shots.begin(), surviving_shots.end());
    double sum = 0.0;
    for (const auto& [index, value] : surviving_shots) sum += value;
    const auto surviving = static_cast<int>(surviving_shots.size());

    if (!decision.use_icl || surviving == 0) {
        outcome = zero_shot();
        outcome.strategy = Strategy::icl;
        outcome.flags.fallback_zero_shot = true;
        outcome.flags.dropped_hallucinations = flags.dropped_hallucinations;
        outcome.flags.dropped_parse_failures = flags.dropped_parse_failures;
        outcome.flags.dropped_backend_errors = flags.dropped_backend_errors;
    } else {
        outcome.value_kbps = sum / surviving;
        outcome.flags = flags;
    }
    outcome.decision = std::move(decision);
    outcome.shots = std::move(shots);
    return outcome;
}

PredictionOutcome predict_icl(const Sample& test, const std::vector<DemoCandidate>& pool,
                              const SelectionConfig& config, CompletionBackend& backend,
                              const PromptSpec& prompt_spec, double guard_multiplier) {
    auto ranked = rank_top_m(test, pool, config.shots);
    auto decision = informativeness_gate(std::move(ranked), config);

    std::vector<ShotOutcome> shots;
    shots.reserve(decision.admitted.size());
    for (int pool_index : decision.admitted) {
        const auto& cand = candidate_by_index(pool, pool_index);
        shots.push_back(one_shot_predict(test, cand.sample, pool_index, backend, prompt_spec,
                                         guard_multiplier));
    }
    return assemble_icl_outcome(std::move(decision), std::move(shots), [&] {
        return predict_zero_shot(test, backend, prompt_spec, guard_multiplier);
    });
}

PredictionOutcome predict_icl_multishot(const Sample& test,
                                        const std::vector<DemoCandidate>& pool,
                                        const SelectionConfig& config,
                                        CompletionBackend& backend,
                                        const PromptSpec& prompt_spec, double guard_multiplier) {
    auto ranked = rank_top_m(test, pool, config.shots);
    auto decision = informativeness_gate(std::move(ranked), config);

    if (!decision.use_icl) {
        auto outcome = predict_zero_shot(test, backend, prompt_spec, guard_multiplier);
        outcome.strategy = Strategy::icl_multishot;
        outcome.flags.fallback_zero_shot = true;
        outcome.decision = std::move(decision);
        return outcome;
    }

    std::vector<Sample> demos;  // admitted, most similar first
    demos.reserve(decision.admitted.size());
    for (int pool_index : decision.admitted) {
        demos.push_back(candidate_by_index(pool, pool_index).sample);
    }

    PredictionOutcome outcome;
    const auto bundle = render_prompt(test, demos, prompt_spec);
    try {
        const std::string raw = backend.complete(bundle);
        outcome = from_reply(Strategy::icl_multishot, parse_reply(raw, bundle, guard_multiplier));
    } catch (const BackendError&) {
        outcome.flags.backend_error = true;
    }
    outcome.strategy = Strategy::icl_multishot;
    outcome.decision = std::move(decision);
    return outcome;
}

double predict_sma(const ThroughputSeries& series, int window) {
    if (window < 1 || static_cast<std::size_t>(window) > series.size()) {
        throw WindowTooLarge("sma window " + std::to_string(window) + " over a series of " +
                             std::to_string(series.size()));
    }
    const auto& v = series.values();
    double sum = 0.0;
    for (std::size_t i = v.size() - static_cast<std::size_t>(window); i < v.size(); ++i) {
        sum += v[i];
    }
    return sum / window;
}

double predict_wma(const ThroughputSeries& series, int window) {
    if (window < 1 || static_cast<std::size_t>(window) > series.size()) {
        throw WindowTooLarge("wma window " + std::to_string(window) + " over a series of " +
                             std::to_string(series.size()));
    }
    const auto& v = series.values();
    const std::size_t start = v.size() - static_cast<std::size_t>(window);
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (int k = 1; k <= window; ++k) {  // oldest weight 1
        weighted += k * v[start + static_cast<std::size_t>(k - 1)];
        weight_sum += k;
    }
    return weighted / weight_sum;
}

ArimaForecast predict_arima_lite(const ThroughputSeries& series, int ar_order) {
    if (ar_order < 1) {
        throw ConfigError("arima order must be >= 1");
    }
    const auto h = static_cast<int>(series.size());
    if (h < ar_order + 2) {
        throw WindowTooSmall("arima(" + std::to_string(ar_order) + ",1,0) needs a window of " +
                             std::to_string(ar_order + 2) + ", got " + std::to_string(h));
    }

    std::vector<double> diffs(series.size() - 1);
    for (std::size_t k = 0; k + 1 < series.size(); ++k) diffs[k] = series[k + 1] - series[k];

    const int rows = static_cast<int>(diffs.size()) - ar_order;
    Eigen::MatrixXd design(rows, ar_order + 1);
    Eigen::VectorXd response(rows);
    for (int r = 0; r < rows; ++r) {
        const int t = ar_order + r;
        response(r) = diffs[static_cast<std::size_t>(t)];
        design(r, 0) = 1.0;
        for (int j = 1; j <= ar_order; ++j) {
            design(r, j) = diffs[static_cast<std::size_t>(t - j)];
        }
    }
    // Minimum-norm least squares keeps rank-deficient windows well behaved.
    const Eigen::VectorXd beta = design.completeOrthogonalDecomposition().solve(response);

    double next_diff = beta(0);
    for (int j = 1; j <= ar_order; ++j) {
        next_diff += beta(j) * diffs[diffs.size() - static_cast<std::size_t>(j)];
    }
    const double forecast = series.back() + next_diff;
    if (!std::isfinite(forecast)) {
        return ArimaForecast{series.back(), true};
    }
    return ArimaForecast{forecast, false};
}

double predict_kalman(const ThroughputSeries& series, double process_variance,
                      double observation_variance) {
    if (process_variance < 0.0 || observation_variance <= 0.0) {
        throw ConfigError("kalman needs q >= 0 and r > 0");
    }
    const auto& v = series.values();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double unit = var > 0.0 ? var : 1.0;

    const double q = process_variance * unit;
    const double r = observation_variance * unit;

    // Prior anchored at the first observation with zero prior variance.
    double state = v.front();
    double cov = 0.0;
    for (std::size_t t = 1; t < v.size(); ++t) {
        cov += q;
        const double gain = cov / (cov + r);
        state += gain * (v[t] - state);
        cov *= 1.0 - gain;
    }
    return state;  // random-walk state: the filtered mean is the forecast
}

}  // namespace promptcast
