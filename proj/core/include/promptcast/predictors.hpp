#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "promptcast/gateway.hpp"
#include "promptcast/selection.hpp"

namespace promptcast {

enum class Strategy { zero_shot, icl, icl_multishot, sma, wma, arima, kalman };

std::string strategy_name(Strategy strategy);
Strategy parse_strategy(const std::string& name);

/// Terminal flags explain a missing value; the dropped_* counters account for
/// shots excluded from a batch-calibrated mean without killing the prediction.
struct OutcomeFlags {
    bool hallucination = false;
    bool parse_failure = false;
    bool backend_error = false;
    bool fallback_zero_shot = false;
    bool singular_fit = false;
    int dropped_hallucinations = 0;
    int dropped_parse_failures = 0;
    int dropped_backend_errors = 0;

    bool terminal_failure() const { return hallucination || parse_failure || backend_error; }

    bool operator==(const OutcomeFlags&) const = default;
};

/// One independent one-shot prediction inside a batch-calibrated run.
struct ShotOutcome {
    int pool_index = 0;
    std::optional<double> value_kbps;
    ReplyStatus status = ReplyStatus::parse_failure;
    bool backend_error = false;

    bool ok() const { return value_kbps.has_value(); }

    bool operator==(const ShotOutcome&) const = default;
};

/// Result of one prediction. value_kbps is absent exactly when a terminal
/// failure flag is set.
struct PredictionOutcome {
    std::optional<double> value_kbps;
    Strategy strategy = Strategy::zero_shot;
    std::optional<SelectionDecision> decision;
    OutcomeFlags flags;
    std::vector<ShotOutcome> shots;

    bool operator==(const PredictionOutcome&) const = default;
};

PredictionOutcome predict_zero_shot(const Sample& test, CompletionBackend& backend,
                                    const PromptSpec& prompt_spec, double guard_multiplier);

/// One-shot prompt for a single demonstration; building block of batch
/// calibration and of the sweep cache.
ShotOutcome one_shot_predict(const Sample& test, const Sample& demo, int pool_index,
                             CompletionBackend& backend, const PromptSpec& prompt_spec,
                             double guard_multiplier);

/// Combines gate decision, shot outcomes and a (lazily computed) zero-shot
/// fallback into the final batch-calibrated outcome: arithmetic mean of the
/// surviving shots, zero-shot when the gate is closed or every shot failed.
PredictionOutcome assemble_icl_outcome(SelectionDecision decision,
                                       std::vector<ShotOutcome> shots,
                                       const std::function<PredictionOutcome()>& zero_shot);

/// Two-step selection followed by batch-calibrated prediction.
PredictionOutcome predict_icl(const Sample& test, const std::vector<DemoCandidate>& pool,
                              const SelectionConfig& config, CompletionBackend& backend,
                              const PromptSpec& prompt_spec, double guard_multiplier);

/// Ablation mode: all admitted demos in one prompt, most similar first.
PredictionOutcome predict_icl_multishot(const Sample& test,
                                        const std::vector<DemoCandidate>& pool,
                                        const SelectionConfig& config,
                                        CompletionBackend& backend,
                                        const PromptSpec& prompt_spec, double guard_multiplier);

double predict_sma(const ThroughputSeries& series, int window);
double predict_wma(const ThroughputSeries& series, int window);

struct ArimaForecast {
    double value_kbps = 0.0;
    bool singular = false;  // fit failed, fell back to last-value persistence
};

/// AR(p) with intercept fitted by least squares on the once-differenced
/// window; the forecast difference is added to the last value.
ArimaForecast predict_arima_lite(const ThroughputSeries& series, int ar_order);

/// Local-level filter (random-walk state, observation noise). q and r are
/// scaled by the window variance; the final posterior mean is the forecast.
double predict_kalman(const ThroughputSeries& series, double process_variance,
                      double observation_variance);

}  // namespace promptcast
