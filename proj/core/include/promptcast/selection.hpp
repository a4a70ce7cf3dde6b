#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptcast/sample.hpp"

namespace promptcast {

/// A demo-pool entry: a training sample (target mandatory) plus, once the
/// precompute stage has run, its zero-shot prediction error rate.
struct DemoCandidate {
    Sample sample;
    std::optional<double> er;  // dimensionless, >= 0; +inf marks a failed zero-shot
    int pool_index = 0;

    bool operator==(const DemoCandidate&) const = default;
};

struct SelectionConfig {
    int shots = 2;              // M
    double er_threshold = 0.35; // strict ">" gate; +inf closes the gate entirely
    double er_floor_kbps = 1.0; // denominator floor for the error rate

    bool operator==(const SelectionConfig&) const = default;
};

/// One ranked candidate with its similarity distances.
struct RankedDemo {
    int pool_index = 0;
    double e1 = 0.0;  // L2 distance between raw windows
    double e2 = 0.0;  // L2 distance between incremental windows
    std::optional<double> er;

    double score() const { return e1 + e2; }

    bool operator==(const RankedDemo&) const = default;
};

/// Per-test-case record of the two-step selection outcome.
struct SelectionDecision {
    std::vector<RankedDemo> ranked;    // ascending e1+e2, ties by pool_index
    std::vector<int> admitted;         // pool indices passing the gate, ranked order
    bool use_icl = false;

    bool operator==(const SelectionDecision&) const = default;
};

/// Step-1 similarity: Euclidean distances between the raw throughput windows
/// (e1) and between their incremental series (e2).
std::pair<double, double> effectiveness_distance(const ThroughputSeries& test,
                                                 const ThroughputSeries& demo);

/// Scans the pool once and keeps the M candidates with the smallest e1+e2,
/// ascending; equal sums break toward the lower pool index.
std::vector<RankedDemo> rank_top_m(const Sample& test, const std::vector<DemoCandidate>& pool,
                                   int shots);

/// Er = |predicted - actual| / max(actual, floor).
double error_rate(double predicted_kbps, double actual_kbps, double floor_kbps);

/// Step-2 informativeness gate: a ranked demo is admitted when its error rate
/// is strictly above the threshold. With an empty admitted set the caller
/// must fall back to zero-shot prediction.
SelectionDecision informativeness_gate(std::vector<RankedDemo> ranked,
                                       const SelectionConfig& config);

/// Precomputed zero-shot error rates for one demo pool, keyed by pool index.
struct ErEntry {
    std::optional<double> predicted_kbps;  // absent when the zero-shot reply failed
    double actual_kbps = 0.0;
    double er = 0.0;  // +inf when the zero-shot reply was unusable
    std::string model_id;

    bool operator==(const ErEntry&) const = default;
};

using ErTable = std::map<int, ErEntry>;

void save_er_table(const ErTable& table, const std::filesystem::path& path);
ErTable load_er_table(const std::filesystem::path& path);

/// Copies table entries onto the matching pool candidates.
void attach_er(std::vector<DemoCandidate>& pool, const ErTable& table);

}  // namespace promptcast
