#include "promptcast/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "promptcast/errors.hpp"

namespace promptcast {

std::pair<double, double> effectiveness_distance(const ThroughputSeries& test,
                                                 const ThroughputSeries& demo) {
    if (test.size() != demo.size()) {
        throw LengthMismatch("series lengths differ: " + std::to_string(test.size()) + " vs " +
                             std::to_string(demo.size()));
    }
    double raw_sq = 0.0;
    double inc_sq = 0.0;
    for (std::size_t k = 0; k < test.size(); ++k) {
        const double d = test[k] - demo[k];
        raw_sq += d * d;
        if (k + 1 < test.size()) {
            const double dt = test[k + 1] - test[k];
            const double dd = demo[k + 1] - demo[k];
            const double di = dt - dd;
            inc_sq += di * di;
        }
    }
    return {std::sqrt(raw_sq), std::sqrt(inc_sq)};
}

std::vector<RankedDemo> rank_top_m(const Sample& test, const std::vector<DemoCandidate>& pool,
                                   int shots) {
    if (pool.empty()) {
        throw EmptyPool("demo pool is empty");
    }
    if (shots < 0 || static_cast<std::size_t>(shots) > pool.size()) {
        throw MTooLarge("requested " + std::to_string(shots) + " shots from a pool of " +
                        std::to_string(pool.size()));
    }
    if (shots == 0) return {};

    std::vector<RankedDemo> scored;
    scored.reserve(pool.size());
    for (const auto& cand : pool) {
        const auto [e1, e2] = effectiveness_distance(test.series, cand.sample.series);
        scored.push_back(RankedDemo{cand.pool_index, e1, e2, cand.er});
    }

    const auto better = [](const RankedDemo& a, const RankedDemo& b) {
        const double sa = a.score();
        const double sb = b.score();
        if (sa != sb) return sa < sb;
        return a.pool_index < b.pool_index;
    };
    const auto m = static_cast<std::ptrdiff_t>(shots);
    std::nth_element(scored.begin(), scored.begin() + (m - 1), scored.end(), better);
    std::sort(scored.begin(), scored.begin() + m, better);
    scored.resize(static_cast<std::size_t>(m));
    return scored;
}

double error_rate(double predicted_kbps, double actual_kbps, double floor_kbps) {
    return std::abs(predicted_kbps - actual_kbps) / std::max(actual_kbps, floor_kbps);
}

SelectionDecision informativeness_gate(std::vector<RankedDemo> ranked,
                                       const SelectionConfig& config) {
    SelectionDecision decision;
    decision.admitted.reserve(ranked.size());
    for (const auto& demo : ranked) {
        if (!demo.er) {
            throw MissingEr(demo.pool_index);
        }
        if (*demo.er > config.er_threshold) {
            decision.admitted.push_back(demo.pool_index);
        }
    }
    decision.ranked = std::move(ranked);
    decision.use_icl = !decision.admitted.empty();
    return decision;
}

void save_er_table(const ErTable& table, const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [index, entry] : table) {
        nlohmann::json row;
        row["pool_index"] = index;
        row["predicted"] =
            entry.predicted_kbps ? nlohmann::json(*entry.predicted_kbps) : nlohmann::json(nullptr);
        row["actual"] = entry.actual_kbps;
        // JSON has no infinity; a null er marks the +inf sentinel.
        row["er"] = std::isinf(entry.er) ? nlohmann::json(nullptr) : nlohmann::json(entry.er);
        row["model_id"] = entry.model_id;
        arr.push_back(std::move(row));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write er table: " + path.string());
    }
    out << arr.dump(2) << '\n';
}

ErTable load_er_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read er table: " + path.string());
    }
    nlohmann::json arr = nlohmann::json::parse(in);
    ErTable table;
    for (const auto& row : arr) {
        ErEntry entry;
        if (!row.at("predicted").is_null()) entry.predicted_kbps = row.at("predicted").get<double>();
        entry.actual_kbps = row.at("actual").get<double>();
        entry.er = row.at("er").is_null() ? std::numeric_limits<double>::infinity()
                                          : row.at("er").get<double>();
        entry.model_id = row.at("model_id").get<std::string>();
        table.emplace(row.at("pool_index").get<int>(), std::move(entry));
    }
    return table;
}

void attach_er(std::vector<DemoCandidate>& pool, const ErTable& table) {
    for (auto& cand : pool) {
        const auto it = table.find(cand.pool_index);
        if (it != table.end()) cand.er = it->second.er;
    }
}

}  // namespace promptcast
