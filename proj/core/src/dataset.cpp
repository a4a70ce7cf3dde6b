#include "promptcast/dataset.hpp"

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "promptcast/errors.hpp"

namespace promptcast {

std::vector<Sample> windowize(const std::vector<TraceRecord>& records, int history_window,
                              const std::string& scenario) {
    const auto h = static_cast<std::size_t>(history_window);
    if (history_window < 2) {
        throw InvalidSeries("history window must be >= 2");
    }
    if (records.size() < h + 1) {
        throw TraceTooShort("trace has " + std::to_string(records.size()) +
                            " rows, need at least " + std::to_string(h + 1));
    }

    std::vector<Sample> samples;
    samples.reserve(records.size() - h);
    for (std::size_t k = 0; k + h < records.size(); ++k) {
        bool complete = records[k + h].dl_kbps.has_value();
        for (std::size_t j = k; complete && j < k + h; ++j) {
            complete = records[j].dl_kbps.has_value();
        }
        if (!complete) continue;

        std::vector<double> values;
        values.reserve(h);
        ContextMatrix context;
        context.rows.reserve(h);
        for (std::size_t j = k; j < k + h; ++j) {
            values.push_back(*records[j].dl_kbps);
            context.rows.push_back(records[j].context);
        }

        Sample s;
        s.series = ThroughputSeries(std::move(values));
        s.context = std::move(context);
        s.target_kbps = *records[k + h].dl_kbps;
        s.origin = SampleOrigin{scenario, records[k].row};
        samples.push_back(std::move(s));
    }
    return samples;
}

DatasetSplit split_half(const std::vector<Sample>& samples) {
    if (samples.size() < 2) {
        throw DataError("need at least 2 samples to split");
    }
    const std::size_t mid = (samples.size() + 1) / 2;

    DatasetSplit split;
    split.scenario = samples.front().origin.scenario;
    split.test_set.assign(samples.begin() + static_cast<std::ptrdiff_t>(mid), samples.end());

    // First window row of the test half, per scenario. A demo window whose
    // target row reaches this boundary would share source rows with a test
    // window and is discarded.
    std::map<std::string, std::size_t> first_test_row;
    for (const auto& s : split.test_set) {
        auto [it, inserted] = first_test_row.emplace(s.origin.scenario, s.origin.row);
        if (!inserted && s.origin.row < it->second) it->second = s.origin.row;
    }

    for (std::size_t i = 0; i < mid; ++i) {
        const auto& s = samples[i];
        const auto it = first_test_row.find(s.origin.scenario);
        if (it != first_test_row.end()) {
            const std::size_t target_row = s.origin.row + s.series.size();
            if (target_row >= it->second) continue;  // straddles the midpoint
        }
        split.demo_pool.push_back(s);
    }
    return split;
}

namespace {

nlohmann::json cell_to_json(const ContextCell& cell) {
    if (std::holds_alternative<double>(cell)) return std::get<double>(cell);
    if (std::holds_alternative<std::string>(cell)) return std::get<std::string>(cell);
    return nullptr;
}

}  // namespace

void dump_samples_jsonl(const std::vector<Sample>& samples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write sample dump: " + path.string());
    }
    for (const auto& s : samples) {
        nlohmann::json line;
        line["id"] = s.origin.id();
        line["scenario"] = s.origin.scenario;
        line["row"] = s.origin.row;
        line["series"] = s.series.values();
        line["target"] = s.target_kbps ? nlohmann::json(*s.target_kbps) : nlohmann::json(nullptr);
        nlohmann::json ctx = nlohmann::json::array();
        for (const auto& row : s.context.rows) {
            nlohmann::json jrow = nlohmann::json::array();
            for (const auto& cell : row) jrow.push_back(cell_to_json(cell));
            ctx.push_back(std::move(jrow));
        }
        line["context"] = std::move(ctx);
        out << line.dump() << '\n';
    }
}

}  // namespace promptcast
