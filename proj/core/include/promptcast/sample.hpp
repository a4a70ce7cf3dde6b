#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "promptcast/series.hpp"

namespace promptcast {

enum class FeatureKind { numeric, categorical };

/// One contextual feature: how it is named in prompts, which CSV column it
/// comes from, and how its cells are read.
struct FeatureSpec {
    std::string name;    // human label used in prompt text
    std::string column;  // CSV header
    FeatureKind kind = FeatureKind::numeric;
    std::string unit;    // rendered after numeric values; empty for categorical

    bool operator==(const FeatureSpec&) const = default;
};

using FeatureSchema = std::vector<FeatureSpec>;

/// A context cell is missing, a number, or a text label.
using ContextCell = std::variant<std::monostate, double, std::string>;

inline bool cell_missing(const ContextCell& c) {
    return std::holds_alternative<std::monostate>(c);
}

using ContextRow = std::vector<ContextCell>;

/// H rows of contextual features aligned one-to-one with the throughput
/// window timestamps. Column order follows the run's FeatureSchema.
struct ContextMatrix {
    std::vector<ContextRow> rows;

    bool operator==(const ContextMatrix&) const = default;
};

struct SampleOrigin {
    std::string scenario;
    std::size_t row = 0;  // source row index of the window start

    std::string id() const { return scenario + "#" + std::to_string(row); }

    bool operator==(const SampleOrigin&) const = default;
};

/// One prediction instance: history window, aligned context, and (for
/// training/demo data) the true next-step throughput.
struct Sample {
    ThroughputSeries series;
    ContextMatrix context;
    std::optional<double> target_kbps;
    SampleOrigin origin;

    bool operator==(const Sample&) const = default;
};

}  // namespace promptcast
