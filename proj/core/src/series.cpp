#include "promptcast/series.hpp"

#include <cmath>
#include <cstdio>

#include "promptcast/errors.hpp"

namespace promptcast {

ThroughputSeries::ThroughputSeries(std::vector<double> values_kbps)
    : values_(std::move(values_kbps)) {
    if (values_.size() < 2) {
        throw InvalidSeries("throughput series needs at least 2 values, got " +
                            std::to_string(values_.size()));
    }
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0) {
            throw InvalidSeries("throughput values must be finite and >= 0");
        }
    }
}

UnitScale kbps_scale() { return UnitScale{1.0, "kbps"}; }
UnitScale mbps_scale() { return UnitScale{1000.0, "Mbps"}; }

IncrementalSeries incremental_series(const ThroughputSeries& series) {
    IncrementalSeries out;
    out.deltas.reserve(series.size() - 1);
    for (std::size_t k = 0; k + 1 < series.size(); ++k) {
        out.deltas.push_back(series[k + 1] - series[k]);
    }
    return out;
}

UnitScale determine_unit_scale(std::span<const ThroughputSeries> series_set) {
    constexpr double kMbpsTrigger = 1e5;  // strictly greater than 1e5 kbps
    for (const auto& series : series_set) {
        for (double v : series.values()) {
            if (v > kMbpsTrigger) {
                return mbps_scale();
            }
        }
    }
    return kbps_scale();
}

double apply_scale(double value_kbps, const UnitScale& scale) { return value_kbps / scale.factor; }

double invert_scale(double scaled_value, const UnitScale& scale) {
    return scaled_value * scale.factor;
}

std::string format_throughput(double value_kbps, const UnitScale& scale) {
    char buf[64];
    if (scale.factor == 1.0) {
        std::snprintf(buf, sizeof(buf), "%.0f", value_kbps);
    } else {
        std::snprintf(buf, sizeof(buf), "%.1f", apply_scale(value_kbps, scale));
    }
    return buf;
}

}  // namespace promptcast
