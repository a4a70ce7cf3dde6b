#pragma once

#include <span>
#include <string>
#include <vector>

namespace promptcast {

/// Historical downlink throughput window, kbps, most-recent-last.
/// Valid instances have length >= 2 and only finite, non-negative values.
class ThroughputSeries {
public:
    ThroughputSeries() = default;
    explicit ThroughputSeries(std::vector<double> values_kbps);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const ThroughputSeries&) const = default;

private:
    std::vector<double> values_;
};

/// Consecutive differences of a throughput window; length H-1.
struct IncrementalSeries {
    std::vector<double> deltas;

    bool operator==(const IncrementalSeries&) const = default;
};

/// Unit used to render throughput numbers. factor is 1 (kbps) or 1000 (Mbps);
/// stored values are always kbps, scaling is a rendering concern only.
struct UnitScale {
    double factor = 1.0;
    std::string label = "kbps";

    bool operator==(const UnitScale&) const = default;
};

UnitScale kbps_scale();
UnitScale mbps_scale();

IncrementalSeries incremental_series(const ThroughputSeries& series);

/// Picks one unit for a prompt: Mbps as soon as any value in any provided
/// series exceeds 1e5 kbps, kbps otherwise. The boundary value 1e5 itself
/// stays in kbps.
UnitScale determine_unit_scale(std::span<const ThroughputSeries> series_set);

double apply_scale(double value_kbps, const UnitScale& scale);
double invert_scale(double scaled_value, const UnitScale& scale);

/// Renders a throughput value under the given scale: integer text in kbps
/// mode, one decimal place in Mbps mode.
std::string format_throughput(double value_kbps, const UnitScale& scale);

}  // namespace promptcast
