#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptcast/sample.hpp"

namespace promptcast {

/// Maps logical feature names to CSV headers and lists the cell contents
/// treated as missing. Only the downlink throughput mapping is mandatory.
struct ColumnMap {
    std::string dl_bitrate_column = "DL_bitrate";
    FeatureSchema features;
    std::vector<std::string> missing_sentinels = {"-", ""};

    bool operator==(const ColumnMap&) const = default;
};

/// One parsed trace row: downlink throughput plus the configured context
/// cells, any of which may be missing.
struct TraceRecord {
    std::size_t row = 0;  // 0-based data row index (header excluded)
    std::optional<double> dl_kbps;
    ContextRow context;  // aligned with ColumnMap::features

    bool operator==(const TraceRecord&) const = default;
};

/// Reads a comma-separated, header-first trace file. Sentinel cells come back
/// missing; a non-numeric downlink throughput cell is an UnparsableCell error.
std::vector<TraceRecord> load_trace(const std::filesystem::path& path,
                                    const ColumnMap& column_map);

/// Same parse over in-memory text; load_trace delegates here.
std::vector<TraceRecord> parse_trace(const std::string& text, const ColumnMap& column_map);

}  // namespace promptcast
