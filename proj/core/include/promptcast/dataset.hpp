#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "promptcast/csv.hpp"
#include "promptcast/sample.hpp"

namespace promptcast {

/// Demo-pool / test halves of one scenario's windowized trace.
/// Source row ranges of the two halves never overlap.
struct DatasetSplit {
    std::vector<Sample> demo_pool;  // targets always present
    std::vector<Sample> test_set;   // targets held out (kept for scoring)
    std::string scenario;

    bool operator==(const DatasetSplit&) const = default;
};

/// Slides a length-H window with stride 1 over the trace. Sample k carries
/// rows [k, k+H) and the row k+H throughput as target. Windows touching a
/// missing throughput value (window or target) are dropped; missing context
/// survives and is handled at prompt render time.
std::vector<Sample> windowize(const std::vector<TraceRecord>& records, int history_window,
                              const std::string& scenario);

/// First ceil(n/2) source-ordered samples form the demo pool, the rest the
/// test set. A demo-side window that would overlap the test rows is kept only
/// if its target row sits below the first test window row; otherwise it is
/// discarded so the two halves stay row-disjoint.
DatasetSplit split_half(const std::vector<Sample>& samples);

/// Canonical JSON Lines dump, one sample per line.
void dump_samples_jsonl(const std::vector<Sample>& samples, const std::filesystem::path& path);

}  // namespace promptcast
