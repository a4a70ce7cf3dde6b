#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "promptcast/sample.hpp"
#include "promptcast/series.hpp"

namespace promptcast {

/// Rendering context shared by every prompt of a run.
struct PromptSpec {
    std::string scenario_label;
    FeatureSchema schema;
    std::string template_text;  // empty means the built-in default
};

/// A rendered prompt plus everything needed to decode the reply: the unit
/// scale all throughput numbers were printed under, the test window (used by
/// mock backends), and the largest throughput value that appears in the text
/// (base of the hallucination guard).
struct PromptBundle {
    std::string text;
    UnitScale scale;
    int shot_count = 0;
    std::string test_origin;
    std::vector<double> input_series_kbps;
    double max_prompt_kbps = 0.0;
};

enum class ReplyStatus { ok, parse_failure, out_of_range };

struct ParsedReply {
    std::optional<double> value_kbps;  // present iff status == ok
    std::string raw_text;
    ReplyStatus status = ReplyStatus::parse_failure;
};

/// The built-in four-part frame: {task}, {demos}, {input}, {format}.
const std::string& default_prompt_template();

/// Reads a template file and checks it still carries all four placeholders.
std::string load_prompt_template(const std::filesystem::path& path);

/// Renders the four-part prompt. All throughput numbers share one unit,
/// chosen over the test window and every demonstration window; missing
/// context cells drop their clause, fully missing rows drop their line.
PromptBundle render_prompt(const Sample& test, const std::vector<Sample>& demos,
                           const PromptSpec& spec);

/// Extracts the first numeric token after the PREDICTION: marker (or anywhere
/// in the reply if the marker is absent), converts it back to kbps, and flags
/// values that are negative or larger than guard_multiplier times the biggest
/// throughput number in the prompt.
ParsedReply parse_reply(const std::string& raw, const PromptBundle& bundle,
                        double guard_multiplier);

}  // namespace promptcast
