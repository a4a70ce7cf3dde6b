#include "promptcast/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "promptcast/errors.hpp"

namespace promptcast {
namespace {

constexpr const char* kTemplate =
    "{task}\n"
    "\n"
    "{demos}{input}\n"
    "\n"
    "{format}\n";

void replace_placeholder(std::string& text, const std::string& key, const std::string& value) {
    const auto pos = text.find(key);
    if (pos == std::string::npos) {
        throw ConfigError("prompt template is missing the " + key + " placeholder");
    }
    text.replace(pos, key.size(), value);
}

std::string format_context_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

/// "Downlink throughput over the last H time steps ..." plus one context line
/// per step that has at least one present cell.
std::string describe_sample(const Sample& sample, const PromptSpec& spec, const UnitScale& scale) {
    const auto& values = sample.series.values();
    std::ostringstream out;
    out << "Downlink throughput over the last " << values.size() << " time steps, oldest first: ";
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k > 0) out << ", ";
        out << format_throughput(values[k], scale);
    }
    out << ' ' << scale.label << ".";

    if (!sample.context.rows.empty() && sample.context.rows.size() != values.size()) {
        throw SchemaMismatch("context rows do not align with the throughput window");
    }
    for (std::size_t k = 0; k < sample.context.rows.size(); ++k) {
        const auto& row = sample.context.rows[k];
        if (row.size() != spec.schema.size()) {
            throw SchemaMismatch("context row width does not match the feature schema");
        }
        std::vector<std::string> clauses;
        for (std::size_t fi = 0; fi < row.size(); ++fi) {
            const auto& cell = row[fi];
            if (cell_missing(cell)) continue;  // drop the clause entirely
            const auto& feature = spec.schema[fi];
            std::string clause = feature.name + " ";
            if (std::holds_alternative<double>(cell)) {
                clause += format_context_number(std::get<double>(cell));
                if (!feature.unit.empty()) clause += " " + feature.unit;
            } else {
                clause += std::get<std::string>(cell);
            }
            clauses.push_back(std::move(clause));
        }
        if (clauses.empty()) continue;  // fully missing row: no line at all
        out << "\nStep " << (k + 1) << " context: ";
        for (std::size_t ci = 0; ci < clauses.size(); ++ci) {
            if (ci > 0) out << ", ";
            out << clauses[ci];
        }
        out << ".";
    }
    return out.str();
}

bool token_starts_number(const std::string& s, std::size_t i) {
    const char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
    if ((c == '+' || c == '-' || c == '.') && i + 1 < s.size()) {
        const char n = s[i + 1];
        if (std::isdigit(static_cast<unsigned char>(n))) return true;
        if ((c == '+' || c == '-') && n == '.' && i + 2 < s.size() &&
            std::isdigit(static_cast<unsigned char>(s[i + 2]))) {
            return true;
        }
    }
    return false;
}

std::optional<double> first_number(const std::string& text, std::size_t from) {
    for (std::size_t i = from; i < text.size(); ++i) {
        if (!token_starts_number(text, i)) continue;
        char* end = nullptr;
        const double v = std::strtod(text.c_str() + i, &end);
        if (end != text.c_str() + i && std::isfinite(v)) return v;
    }
    return std::nullopt;
}

}  // namespace

const std::string& default_prompt_template() {
    static const std::string tmpl = kTemplate;
    return tmpl;
}

std::string load_prompt_template(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open prompt template: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    for (const char* key : {"{task}", "{demos}", "{input}", "{format}"}) {
        if (text.find(key) == std::string::npos) {
            throw ConfigError("prompt template is missing the " + std::string(key) +
                              " placeholder");
        }
    }
    return text;
}

PromptBundle render_prompt(const Sample& test, const std::vector<Sample>& demos,
                           const PromptSpec& spec) {
    std::vector<ThroughputSeries> all_series;
    all_series.reserve(demos.size() + 1);
    all_series.push_back(test.series);
    for (const auto& demo : demos) {
        if (demo.series.size() != test.series.size()) {
            throw LengthMismatch("demonstration window length differs from the test window");
        }
        if (!demo.target_kbps) {
            throw Error("demonstration sample has no target value");
        }
        all_series.push_back(demo.series);
    }

    PromptBundle bundle;
    bundle.scale = determine_unit_scale(all_series);
    bundle.shot_count = static_cast<int>(demos.size());
    bundle.test_origin = test.origin.id();
    bundle.input_series_kbps = test.series.values();

    bundle.max_prompt_kbps = *std::max_element(test.series.values().begin(),
                                               test.series.values().end());
    for (const auto& demo : demos) {
        for (double v : demo.series.values()) bundle.max_prompt_kbps = std::max(bundle.max_prompt_kbps, v);
        bundle.max_prompt_kbps = std::max(bundle.max_prompt_kbps, *demo.target_kbps);
    }

    std::ostringstream task;
    task << "You are an expert assistant for mobile network traffic analysis. A base station "
            "periodically measures the downlink throughput of one mobile device together with "
            "contextual radio measurements. The device operates in a network where 5G, LTE and "
            "HSPA+ coexist. Scenario: "
         << spec.scenario_label
         << ". Given the most recent measurements, predict the downlink throughput for the next "
            "time step.";

    std::ostringstream demo_section;
    for (std::size_t i = 0; i < demos.size(); ++i) {
        demo_section << "Example " << (i + 1) << ":\n"
                     << describe_sample(demos[i], spec, bundle.scale) << "\n"
                     << "Answer: PREDICTION: "
                     << format_throughput(*demos[i].target_kbps, bundle.scale) << ' '
                     << bundle.scale.label << "\n\n";
    }

    std::ostringstream input;
    input << "Now make a prediction for the following input.\n"
          << describe_sample(test, spec, bundle.scale);

    std::ostringstream format;
    format << "Respond with exactly one line in the form:\n"
           << "PREDICTION: <number> " << bundle.scale.label;

    std::string text = spec.template_text.empty() ? default_prompt_template() : spec.template_text;
    replace_placeholder(text, "{task}", task.str());
    replace_placeholder(text, "{demos}", demo_section.str());
    replace_placeholder(text, "{input}", input.str());
    replace_placeholder(text, "{format}", format.str());
    bundle.text = std::move(text);
    return bundle;
}

ParsedReply parse_reply(const std::string& raw, const PromptBundle& bundle,
                        double guard_multiplier) {
    ParsedReply reply;
    reply.raw_text = raw;

    static const std::string kMarker = "PREDICTION:";
    const auto marker_pos = raw.find(kMarker);
    std::optional<double> value =
        marker_pos != std::string::npos ? first_number(raw, marker_pos + kMarker.size())
                                        : std::nullopt;
    if (!value) value = first_number(raw, 0);
    if (!value) {
        reply.status = ReplyStatus::parse_failure;
        return reply;
    }

    const double kbps = invert_scale(*value, bundle.scale);
    if (kbps < 0.0 || kbps > guard_multiplier * bundle.max_prompt_kbps) {
        reply.status = ReplyStatus::out_of_range;
        return reply;
    }
    reply.status = ReplyStatus::ok;
    reply.value_kbps = kbps;
    return reply;
}

}  // namespace promptcast
