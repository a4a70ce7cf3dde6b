#include "promptcast/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "promptcast/errors.hpp"

namespace promptcast {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& cell) {
    const std::string t = trimmed(cell);
    if (t.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) return std::nullopt;
    return v;
}

bool is_sentinel(const std::string& cell, const std::vector<std::string>& sentinels) {
    const std::string t = trimmed(cell);
    return std::find(sentinels.begin(), sentinels.end(), t) != sentinels.end();
}

}  // namespace

std::vector<TraceRecord> parse_trace(const std::string& text, const ColumnMap& column_map) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty trace: no header row");
    }
    const auto header = split_csv_line(line);

    auto column_index = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trimmed(header[i]) == name) return i;
        }
        return std::nullopt;
    };

    const auto dl_idx = column_index(column_map.dl_bitrate_column);
    if (!dl_idx) {
        throw MissingColumn(column_map.dl_bitrate_column);
    }

    // Context mappings are optional: a feature whose column is absent from the
    // file yields a missing cell on every row.
    std::vector<std::optional<std::size_t>> feature_idx;
    feature_idx.reserve(column_map.features.size());
    for (const auto& f : column_map.features) {
        feature_idx.push_back(column_index(f.column));
    }

    std::vector<TraceRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trimmed(line).empty()) continue;
        const auto fields = split_csv_line(line);
        auto field_at = [&](std::size_t idx) -> std::string {
            return idx < fields.size() ? fields[idx] : "";
        };

        TraceRecord rec;
        rec.row = row;

        const std::string dl_cell = field_at(*dl_idx);
        if (is_sentinel(dl_cell, column_map.missing_sentinels)) {
            rec.dl_kbps = std::nullopt;
        } else if (auto v = parse_number(dl_cell)) {
            rec.dl_kbps = *v;
        } else {
            throw UnparsableCell(row, column_map.dl_bitrate_column);
        }

        rec.context.reserve(column_map.features.size());
        for (std::size_t fi = 0; fi < column_map.features.size(); ++fi) {
            const auto& spec = column_map.features[fi];
            if (!feature_idx[fi]) {
                rec.context.emplace_back(std::monostate{});
                continue;
            }
            const std::string cell = field_at(*feature_idx[fi]);
            if (is_sentinel(cell, column_map.missing_sentinels)) {
                rec.context.emplace_back(std::monostate{});
            } else if (spec.kind == FeatureKind::numeric) {
                // Numeric context that fails to parse is treated as missing;
                // only the throughput column is strict.
                if (auto v = parse_number(cell)) {
                    rec.context.emplace_back(*v);
                } else {
                    rec.context.emplace_back(std::monostate{});
                }
            } else {
                rec.context.emplace_back(trimmed(cell));
            }
        }
        records.push_back(std::move(rec));
        ++row;
    }
    return records;
}

std::vector<TraceRecord> load_trace(const std::filesystem::path& path,
                                    const ColumnMap& column_map) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open trace file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trace(buf.str(), column_map);
}

}  // namespace promptcast
