#include "satire/eval/annotations.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "satire/error.hpp"
#include "satire/util/text.hpp"

namespace satire::eval {

std::string to_string(Dimension d) { return d == Dimension::funny ? "funny" : "political"; }

bool is_human_group(const std::string& group) { return group.rfind("llm:", 0) != 0; }

namespace {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, field_started = false;
    std::size_t i = 0;
    if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;  // UTF-8 BOM
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
        row.clear();
    };
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field");
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

int parse_score(const std::string& raw, std::size_t line) {
    auto s = trim(raw);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1 || v > 5) {
        throw ParseError("line " + std::to_string(line) + ": score must be an integer in 1..5, got '" + raw + "'");
    }
    return v;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    return out + "\"";
}

const std::vector<std::string> kHeader = {"record_id", "rater_id", "rater_group", "funny", "political"};

}  // namespace

std::vector<AnnotationRecord> parse_annotations_csv(std::string_view text) {
    auto rows = parse_csv(text);
    if (rows.empty()) throw ParseError("annotation CSV is empty (header row is mandatory)");
    std::vector<std::string> header;
    for (const auto& h : rows.front()) header.push_back(trim(h));
    if (header != kHeader) throw ParseError("annotation CSV header must be record_id,rater_id,rater_group,funny,political");
    std::vector<AnnotationRecord> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != kHeader.size()) {
            throw ParseError("line " + std::to_string(r + 1) + ": expected 5 fields, got " + std::to_string(row.size()));
        }
        AnnotationRecord a{trim(row[0]), trim(row[1]), trim(row[2]), parse_score(row[3], r + 1), parse_score(row[4], r + 1)};
        if (a.record_id.empty() || a.rater_id.empty() || a.rater_group.empty()) {
            throw ParseError("line " + std::to_string(r + 1) + ": empty identifier");
        }
        if (!seen.emplace(a.record_id, a.rater_id).second) {
            throw ParseError("line " + std::to_string(r + 1) + ": duplicate rating of " + a.record_id + " by " + a.rater_id);
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<AnnotationRecord> read_annotations_csv(const std::filesystem::path& path) {
    try {
        return parse_annotations_csv(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string format_annotations_csv(const std::vector<AnnotationRecord>& records) {
    std::string out = "record_id,rater_id,rater_group,funny,political\n";
    for (const auto& a : records) {
        out += quote(a.record_id) + "," + quote(a.rater_id) + "," + quote(a.rater_group) + "," +
               std::to_string(a.funny) + "," + std::to_string(a.political) + "\n";
    }
    return out;
}

void write_annotations_csv(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
    write_file_atomic(path, format_annotations_csv(records));
}

RatingsMatrix build_matrix(const std::vector<AnnotationRecord>& annotations, Dimension dimension,
                           const std::function<bool(const AnnotationRecord&)>& keep) {
    std::set<std::string> raters, items;
    for (const auto& a : annotations) {
        if (keep && !keep(a)) continue;
        raters.insert(a.rater_id);
        items.insert(a.record_id);
    }
    RatingsMatrix m;
    m.dimension = dimension;
    m.raters.assign(raters.begin(), raters.end());
    m.items.assign(items.begin(), items.end());
    m.cells.assign(m.raters.size(), std::vector<std::optional<double>>(m.items.size()));
    for (const auto& a : annotations) {
        if (keep && !keep(a)) continue;
        auto r = static_cast<std::size_t>(std::lower_bound(m.raters.begin(), m.raters.end(), a.rater_id) - m.raters.begin());
        auto c = static_cast<std::size_t>(std::lower_bound(m.items.begin(), m.items.end(), a.record_id) - m.items.begin());
        m.cells[r][c] = a.score(dimension);
    }
    return m;
}

}  // namespace satire::eval
