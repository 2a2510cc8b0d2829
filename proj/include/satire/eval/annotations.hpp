#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace satire::eval {

enum class Dimension { funny, political };

std::string to_string(Dimension d);

struct AnnotationRecord {
    std::string record_id;
    std::string rater_id;
    std::string rater_group;  // local | international | llm:<model_id>
    int funny = 0;
    int political = 0;

    int score(Dimension d) const { return d == Dimension::funny ? funny : political; }
};

bool is_human_group(const std::string& group);

/// Header row `record_id,rater_id,rater_group,funny,political` is mandatory.
/// RFC 4180 quoting is understood. ParseError on a bad header, a score
/// outside 1..5, or a duplicate (record_id, rater_id).
std::vector<AnnotationRecord> read_annotations_csv(const std::filesystem::path& path);
std::vector<AnnotationRecord> parse_annotations_csv(std::string_view text);

void write_annotations_csv(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);
std::string format_annotations_csv(const std::vector<AnnotationRecord>& records);

/// Rater x item grid for one dimension. Missing cells are nullopt.
struct RatingsMatrix {
    std::vector<std::string> raters;  // sorted
    std::vector<std::string> items;   // sorted
    std::vector<std::vector<std::optional<double>>> cells;  // [rater][item]
    Dimension dimension = Dimension::funny;
};

/// Includes only the annotations accepted by `keep` (all when empty).
RatingsMatrix build_matrix(const std::vector<AnnotationRecord>& annotations, Dimension dimension,
                           const std::function<bool(const AnnotationRecord&)>& keep = {});

}  // namespace satire::eval
