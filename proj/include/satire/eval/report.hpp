#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satire/eval/agreement.hpp"
#include "satire/eval/annotations.hpp"
#include "satire/eval/shuffle.hpp"
#include "satire/eval/stats.hpp"

namespace satire::eval {

struct ReportConfig {
    /// interval: interval alpha on per-rater z-scores, recomputed inside each
    /// group. ordinal: ordinal alpha on the raw 1..5 scores.
    AlphaMetric alpha_metric = AlphaMetric::interval;
    ZeroHandling wilcoxon_zeros = ZeroHandling::drop;
};

struct Report {
    json data;
    std::string table;
};

/// Unblinds every annotation through the key (record id or packet
/// position), then computes the full statistics set per dimension. Any
/// statistic that is undefined for the data is reported as null with a
/// reason instead of failing the report. ReportError when an annotation
/// cannot be matched to the key.
Report run_report(const std::vector<AnnotationRecord>& annotations, const ShuffleKey& key,
                  const ReportConfig& config = {});

/// File front end. ReportError when the key file is missing or unreadable.
Report run_report(const std::vector<std::filesystem::path>& annotation_csvs, const std::filesystem::path& key_path,
                  const ReportConfig& config = {});

}  // namespace satire::eval
