#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satire/eval/annotations.hpp"

namespace satire::eval {

using json = nlohmann::json;

/// [rater][item]; nullopt marks a missing rating.
using RealMatrix = std::vector<std::vector<std::optional<double>>>;

/// Per rater: subtract the rater's mean and divide by the rater's sample SD.
/// A rater with zero variance (or a single rating) gets 0 in every observed
/// cell and a warning. Missing cells stay missing.
RealMatrix znormalize(const RealMatrix& cells);

enum class AlphaMetric { interval, ordinal };

struct AgreementReport {
    std::string dimension;
    std::string rater_group;
    double alpha = 0.0;
    std::size_t n_raters = 0;
    std::size_t n_items = 0;
};

/// Krippendorff's alpha = 1 - D_o / D_e from the coincidence matrix of
/// pairable values (items with at least two ratings). Interval metric is
/// (a - b)^2; ordinal uses cumulative value frequencies. InvalidArgument
/// unless there are >= 2 raters and >= 2 items; AgreementUndefined when no
/// item has two ratings or every pairable value is identical.
double krippendorff_alpha(const RealMatrix& cells, AlphaMetric metric = AlphaMetric::interval);

json to_json(const AgreementReport& r);

}  // namespace satire::eval
