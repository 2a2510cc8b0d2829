#include "satire/eval/agreement.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "satire/error.hpp"

namespace satire::eval {

RealMatrix znormalize(const RealMatrix& cells) {
    RealMatrix out = cells;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& c : cells[r]) {
            if (c) {
                sum += *c;
                ++n;
            }
        }
        if (n == 0) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& c : cells[r]) {
            if (c) ss += (*c - mean) * (*c - mean);
        }
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        if (sd <= 1e-12) {
            spdlog::warn("rater {} has zero variance; z-scores set to 0", r);
            for (auto& c : out[r]) {
                if (c) c = 0.0;
            }
            continue;
        }
        for (auto& c : out[r]) {
            if (c) c = (*c - mean) / sd;
        }
    }
    return out;
}

double krippendorff_alpha(const RealMatrix& cells, AlphaMetric metric) {
    const std::size_t raters = cells.size();
    const std::size_t items = raters == 0 ? 0 : cells.front().size();
    if (raters < 2 || items < 2) throw InvalidArgument("agreement needs at least 2 raters and 2 items");

    // Distinct values, and the coincidence matrix o[c][k] over their indices.
    std::vector<double> values;
    for (const auto& row : cells) {
        for (const auto& c : row) {
            if (c) values.push_back(*c);
        }
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    auto index_of = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), v) - values.begin());
    };
    const std::size_t v = values.size();
    std::vector<std::vector<double>> coincidence(v, std::vector<double>(v, 0.0));
    for (std::size_t u = 0; u < items; ++u) {
        std::vector<std::size_t> unit;
        for (std::size_t r = 0; r < raters; ++r) {
            if (cells[r][u]) unit.push_back(index_of(*cells[r][u]));
        }
        const std::size_t m = unit.size();
        if (m < 2) continue;
        const double w = 1.0 / static_cast<double>(m - 1);
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < m; ++b) {
                if (a != b) coincidence[unit[a]][unit[b]] += w;
            }
        }
    }
    std::vector<double> marginal(v, 0.0);
    double n = 0.0;
    for (std::size_t c = 0; c < v; ++c) {
        for (std::size_t k = 0; k < v; ++k) marginal[c] += coincidence[c][k];
        n += marginal[c];
    }
    if (n < 2.0 - 1e-12) throw AgreementUndefined("no item has two or more ratings");

    // Ordinal distances use cumulative marginals between the two values.
    std::vector<double> cumulative(v + 1, 0.0);
    for (std::size_t c = 0; c < v; ++c) cumulative[c + 1] = cumulative[c] + marginal[c];
    auto delta = [&](std::size_t c, std::size_t k) {
        if (metric == AlphaMetric::interval) {
            const double d = values[c] - values[k];
            return d * d;
        }
        const std::size_t lo = std::min(c, k), hi = std::max(c, k);
        const double d = (cumulative[hi + 1] - cumulative[lo]) - (marginal[c] + marginal[k]) / 2.0;
        return d * d;
    };

    double observed = 0.0, expected = 0.0;
    for (std::size_t c = 0; c < v; ++c) {
        for (std::size_t k = 0; k < v; ++k) {
            if (c == k) continue;
            const double d = delta(c, k);
            observed += coincidence[c][k] * d;
            expected += marginal[c] * marginal[k] * d;
        }
    }
    observed /= n;
    expected /= n * (n - 1.0);
    if (expected <= 0.0) throw AgreementUndefined("all pairable values are identical; expected disagreement is zero");
    return 1.0 - observed / expected;
}

json to_json(const AgreementReport& r) {
    return {{"dimension", r.dimension}, {"rater_group", r.rater_group}, {"alpha", r.alpha},
            {"n_raters", r.n_raters}, {"n_items", r.n_items}};
}

}  // namespace satire::eval
