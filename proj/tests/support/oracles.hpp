#pragma once

// Brute-force reference implementations. They share no code with the
// library: ranks are counted pairwise and p-values come from enumerating
// every assignment.

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace oracle {

// U for the first sample: pairs (a, b) with a > b count 1, ties 1/2.
inline double pair_count_u(const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0.0;
    for (double a : x) {
        for (double b : y) {
            if (a > b) u += 1.0;
            else if (a == b) u += 0.5;
        }
    }
    return u;
}

struct MwuResult {
    double statistic;
    double p_value;
};

// Two-sided exact p: share of all C(n1 + n2, n1) relabelings whose U is at
// least as far from n1 n2 / 2 as the observed one.
inline MwuResult mann_whitney(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    const std::size_t n1 = x.size(), n = pooled.size();
    const double centre = static_cast<double>(n1 * y.size()) / 2.0;
    const double u_obs = pair_count_u(x, y);
    const double dev_obs = std::fabs(u_obs - centre);
    std::uint64_t total = 0, extreme = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
        ++total;
        if (std::fabs(pair_count_u(a, b) - centre) >= dev_obs - 1e-9) ++extreme;
    }
    return {std::min(u_obs, static_cast<double>(n1 * y.size()) - u_obs),
            static_cast<double>(extreme) / static_cast<double>(total)};
}

// Midrank of v[i] among v, counted pairwise.
inline double pairwise_rank(const std::vector<double>& v, std::size_t i) {
    double less = 0, equal = 0;
    for (double w : v) {
        if (w < v[i]) less += 1;
        else if (w == v[i]) equal += 1;
    }
    return less + (equal + 1.0) / 2.0;
}

struct WilcoxonResult {
    double statistic;
    double p_value;
    std::size_t n;
};

// Differences first - second. With `pratt`, zero differences take part in
// the ranking and are then discarded; otherwise they are dropped first.
// Two-sided exact p over all 2^n sign patterns of the non-zero differences.
inline std::optional<WilcoxonResult> wilcoxon(const std::vector<std::pair<double, double>>& pairs, bool pratt = false) {
    std::vector<double> diffs;
    for (const auto& [a, b] : pairs) diffs.push_back(a - b);
    std::vector<double> abs_all;
    for (double d : diffs) {
        if (pratt || d != 0.0) abs_all.push_back(std::fabs(d));
    }
    std::vector<double> ranks, signs;
    std::size_t k = 0;
    for (double d : diffs) {
        if (!pratt && d == 0.0) continue;
        double r = pairwise_rank(abs_all, k++);
        if (d == 0.0) continue;
        ranks.push_back(r);
        signs.push_back(d > 0 ? 1.0 : -1.0);
    }
    const std::size_t n = ranks.size();
    if (n == 0) return std::nullopt;
    double total = 0, w_plus = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += ranks[i];
        if (signs[i] > 0) w_plus += ranks[i];
    }
    const double centre = total / 2.0;
    const double dev_obs = std::fabs(w_plus - centre);
    std::uint64_t extreme = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double w = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1u) w += ranks[i];
        }
        if (std::fabs(w - centre) >= dev_obs - 1e-9) ++extreme;
    }
    return WilcoxonResult{std::min(w_plus, total - w_plus), static_cast<double>(extreme) / std::pow(2.0, n), n};
}

using Matrix = std::vector<std::vector<std::optional<double>>>;  // [rater][item]

// Interval alpha by direct summation over value pairs: within items for the
// observed disagreement, across all pairable values for the expected one.
inline std::optional<double> interval_alpha(const Matrix& m) {
    std::vector<std::vector<double>> units;
    const std::size_t items = m.empty() ? 0 : m[0].size();
    for (std::size_t u = 0; u < items; ++u) {
        std::vector<double> vals;
        for (const auto& row : m) {
            if (row[u]) vals.push_back(*row[u]);
        }
        if (vals.size() >= 2) units.push_back(vals);
    }
    std::vector<double> all;
    double observed = 0;
    for (const auto& vals : units) {
        double s = 0;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            for (std::size_t j = 0; j < vals.size(); ++j) {
                if (i != j) s += (vals[i] - vals[j]) * (vals[i] - vals[j]);
            }
        }
        observed += s / static_cast<double>(vals.size() - 1);
        all.insert(all.end(), vals.begin(), vals.end());
    }
    const double n = static_cast<double>(all.size());
    if (n < 2) return std::nullopt;
    double expected = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = 0; j < all.size(); ++j) {
            if (i != j) expected += (all[i] - all[j]) * (all[i] - all[j]);
        }
    }
    observed /= n;
    expected /= n * (n - 1);
    if (expected == 0) return std::nullopt;
    return 1.0 - observed / expected;
}

// Per-rater z-scores with the sample SD; constant raters become 0.
inline Matrix znorm(const Matrix& m) {
    Matrix out = m;
    for (std::size_t r = 0; r < m.size(); ++r) {
        double sum = 0, count = 0;
        for (const auto& c : m[r]) {
            if (c) {
                sum += *c;
                count += 1;
            }
        }
        const double mean = sum / count;
        double ss = 0;
        for (const auto& c : m[r]) {
            if (c) ss += (*c - mean) * (*c - mean);
        }
        const double sd = count > 1 ? std::sqrt(ss / (count - 1)) : 0;
        for (auto& c : out[r]) {
            if (c) c = sd > 0 ? (*c - mean) / sd : 0.0;
        }
    }
    return out;
}

// Spearman rho as Pearson over pairwise-counted midranks.
inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> rx(n), ry(n);
    for (std::size_t i = 0; i < n; ++i) {
        rx[i] = pairwise_rank(x, i);
        ry[i] = pairwise_rank(y, i);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i] / n;
        my += ry[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
