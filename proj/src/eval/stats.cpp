#include "satire/eval/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "satire/error.hpp"

namespace satire::eval {

namespace {

constexpr double kZ975 = 1.959963984540054;
constexpr double kTieEps = 1e-9;

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

// Sizes of runs of equal values.
std::vector<std::size_t> tie_groups(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> groups;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        groups.push_back(j - i);
        i = j;
    }
    return groups;
}

// Midranks are multiples of 1/2, so doubled ranks are exact integers.
long long doubled(double rank) { return std::llround(rank * 2.0); }

}  // namespace

SummaryStat summarize(std::span<const double> values) {
    if (values.size() < 2) throw SummaryError("summary needs at least two scores");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)), values.size()};
}

std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

double two_sided_normal_p(double z) { return clamp_p(std::erfc(std::abs(z) / std::sqrt(2.0))); }

TestReport mann_whitney_u(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw TestError("Mann-Whitney U needs two non-empty samples");
    const std::size_t n1 = x.size(), n2 = y.size(), n = n1 + n2;
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    auto ranks = midranks(pooled);
    const double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
    const double u1 = r1 - static_cast<double>(n1 * (n1 + 1)) / 2.0;
    const double mean_u = static_cast<double>(n1 * n2) / 2.0;

    TestReport report;
    report.method = TestMethod::mann_whitney_u;
    report.n1 = n1;
    report.n2 = n2;
    report.statistic = std::min(u1, static_cast<double>(n1 * n2) - u1);

    if (n <= kMannWhitneyExactMax) {
        // ways[k][s]: subsets of size k with doubled rank sum s.
        long long max_sum = 0;
        for (double r : ranks) max_sum += doubled(r);
        std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
        ways[0][0] = 1.0;
        for (double r : ranks) {
            const long long d = doubled(r);
            for (std::size_t k = n1; k >= 1; --k) {
                for (long long s = max_sum; s >= d; --s) {
                    ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - d)];
                }
            }
        }
        const double offset = static_cast<double>(n1 * (n1 + 1)) / 2.0;
        const double observed = std::abs(u1 - mean_u);
        double extreme = 0.0, total = 0.0;
        for (long long s = 0; s <= max_sum; ++s) {
            const double w = ways[n1][static_cast<std::size_t>(s)];
            if (w == 0.0) continue;
            total += w;
            const double u = static_cast<double>(s) / 2.0 - offset;
            if (std::abs(u - mean_u) >= observed - kTieEps) extreme += w;
        }
        report.p_value = clamp_p(extreme / total);
        report.exact = true;
        return report;
    }

    double tie_term = 0.0;
    for (auto t : tie_groups(pooled)) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double nd = static_cast<double>(n);
    const double var = static_cast<double>(n1 * n2) / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (var <= 0.0) {
        report.p_value = 1.0;
        return report;
    }
    const double z = std::max(0.0, std::abs(u1 - mean_u) - 0.5) / std::sqrt(var);
    report.p_value = two_sided_normal_p(z);
    return report;
}

TestReport wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs, ZeroHandling zeros) {
    std::vector<double> diffs;
    for (const auto& [a, b] : pairs) diffs.push_back(a - b);
    std::vector<double> magnitudes;
    if (zeros == ZeroHandling::drop) {
        for (double d : diffs) {
            if (d != 0.0) magnitudes.push_back(std::abs(d));
        }
        diffs.erase(std::remove(diffs.begin(), diffs.end(), 0.0), diffs.end());
    } else {
        for (double d : diffs) magnitudes.push_back(std::abs(d));
    }
    auto ranks = midranks(magnitudes);

    // Keep only the non-zero differences with their ranks.
    std::vector<double> signed_ranks;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (diffs[i] > 0) signed_ranks.push_back(ranks[i]);
        else if (diffs[i] < 0) signed_ranks.push_back(-ranks[i]);
    }
    const std::size_t n = signed_ranks.size();
    if (n == 0) throw TestError("Wilcoxon signed-rank needs at least one non-zero difference");

    double w_plus = 0.0, total = 0.0, sum_sq = 0.0;
    for (double r : signed_ranks) {
        total += std::abs(r);
        sum_sq += r * r;
        if (r > 0) w_plus += r;
    }
    const double mean_w = total / 2.0;

    TestReport report;
    report.method = TestMethod::wilcoxon_signed_rank;
    report.n1 = n;
    report.n2 = n;
    report.statistic = std::min(w_plus, total - w_plus);

    if (n <= kWilcoxonExactMax) {
        long long max_sum = 0;
        for (double r : signed_ranks) max_sum += doubled(std::abs(r));
        std::vector<double> ways(static_cast<std::size_t>(max_sum) + 1, 0.0);
        ways[0] = 1.0;
        for (double r : signed_ranks) {
            const long long d = doubled(std::abs(r));
            for (long long s = max_sum; s >= d; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - d)];
        }
        const double observed = std::abs(w_plus - mean_w);
        double extreme = 0.0;
        for (long long s = 0; s <= max_sum; ++s) {
            const double w = ways[static_cast<std::size_t>(s)];
            if (w != 0.0 && std::abs(static_cast<double>(s) / 2.0 - mean_w) >= observed - kTieEps) extreme += w;
        }
        report.p_value = clamp_p(extreme / std::ldexp(1.0, static_cast<int>(n)));
        report.exact = true;
        return report;
    }

    const double var = sum_sq / 4.0;
    const double z = std::max(0.0, std::abs(w_plus - mean_w) - 0.5) / std::sqrt(var);
    report.p_value = two_sided_normal_p(z);
    return report;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw InvalidArgument("pearson needs equal-length, non-empty inputs");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw CorrelationUndefined("correlation is undefined for a constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("spearman inputs differ in length");
    if (x.size() < 4) throw InvalidArgument("spearman needs at least 4 pairs");
    auto rx = midranks(x);
    auto ry = midranks(y);
    CorrelationReport c;
    c.n = x.size();
    c.rho = pearson(rx, ry);
    const double nd = static_cast<double>(c.n);
    if (std::abs(c.rho) >= 1.0 - 1e-15) {
        c.ci_low = c.ci_high = c.rho;
        c.p_value = 0.0;
        return c;
    }
    const double z = std::atanh(c.rho);
    const double se = 1.0 / std::sqrt(nd - 3.0);
    c.ci_low = std::tanh(z - kZ975 * se);
    c.ci_high = std::tanh(z + kZ975 * se);
    const double t = c.rho * std::sqrt((nd - 2.0) / (1.0 - c.rho * c.rho));
    boost::math::students_t dist(nd - 2.0);
    c.p_value = clamp_p(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    return c;
}

std::string to_string(TestMethod m) {
    return m == TestMethod::mann_whitney_u ? "mann_whitney_u" : "wilcoxon_signed_rank";
}

json to_json(const SummaryStat& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}}; }

json to_json(const TestReport& t) {
    return {{"method", to_string(t.method)}, {"statistic", t.statistic}, {"p_value", t.p_value}, {"n1", t.n1},
            {"n2", t.n2}, {"exact", t.exact}, {"alternative", t.alternative}};
}

json to_json(const CorrelationReport& c) {
    return {{"rho", c.rho}, {"ci_low", c.ci_low}, {"ci_high", c.ci_high}, {"p_value", c.p_value}, {"n", c.n}};
}

}  // namespace satire::eval
