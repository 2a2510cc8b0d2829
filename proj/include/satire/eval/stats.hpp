#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace satire::eval {

using json = nlohmann::json;

struct SummaryStat {
    double mean = 0.0;
    double sd = 0.0;  // sample SD, n - 1 denominator
    std::size_t n = 0;
};

/// SummaryError for fewer than two values.
SummaryStat summarize(std::span<const double> values);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> midranks(std::span<const double> values);

enum class TestMethod { mann_whitney_u, wilcoxon_signed_rank };

struct TestReport {
    TestMethod method = TestMethod::mann_whitney_u;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    bool exact = false;
    std::string alternative = "two_sided";
};

/// Largest n1 + n2 for which mann_whitney_u enumerates exactly.
inline constexpr std::size_t kMannWhitneyExactMax = 16;
/// Largest count of non-zero differences for which wilcoxon enumerates exactly.
inline constexpr std::size_t kWilcoxonExactMax = 12;

/// Two-sided test. statistic = min(U_x, U_y) from midrank sums. The p-value
/// is P(|U - n1 n2 / 2| >= observed) under random assignment of the pooled
/// midranks: enumerated exactly for n1 + n2 <= 16, otherwise the normal
/// approximation with tie and continuity corrections. TestError on an empty
/// sample.
TestReport mann_whitney_u(std::span<const double> x, std::span<const double> y);

enum class ZeroHandling { drop, pratt };

/// Paired test over differences first - second. statistic = min(W+, W-).
/// `drop` discards zero differences before ranking; `pratt` ranks them and
/// then ignores their ranks. Exact over the 2^n sign patterns for n <= 12
/// non-zero differences, else normal approximation with tie and continuity
/// corrections. TestError when every difference is zero. n1 reports the
/// number of non-zero differences.
TestReport wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs,
                                ZeroHandling zeros = ZeroHandling::drop);

struct CorrelationReport {
    double rho = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Pearson correlation of midranks. 95% CI by Fisher z with SE 1/sqrt(n-3);
/// p from Student's t with n-2 degrees of freedom. Needs n >= 4
/// (InvalidArgument); CorrelationUndefined when either input is constant.
CorrelationReport spearman(std::span<const double> x, std::span<const double> y);

/// Plain Pearson product-moment correlation.
double pearson(std::span<const double> x, std::span<const double> y);

/// Upper-tail probability of the standard normal, doubled and clamped.
double two_sided_normal_p(double z);

std::string to_string(TestMethod m);
json to_json(const SummaryStat& s);
json to_json(const TestReport& t);
json to_json(const CorrelationReport& c);

}  // namespace satire::eval
