#include "satire/eval/report.hpp"

#include <fmt/format.h>

#include <map>
#include <set>

#include "satire/error.hpp"
#include "satire/util/json_io.hpp"

namespace satire::eval {

namespace {

using generation::Grounding;
using generation::WordSource;

struct Rating {
    const AnnotationRecord* annotation;
    const KeyEntry* key;
};

json summary_or_null(const std::vector<double>& values) {
    if (values.size() < 2) return nullptr;
    return to_json(summarize(values));
}

json undefined(const std::string& reason) { return {{"value", nullptr}, {"reason", reason}}; }

template <typename Fn>
json guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        return undefined(e.what());
    }
}

std::string fmt_num(const json& j, const char* key, int precision = 3) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) return "n/a";
    return fmt::format("{:.{}f}", j.at(key).get<double>(), precision);
}

class Builder {
public:
    Builder(std::vector<Rating> ratings, const ReportConfig& config) : ratings_(std::move(ratings)), config_(config) {
        for (const auto& r : ratings_) {
            groups_.insert(r.annotation->rater_group);
            if (!is_human_group(r.annotation->rater_group)) judges_.insert(r.annotation->rater_group);
        }
    }

    json dimension(Dimension d) const {
        json out;
        out["summaries"] = summaries(d);
        out["summaries_by_condition"] = by_condition(d);
        out["agreement"] = agreement(d);
        out["mann_whitney_u"] = {
            {"local_vs_international",
             guarded([&] {
                 return to_json(mann_whitney_u(scores(d, [](const Rating& r) { return r.annotation->rater_group == "local"; }),
                                               scores(d, [](const Rating& r) { return r.annotation->rater_group == "international"; })));
             })},
            {"topic_vs_random", guarded([&] {
                 return to_json(mann_whitney_u(human_scores(d, [](const Rating& r) { return r.key->condition.word_source == WordSource::topic; }),
                                               human_scores(d, [](const Rating& r) { return r.key->condition.word_source == WordSource::random; })));
             })},
        };
        out["wilcoxon_signed_rank"] = {{"rag_vs_none", guarded([&] { return rag_vs_none(d); })}};
        out["spearman"] = correlations(d);
        return out;
    }

    std::vector<std::string> judges() const { return {judges_.begin(), judges_.end()}; }

private:
    template <typename Pred>
    std::vector<double> scores(Dimension d, Pred&& pred) const {
        std::vector<double> out;
        for (const auto& r : ratings_) {
            if (pred(r)) out.push_back(r.annotation->score(d));
        }
        return out;
    }

    template <typename Pred>
    std::vector<double> human_scores(Dimension d, Pred&& pred) const {
        return scores(d, [&](const Rating& r) { return is_human_group(r.annotation->rater_group) && pred(r); });
    }

    json summaries(Dimension d) const {
        json out;
        out["human"] = summary_or_null(human_scores(d, [](const Rating&) { return true; }));
        for (const auto& g : groups_) {
            out[g] = summary_or_null(scores(d, [&](const Rating& r) { return r.annotation->rater_group == g; }));
        }
        return out;
    }

    json by_condition(Dimension d) const {
        json out;
        for (auto source : {WordSource::topic, WordSource::random}) {
            for (auto grounding : {Grounding::rag, Grounding::none}) {
                out[generation::to_string(source) + "/" + generation::to_string(grounding)] =
                    summary_or_null(human_scores(d, [&](const Rating& r) {
                        return r.key->condition.word_source == source && r.key->condition.grounding == grounding;
                    }));
            }
        }
        return out;
    }

    json alpha_for(Dimension d, const std::string& label, const std::function<bool(const AnnotationRecord&)>& keep) const {
        std::vector<AnnotationRecord> subset;
        for (const auto& r : ratings_) {
            if (keep(*r.annotation)) {
                auto a = *r.annotation;
                a.record_id = r.key->record_id;
                subset.push_back(std::move(a));
            }
        }
        auto m = build_matrix(subset, d);
        json row = {{"rater_group", label}, {"n_raters", m.raters.size()}, {"n_items", m.items.size()}};
        try {
            double alpha = config_.alpha_metric == AlphaMetric::interval
                               ? krippendorff_alpha(znormalize(m.cells), AlphaMetric::interval)
                               : krippendorff_alpha(m.cells, AlphaMetric::ordinal);
            row["alpha"] = alpha;
        } catch (const Error& e) {
            row["alpha"] = nullptr;
            row["reason"] = e.what();
        }
        return row;
    }

    json agreement(Dimension d) const {
        json rows = json::array();
        rows.push_back(alpha_for(d, "all", [](const AnnotationRecord& a) { return is_human_group(a.rater_group); }));
        for (const auto& g : groups_) {
            if (is_human_group(g)) rows.push_back(alpha_for(d, g, [&](const AnnotationRecord& a) { return a.rater_group == g; }));
        }
        for (const auto& g : judges_) {
            rows.push_back(alpha_for(d, g, [&](const AnnotationRecord& a) { return a.rater_group == g; }));
        }
        if (judges_.size() > 1) {
            rows.push_back(alpha_for(d, "llm", [](const AnnotationRecord& a) { return !is_human_group(a.rater_group); }));
        }
        return rows;
    }

    // Mean human score per record id.
    std::map<std::string, double> human_means(Dimension d) const {
        std::map<std::string, std::pair<double, int>> acc;
        for (const auto& r : ratings_) {
            if (!is_human_group(r.annotation->rater_group)) continue;
            auto& [sum, n] = acc[r.key->record_id];
            sum += r.annotation->score(d);
            ++n;
        }
        std::map<std::string, double> out;
        for (const auto& [id, sn] : acc) out[id] = sn.first / sn.second;
        return out;
    }

    json rag_vs_none(Dimension d) const {
        auto means = human_means(d);
        std::map<std::pair<std::string, int>, std::pair<std::optional<double>, std::optional<double>>> by_word;
        for (const auto& r : ratings_) {
            auto it = means.find(r.key->record_id);
            if (it == means.end()) continue;
            auto& slot = by_word[{r.key->word, static_cast<int>(r.key->condition.word_source)}];
            (r.key->condition.grounding == Grounding::rag ? slot.first : slot.second) = it->second;
        }
        std::vector<std::pair<double, double>> pairs;
        for (const auto& [word, slot] : by_word) {
            if (slot.first && slot.second) pairs.emplace_back(*slot.first, *slot.second);
        }
        if (pairs.empty()) throw TestError("no word has human ratings for both groundings");
        return to_json(wilcoxon_signed_rank(pairs, config_.wilcoxon_zeros));
    }

    json correlations(Dimension d) const {
        auto means = human_means(d);
        json out = json::object();
        for (const auto& g : judges_) {
            std::map<std::string, double> judge_scores;
            for (const auto& r : ratings_) {
                if (r.annotation->rater_group == g) judge_scores[r.key->record_id] = r.annotation->score(d);
            }
            std::vector<double> x, y;
            for (const auto& [id, s] : judge_scores) {
                auto it = means.find(id);
                if (it == means.end()) continue;
                x.push_back(s);
                y.push_back(it->second);
            }
            out[g] = guarded([&] { return to_json(spearman(x, y)); });
        }
        return out;
    }

    std::vector<Rating> ratings_;
    ReportConfig config_;
    std::set<std::string> groups_;
    std::set<std::string> judges_;
};

std::string render_table(const json& data) {
    std::string out;
    for (const char* dim : {"funny", "political"}) {
        const auto& d = data.at("dimensions").at(dim);
        out += fmt::format("== {} ==\n", dim);
        out += fmt::format("{:<32} {:>8} {:>8} {:>6}\n", "summary", "mean", "sd", "n");
        for (const auto& [group, s] : d.at("summaries").items()) {
            out += fmt::format("{:<32} {:>8} {:>8} {:>6}\n", group, fmt_num(s, "mean"), fmt_num(s, "sd"),
                               s.is_null() ? std::string("-") : std::to_string(s.at("n").get<std::size_t>()));
        }
        for (const auto& [cell, s] : d.at("summaries_by_condition").items()) {
            out += fmt::format("{:<32} {:>8} {:>8} {:>6}\n", "human " + cell, fmt_num(s, "mean"), fmt_num(s, "sd"),
                               s.is_null() ? std::string("-") : std::to_string(s.at("n").get<std::size_t>()));
        }
        out += fmt::format("{:<32} {:>8} {:>8} {:>6}\n", "agreement (alpha)", "alpha", "raters", "items");
        for (const auto& row : d.at("agreement")) {
            out += fmt::format("{:<32} {:>8} {:>8} {:>6}\n", row.at("rater_group").get<std::string>(), fmt_num(row, "alpha"),
                               row.at("n_raters").get<std::size_t>(), row.at("n_items").get<std::size_t>());
        }
        out += fmt::format("{:<32} {:>8} {:>8}\n", "test", "stat", "p");
        for (const char* family : {"mann_whitney_u", "wilcoxon_signed_rank"}) {
            for (const auto& [name, t] : d.at(family).items()) {
                out += fmt::format("{:<32} {:>8} {:>8}\n", name, fmt_num(t, "statistic"), fmt_num(t, "p_value", 4));
            }
        }
        out += fmt::format("{:<32} {:>8} {:>18} {:>8}\n", "spearman vs human mean", "rho", "95% CI", "p");
        for (const auto& [judge, c] : d.at("spearman").items()) {
            std::string ci = c.contains("rho") ? "[" + fmt_num(c, "ci_low") + ", " + fmt_num(c, "ci_high") + "]" : "n/a";
            out += fmt::format("{:<32} {:>8} {:>18} {:>8}\n", judge, fmt_num(c, "rho"), ci, fmt_num(c, "p_value", 4));
        }
        out += "\n";
    }
    return out;
}

}  // namespace

Report run_report(const std::vector<AnnotationRecord>& annotations, const ShuffleKey& key, const ReportConfig& config) {
    std::vector<Rating> ratings;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& a : annotations) {
        const KeyEntry* entry = key.find(a.record_id);
        if (!entry) throw ReportError("annotation for '" + a.record_id + "' does not match any key entry");
        if (a.score(Dimension::funny) < 1 || a.score(Dimension::funny) > 5 || a.political < 1 || a.political > 5) {
            throw ReportError("score outside 1..5 for " + a.record_id + " by " + a.rater_id);
        }
        if (!seen.emplace(entry->record_id, a.rater_id).second) {
            throw ReportError("duplicate rating of " + entry->record_id + " by " + a.rater_id);
        }
        ratings.push_back({&a, entry});
    }
    Builder builder(std::move(ratings), config);

    std::size_t unrated = 0;
    {
        std::set<std::string> rated;
        for (const auto& a : annotations) {
            if (is_human_group(a.rater_group)) rated.insert(key.find(a.record_id)->record_id);
        }
        unrated = key.entries.size() - rated.size();
    }

    Report report;
    report.data["dimensions"] = {{"funny", builder.dimension(Dimension::funny)},
                                 {"political", builder.dimension(Dimension::political)}};
    report.data["n_annotations"] = annotations.size();
    report.data["n_definitions"] = key.entries.size();
    report.data["n_definitions_without_human_rating"] = unrated;
    report.data["judges"] = builder.judges();
    report.data["method"] = {
        {"alpha", config.alpha_metric == AlphaMetric::interval
                      ? "interval alpha on per-rater z-scores, normalized within each group"
                      : "ordinal alpha on raw scores"},
        {"wilcoxon_zeros", config.wilcoxon_zeros == ZeroHandling::drop ? "drop" : "pratt"},
        {"wilcoxon_pairing", "per-word human mean, rag minus none"},
        {"spearman_p", "Student's t approximation with n-2 degrees of freedom"},
        {"spearman_unit", "judge score vs per-definition human mean"},
    };
    report.table = render_table(report.data);
    return report;
}

Report run_report(const std::vector<std::filesystem::path>& annotation_csvs, const std::filesystem::path& key_path,
                  const ReportConfig& config) {
    if (!std::filesystem::exists(key_path)) {
        throw ReportError("key file " + key_path.string() + " not found; cannot unblind the annotations");
    }
    ShuffleKey key;
    try {
        key = shuffle_key_from_json(read_json_file(key_path));
    } catch (const Error& e) {
        throw ReportError(std::string("cannot read key file: ") + e.what());
    }
    std::vector<AnnotationRecord> all;
    for (const auto& p : annotation_csvs) {
        auto part = read_annotations_csv(p);
        all.insert(all.end(), part.begin(), part.end());
    }
    return run_report(all, key, config);
}

}  // namespace satire::eval
