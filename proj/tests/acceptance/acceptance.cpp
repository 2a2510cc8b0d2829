// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "satire/corpus.hpp"
#include "satire/embedding.hpp"
#include "satire/error.hpp"
#include "satire/eval/agreement.hpp"
#include "satire/eval/judge.hpp"
#include "satire/eval/report.hpp"
#include "satire/eval/shuffle.hpp"
#include "satire/eval/stats.hpp"
#include "satire/mock/backend.hpp"
#include "satire/pipeline.hpp"
#include "satire/retrieval.hpp"
#include "satire/sentiment.hpp"
#include "satire/topics.hpp"
#include "satire/util/text.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace satire;

namespace {

/// Collects failed expectations for one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        ++checks_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    bool ok() const { return failed_ == 0; }
    std::size_t checks() const { return checks_; }
    std::string summary() const {
        std::string out = std::to_string(failed_) + " of " + std::to_string(checks_) + " checks failed";
        for (const auto& f : failures_) out += "; " + f;
        return out;
    }

private:
    std::size_t checks_ = 0, failed_ = 0;
    std::vector<std::string> failures_;
};

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = static_cast<double>(1 + rng() % 5);
    return out;
}

std::string fmt_double(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

std::vector<corpus::Article> fixture_articles() {
    corpus::SourceConfig config;
    config.fixture_dir = testing::fixture_corpus();
    return corpus::ingest(config, testing::fixture_now()).articles;
}

void stats_oracle_suite(Check& c) {
    std::mt19937_64 rng(20260303);
    int mwu = 0, wsr = 0;
    while (mwu < 250) {
        auto x = random_scores(rng, 1 + rng() % 8), y = random_scores(rng, 1 + rng() % 8);
        auto t = eval::mann_whitney_u(x, y);
        auto o = oracle::mann_whitney(x, y);
        c.expect(t.statistic == o.statistic && std::abs(t.p_value - o.p_value) <= 1e-12,
                 "MWU instance " + std::to_string(mwu));
        ++mwu;
    }
    while (wsr < 250) {
        std::size_t n = 1 + rng() % 10;
        auto a = random_scores(rng, n), b = random_scores(rng, n);
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(a[i], b[i]);
        auto o = oracle::wilcoxon(pairs);
        if (!o) continue;
        auto t = eval::wilcoxon_signed_rank(pairs);
        c.expect(t.statistic == o->statistic && std::abs(t.p_value - o->p_value) <= 1e-12,
                 "Wilcoxon instance " + std::to_string(wsr));
        ++wsr;
    }
    int alphas = 0;
    while (alphas < 120) {
        std::size_t raters = 2 + rng() % 5, items = 2 + rng() % 12;
        eval::RealMatrix m(raters, std::vector<std::optional<double>>(items));
        for (auto& row : m) {
            for (auto& cell : row) {
                if (rng() % 4 != 0) cell = static_cast<double>(1 + rng() % 5);
            }
        }
        auto expected = oracle::interval_alpha(m);
        if (!expected) continue;
        double got = eval::krippendorff_alpha(m, eval::AlphaMetric::interval);
        c.expect(std::abs(got - *expected) <= 1e-9, "alpha matrix " + std::to_string(alphas));
        ++alphas;
    }
    const std::vector<std::vector<double>> xs{{1, 2, 2, 3, 4, 4}, {3, 1, 4, 1, 5, 9, 2, 6}, {2, 2, 2, 1, 3, 3, 1}};
    const std::vector<std::vector<double>> ys{{2, 1, 3, 3, 5, 4}, {2, 7, 1, 8, 2, 8, 1, 8}, {1, 2, 2, 3, 3, 1, 1}};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double got = eval::spearman(xs[i], ys[i]).rho;
        c.expect(std::abs(got - oracle::spearman_rho(xs[i], ys[i])) <= 1e-12, "spearman fixture " + std::to_string(i));
    }
    c.expect(std::abs(eval::spearman(xs[0], ys[0]).rho - 0.8508410434878082) <= 1e-12, "spearman reference value");
}

void trivial_cases(Check& c) {
    eval::RealMatrix perfect{{1.0, 2.0, 3.0, 4.0, 5.0}, {1.0, 2.0, 3.0, 4.0, 5.0}, {1.0, 2.0, 3.0, 4.0, 5.0}};
    c.expect(std::abs(eval::krippendorff_alpha(perfect, eval::AlphaMetric::interval) - 1.0) <= 1e-12, "interval alpha 1");
    c.expect(std::abs(eval::krippendorff_alpha(perfect, eval::AlphaMetric::ordinal) - 1.0) <= 1e-12, "ordinal alpha 1");
    std::vector<double> x{1, 2, 3, 4, 5, 6}, up{2, 4, 8, 16, 32, 64}, down{6, 5, 4, 3, 2, 1};
    c.expect(eval::spearman(x, up).rho == 1.0, "rho +1");
    c.expect(eval::spearman(x, down).rho == -1.0, "rho -1");
    std::vector<double> same{1, 2, 3, 4, 5};
    c.expect(eval::mann_whitney_u(same, same).p_value >= 0.99, "U p on identical samples");
    std::vector<double> big;
    for (int i = 0; i < 40; ++i) big.push_back(1 + i % 5);
    c.expect(eval::mann_whitney_u(big, big).p_value >= 0.99, "U p on identical large samples");
    std::vector<double> twos{2, 2, 2};
    auto s = eval::summarize(twos);
    c.expect(s.mean == 2.0 && s.sd == 0.0, "summarize([2,2,2])");
}

void retrieval_invariants(Check& c) {
    auto articles = fixture_articles();
    mock::HashEmbedder embedder("all-MiniLM-L6-v2");
    EmbeddingCache cache;
    auto index = retrieval::build_index(articles, embedder, cache, testing::fixture_now());
    retrieval::Retriever retriever(index, articles, embedder);

    std::set<std::string> queries{"election", "sauna", "border", "energy", "snow", "teachers", "nato", "prices",
                                  "zebra", "government minister", "Helsinki"};
    for (const auto& a : articles) {
        for (const auto& t : topics::tokenize_terms(a.title)) queries.insert(t);
    }
    std::size_t snippets = 0;
    for (const auto& q : queries) {
        auto got = retriever.search(q);
        auto qv = embedder.embed({q})[0];
        std::vector<std::pair<double, std::string>> expected;
        double qn = 0;
        for (double v : qv) qn += v * v;
        for (const auto& e : index.entries) {
            double dot = 0, en = 0;
            for (std::size_t i = 0; i < qv.size(); ++i) {
                dot += qv[i] * e.values[i];
                en += e.values[i] * e.values[i];
            }
            if (qn == 0 || en == 0) continue;
            double sim = dot / std::sqrt(qn * en);
            if (sim >= 0.1) expected.push_back({-sim, e.article_id});
        }
        std::sort(expected.begin(), expected.end());
        if (expected.size() > 3) expected.resize(3);

        c.expect(got.size() <= 3, q + ": more than 3 snippets");
        c.expect(got.size() == expected.size(), q + ": result count differs from full scan");
        for (std::size_t i = 0; i < got.size() && i < expected.size(); ++i) {
            const auto& s = got[i];
            ++snippets;
            c.expect(s.article_id == expected[i].second, q + ": rank " + std::to_string(i) + " differs from full scan");
            c.expect(std::abs(s.similarity + expected[i].first) <= 1e-12, q + ": similarity differs from full scan");
            c.expect(s.similarity >= 0.1, q + ": similarity below floor");
            c.expect(utf8_length(s.text) <= 160, q + ": snippet longer than 160");
            c.expect(!s.header.timestamp.empty() && !s.header.category.empty() && !s.header.title.empty(),
                     q + ": incomplete header");
            const auto* article = retriever.article(s.article_id);
            if (s.match_kind == retrieval::MatchKind::exact) {
                auto first = ascii_lower(split_whitespace(q)[0]);
                c.expect(ascii_lower(s.text).find(first) != std::string::npos, q + ": exact window lacks the token");
            } else {
                auto bounds = utf8_boundaries(article->body);
                auto head = article->body.substr(0, bounds[std::min<std::size_t>(160, bounds.size() - 1)]);
                c.expect(s.text == head, q + ": fallback window is not the body head");
            }
        }
    }
    c.expect(snippets > 20, "too few snippets exercised");
}

void pipeline_determinism(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    testing::TempDir a, b;
    auto run = [](const std::filesystem::path& work) {
        PipelineConfig config;
        config.work_dir = work;
        config.source.fixture_dir = testing::fixture_corpus();
        config.now = testing::fixture_now();
        PipelineClients clients{std::make_shared<mock::ScriptedClassifier>(),
                                std::make_shared<mock::HashEmbedder>(config.models.topic_embedder),
                                std::make_shared<mock::HashEmbedder>(config.models.retrieval_embedder),
                                std::make_shared<mock::ScriptedChat>()};
        run_pipeline(config, clients);
    };
    run(a.path());
    run(b.path());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    WorkPaths pa(a.path()), pb(b.path());
    c.expect(read_file(pa.topics) == read_file(pb.topics), "topics.json differs");
    c.expect(read_file(pa.index) == read_file(pb.index), "idx.json differs");
    c.expect(read_file(pa.definitions) == read_file(pb.definitions), "definitions.jsonl differs");
    auto records = generation::read_jsonl(pa.definitions);
    c.expect(records.size() == 100, "expected 100 records, got " + std::to_string(records.size()));
    std::map<std::string, int> cells;
    std::set<std::string> words;
    for (const auto& r : records) {
        cells[generation::to_string(r.condition.word_source) + "/" + generation::to_string(r.condition.grounding)]++;
        words.insert(r.word);
    }
    c.expect(cells.size() == 4, "expected four conditions");
    for (const auto& [cell, n] : cells) c.expect(n == 25, cell + " has " + std::to_string(n) + " records");
    c.expect(words.size() == 50, "expected 50 distinct words");
    c.expect(seconds < 120.0, "two runs took " + fmt_double(seconds) + " s");
}

void gate_and_filter(Check& c) {
    const auto now = testing::fixture_now();
    auto aged = [&](const std::string& id, std::chrono::seconds age) {
        corpus::Article a;
        a.id = id;
        a.title = id;
        a.body = "x";
        a.published_at = now - age;
        a.fetched_at = now;
        return a;
    };
    auto kept = corpus::filter_by_age({aged("d30", std::chrono::seconds(30 * 86400)),
                                       aged("d31", std::chrono::seconds(31 * 86400)),
                                       aged("d29", std::chrono::seconds(29 * 86400))},
                                      now, 30);
    c.expect(kept.size() == 2 && kept[0].id == "d30" && kept[1].id == "d29", "age boundary");

    auto ingested = corpus::ingest(
        [] {
            corpus::SourceConfig s;
            s.fixture_dir = testing::fixture_corpus();
            return s;
        }(),
        now);
    for (const auto& a : ingested.articles) {
        c.expect(now - a.published_at <= std::chrono::days{30}, a.id + " older than 30 days kept");
    }
    c.expect(ingested.too_old == 4, "fixture corpus should lose 4 old pages");

    sentiment::GateConfig config;
    config.token_limit = 64;
    config.threshold = 1.0;
    mock::ScriptedClassifier classifier([](const std::string& chunk) {
        return static_cast<int>(std::hash<std::string>{}(chunk) % 5) + 1;
    });
    for (const auto& a : ingested.articles) {
        auto chunks = sentiment::split_batches(a.body, config.token_limit);
        double sum = 0;
        for (const auto& ch : chunks) sum += std::hash<std::string>{}(ch.text) % 5 + 1;
        auto score = sentiment::score_article(a, config, classifier);
        c.expect(score.batch_labels.size() == chunks.size(), a.id + ": one label per chunk");
        c.expect(std::abs(score.mean_label - sum / static_cast<double>(chunks.size())) <= 1e-12, a.id + ": mean");
    }
    auto gate = sentiment::run_gate(ingested.articles, config, classifier);
    c.expect(gate.kept.size() == ingested.articles.size(), "threshold 1.0 keeps every labeled article");
    c.expect(sentiment::apply_gate({{"x", {2, 2}, 2.4}}, 2.5).empty(), "2.4 below 2.5 discarded");
}

void judge_protocol(Check& c) {
    mock::MockBackend backend;
    HttpChat client(backend.url("/judge"), std::chrono::seconds(10));
    generation::DefinitionRecord def;
    def.record_id = "def-1";
    def.word = "sauna";
    def.definition_text = "A hot room where Finns sweat out their taxes.";

    backend.script_judge("clean", {R"({"funny": 4, "political": 2})"});
    auto a = eval::judge(def, "clean", client);
    c.expect(a.funny == 4 && a.political == 2, "clean JSON accepted");

    backend.script_judge("prose", {"Sure! Here is my rating:\n```json\n{\"funny\": 3, \"political\": 5}\n```\nHope it helps."});
    auto b = eval::judge(def, "prose", client);
    c.expect(b.funny == 3 && b.political == 5, "prose-wrapped JSON accepted");

    backend.reset_counters();
    backend.script_judge("wild", std::vector<std::string>(4, R"({"funny": 7, "political": 0})"));
    bool rejected = false;
    try {
        eval::judge(def, "wild", client);
    } catch (const InvalidJudgeOutput&) {
        rejected = true;
    }
    c.expect(rejected, "out-of-range reply rejected");
    c.expect(backend.requests("judge") == 4, "one attempt plus 3 retries, saw " + std::to_string(backend.requests("judge")));

    // A batch where one judge keeps answering out of range: its scores are missing, never clamped.
    std::vector<generation::DefinitionRecord> defs;
    for (int i = 0; i < 6; ++i) {
        auto d = def;
        d.word = "word" + std::to_string(i);
        d.record_id = "def-" + std::to_string(i);
        d.condition = {i % 2 ? generation::WordSource::random : generation::WordSource::topic,
                       i % 3 ? generation::Grounding::rag : generation::Grounding::none};
        defs.push_back(d);
    }
    backend.set_judge([](const ChatRequest& req) {
        if (req.model == "broken") return std::string(R"({"funny": 9, "political": -1})");
        return mock::canned_judgement(req);
    });
    auto run = eval::judge_all(defs, {"good", "broken"}, client);
    c.expect(run.missing.size() == defs.size(), "broken judge leaves every definition missing");
    for (const auto& r : run.annotations) {
        c.expect(r.funny >= 1 && r.funny <= 5 && r.political >= 1 && r.political <= 5, "score out of range in run");
    }
    auto packet = eval::blind_shuffle(defs, 7);
    auto annotations = run.annotations;
    for (std::size_t i = 0; i < defs.size(); ++i) {
        for (int h = 0; h < 3; ++h) {
            annotations.push_back({defs[i].record_id, "h" + std::to_string(h), h ? "local" : "international",
                                   static_cast<int>(1 + (i + h) % 5), static_cast<int>(1 + (i * 2 + h) % 5)});
        }
    }
    auto report = eval::run_report(annotations, packet.key);
    for (const char* dim : {"funny", "political"}) {
        for (const auto& [group, s] : report.data["dimensions"][dim]["summaries"].items()) {
            if (s.is_null()) continue;
            double mean = s["mean"].get<double>();
            c.expect(mean >= 1.0 && mean <= 5.0, std::string(dim) + " " + group + " mean outside 1..5");
        }
    }
    auto poisoned = annotations;
    poisoned.push_back({defs[0].record_id, "h9", "local", 6, 3});
    bool report_rejected = false;
    try {
        eval::run_report(poisoned, packet.key);
    } catch (const ReportError&) {
        report_rejected = true;
    }
    c.expect(report_rejected, "report accepted a score outside 1..5");
}

/// Returns false when the released dataset is not configured.
bool reference_reproduction(Check& c) {
    const char* csvs = std::getenv("SATIRE_REFERENCE_ANNOTATIONS");
    const char* key = std::getenv("SATIRE_REFERENCE_KEY");
    if (csvs == nullptr || key == nullptr || !*csvs || !*key) return false;
    std::vector<std::filesystem::path> paths;
    std::stringstream list(csvs);
    for (std::string p; std::getline(list, p, ',');) paths.emplace_back(p);
    auto report = eval::run_report(paths, key);
    const auto& dims = report.data["dimensions"];
    auto all_alpha = [&](const char* dim) -> std::optional<double> {
        for (const auto& row : dims[dim]["agreement"]) {
            if (row["rater_group"] == "all" && row["alpha"].is_number()) return row["alpha"].get<double>();
        }
        return std::nullopt;
    };
    auto near = [](std::optional<double> v, double target, double tol) { return v && std::abs(*v - target) <= tol; };
    c.expect(near(all_alpha("funny"), 0.070, 0.005), "alpha funny (all)");
    c.expect(near(all_alpha("political"), 0.514, 0.005), "alpha political (all)");
    auto human = [&](const char* dim, const char* field) -> std::optional<double> {
        const auto& s = dims[dim]["summaries"]["human"];
        if (s.is_null()) return std::nullopt;
        return s[field].get<double>();
    };
    c.expect(near(human("funny", "mean"), 1.98, 0.01), "funny mean");
    c.expect(near(human("funny", "sd"), 1.06, 0.01), "funny sd");
    c.expect(near(human("political", "mean"), 2.53, 0.01), "political mean");
    c.expect(near(human("political", "sd"), 1.55, 0.01), "political sd");
    bool found = false;
    for (const auto& [judge, corr] : dims["political"]["spearman"].items()) {
        if (ascii_lower(judge).find("aya") == std::string::npos || !corr.contains("rho")) continue;
        found = true;
        c.expect(corr["rho"].is_number() && std::abs(corr["rho"].get<double>() - 0.826) <= 0.01, "Aya political rho");
    }
    c.expect(found, "no Aya judge in the annotations");
    return true;
}

bool report_line(const std::string& name, const std::function<void(Check&)>& body) {
    Check c;
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    if (c.ok()) {
        std::cout << "PASS " << name << " (" << c.checks() << " checks)\n";
    } else {
        std::cout << "FAIL " << name << ": " << c.summary() << "\n";
    }
    return c.ok();
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    bool all = true;
    const bool oracles = report_line("statistics-oracle-suite", stats_oracle_suite);
    const bool trivial = report_line("trivial-case-suite", trivial_cases);
    all = oracles && trivial;
    all = report_line("retrieval-invariants", retrieval_invariants) && all;
    all = report_line("pipeline-determinism", pipeline_determinism) && all;
    all = report_line("gate-and-filter-semantics", gate_and_filter) && all;
    all = report_line("judge-protocol", judge_protocol) && all;

    Check reference;
    bool ran = false;
    try {
        ran = reference_reproduction(reference);
    } catch (const std::exception& e) {
        ran = true;
        reference.expect(false, std::string("exception: ") + e.what());
    }
    if (ran) {
        all = report_line("published-results-reproduction", [&](Check& c) { c = reference; }) && all;
    } else if (oracles && trivial) {
        std::cout << "PASS published-results-reproduction (annotation dataset not configured; "
                     "replaced by statistics-oracle-suite and trivial-case-suite)\n";
    } else {
        std::cout << "FAIL published-results-reproduction (annotation dataset not configured and the "
                     "replacement oracle suites failed)\n";
    }
    return all ? 0 : 1;
}
