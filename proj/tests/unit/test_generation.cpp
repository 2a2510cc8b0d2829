#include <doctest.h>

#include <map>
#include <regex>

#include "satire/error.hpp"
#include "satire/generation.hpp"
#include "satire/mock/backend.hpp"
#include "satire/util/text.hpp"
#include "test_support.hpp"

using namespace satire;
using namespace satire::generation;

namespace {

retrieval::Snippet snippet(const std::string& id, const std::string& ts, const std::string& category,
                           const std::string& title, const std::string& text) {
    retrieval::Snippet s;
    s.article_id = id;
    s.header = {ts, category, title};
    s.text = text;
    s.similarity = 0.5;
    s.match_kind = retrieval::MatchKind::exact;
    return s;
}

std::string words(int n) {
    std::string out;
    for (int i = 0; i < n; ++i) out += (i ? " w" : "w") + std::to_string(i);
    return out;
}

corpus::Article article(const std::string& id, const std::string& body) {
    corpus::Article a;
    a.id = id;
    a.url = "https://example.test/" + id;
    a.title = "Title " + id;
    a.category = "Politics";
    a.body = body;
    a.published_at = testing::fixture_now();
    a.fetched_at = testing::fixture_now();
    return a;
}

struct Fixture {
    std::vector<corpus::Article> articles{article("a1", "The election campaign is about taxes."),
                                          article("a2", "Sauna prices rose in winter."),
                                          article("a3", "Hockey fans celebrated the win.")};
    mock::HashEmbedder embedder{"retr"};
    EmbeddingCache cache;
    retrieval::Retriever retriever{retrieval::build_index(articles, embedder, cache, testing::fixture_now()),
                                   articles, embedder};
};

}  // namespace

TEST_SUITE("generation") {
    TEST_CASE("system prompts match the published text byte for byte") {
        CHECK(std::string(kRagSystemPrompt) == read_file(testing::golden_dir() / "rag_system_prompt.txt"));
        CHECK(std::string(kBaselineSystemPrompt) == read_file(testing::golden_dir() / "baseline_system_prompt.txt"));
    }

    TEST_CASE("rag prompt golden file") {
        std::vector<retrieval::Snippet> snippets{
            snippet("a", "2026-02-27T08:15:00Z", "Politics", "Parties unveil tax pledges",
                    "Parties promised to lower {income} tax \"for everyone\"."),
            snippet("b", "2026-03-01T10:00:00Z", "Economy", "Prices climb", "Food prices rose again in February.")};
        auto prompt = build_rag_prompt("election", snippets);
        CHECK(prompt.text() == read_file(testing::golden_dir() / "rag_prompt_election.txt"));
        CHECK(build_rag_prompt("election", snippets).text() == prompt.text());
        // Braces and quotes are embedded as-is.
        CHECK(prompt.user.find(snippets[0].text) != std::string::npos);
        CHECK(prompt.user.find(snippets[1].text) != std::string::npos);
        CHECK(prompt.user.find("[2026-03-01T10:00:00Z | Economy | Prices climb] ") != std::string::npos);
        CHECK_THROWS_AS(build_rag_prompt("election", {}), InvalidArgument);
    }

    TEST_CASE("baseline prompt golden file and no snippet headers") {
        auto prompt = build_baseline_prompt("sauna");
        CHECK(prompt.text() == read_file(testing::golden_dir() / "baseline_prompt_sauna.txt"));
        CHECK(prompt.text().size() >= 11);
        CHECK(prompt.text().substr(prompt.text().size() - 11) == "Term: sauna");
        std::regex header(R"(\[[^\]|]+\|[^\]|]+\|[^\]]+\])");
        CHECK_FALSE(std::regex_search(build_baseline_prompt("election").text(), header));
        CHECK_THROWS_AS(build_baseline_prompt("  "), InvalidArgument);
    }

    TEST_CASE("word count and oversize flag") {
        Fixture f;
        GenerationConfig config;
        mock::ScriptedChat twelve([](const ChatRequest&) { return "  " + words(12) + "\n"; });
        auto r = generate_definition("sauna", {WordSource::topic, Grounding::none}, nullptr, twelve, config,
                                     testing::fixture_now())
                     .record;
        CHECK(r.word_count == 12);
        CHECK_FALSE(r.oversize_flag);
        CHECK(r.definition_text == words(12));

        mock::ScriptedChat sixty([](const ChatRequest&) { return words(60); });
        auto big = generate_definition("sauna", {WordSource::topic, Grounding::none}, nullptr, sixty, config,
                                       testing::fixture_now())
                       .record;
        CHECK(big.word_count == 60);
        CHECK(big.oversize_flag);
        CHECK(big.definition_text == words(60));
        CHECK(big.snippet_ids.empty());
    }

    TEST_CASE("rag record embeds every snippet with its header") {
        Fixture f;
        GenerationConfig config;
        mock::ScriptedChat chat;
        auto out = generate_definition("sauna", {WordSource::topic, Grounding::rag}, &f.retriever, chat, config,
                                       testing::fixture_now());
        const auto& r = out.record;
        REQUIRE_FALSE(out.snippets.empty());
        CHECK_FALSE(r.downgraded);
        CHECK(r.snippet_ids.size() == out.snippets.size());
        for (const auto& s : out.snippets) {
            CHECK(r.prompt_text.find("[" + s.header.timestamp + " | " + s.header.category + " | " + s.header.title +
                                     "] " + s.text) != std::string::npos);
        }
        CHECK(r.prompt_text.rfind(kRagSystemPrompt, 0) == 0);
        CHECK(r.model_id == config.model);
        CHECK(r.record_id == record_id_for("sauna", {WordSource::topic, Grounding::rag}));
    }

    TEST_CASE("rag without passing snippets downgrades to the baseline prompt") {
        Fixture f;
        GenerationConfig config;
        mock::ScriptedChat chat;
        auto r = generate_definition("reindeer", {WordSource::random, Grounding::rag}, &f.retriever, chat, config,
                                     testing::fixture_now())
                     .record;
        CHECK(r.downgraded);
        CHECK(r.condition.grounding == Grounding::rag);
        CHECK(r.snippet_ids.empty());
        CHECK(r.prompt_text == build_baseline_prompt("reindeer").text());
    }

    TEST_CASE("prompt budget is checked before any call") {
        Fixture f;
        GenerationConfig config;
        config.prompt_char_budget = 100;
        mock::ScriptedChat chat;
        CHECK_THROWS_AS(generate_definition("sauna", {WordSource::topic, Grounding::none}, nullptr, chat, config,
                                            testing::fixture_now()),
                        PromptBudgetError);
        CHECK(chat.calls() == 0);
    }

    TEST_CASE("endpoint failures retry and then raise GenerationError") {
        GenerationConfig config;
        int calls = 0;
        mock::ScriptedChat flaky([&](const ChatRequest&) -> std::string {
            if (++calls < 3) throw HttpError("busy");
            return "Fine.";
        });
        auto r = generate_definition("x", {WordSource::topic, Grounding::none}, nullptr, flaky, config,
                                     testing::fixture_now());
        CHECK(r.record.definition_text == "Fine.");
        mock::ScriptedChat dead([](const ChatRequest&) -> std::string { throw HttpError("down"); });
        CHECK_THROWS_AS(generate_definition("x", {WordSource::topic, Grounding::none}, nullptr, dead, config,
                                            testing::fixture_now()),
                        GenerationError);
        CHECK(dead.calls() == 1 + kEndpointRetries);
    }

    TEST_CASE("grid yields 25 records per condition and is reproducible") {
        Fixture f;
        topics::CandidateWordSet candidates;
        for (int i = 0; i < 25; ++i) {
            candidates.topic_words.push_back("topic" + std::to_string(i));
            candidates.random_words.push_back("random" + std::to_string(i));
        }
        candidates.topic_words[0] = "sauna";
        GenerationConfig config;
        mock::ScriptedChat chat;
        auto grid = run_grid(candidates, chat, f.retriever, config, testing::fixture_now());
        REQUIRE(grid.records.size() == 100);
        CHECK(grid.failures.empty());
        std::map<std::pair<std::string, std::string>, int> cells;
        for (const auto& r : grid.records) {
            cells[{to_string(r.condition.word_source), to_string(r.condition.grounding)}]++;
            if (r.condition.grounding == Grounding::none) CHECK(r.snippet_ids.empty());
            CHECK(r.word_count == static_cast<int>(split_whitespace(r.definition_text).size()));
            CHECK(r.oversize_flag == (r.word_count > 50));
        }
        CHECK(cells.size() == 4);
        for (const auto& [cell, n] : cells) CHECK(n == 25);
        CHECK(grid.records[0].word == "sauna");
        CHECK(grid.records[0].condition.grounding == Grounding::rag);
        CHECK(grid.records[1].condition.grounding == Grounding::none);

        auto again = run_grid(candidates, chat, f.retriever, config, testing::fixture_now());
        for (std::size_t i = 0; i < 100; ++i) {
            CHECK(again.records[i].record_id == grid.records[i].record_id);
            CHECK(again.records[i].definition_text == grid.records[i].definition_text);
        }

        testing::TempDir dir;
        write_jsonl(dir / "defs.jsonl", grid.records);
        auto back = read_jsonl(dir / "defs.jsonl");
        REQUIRE(back.size() == 100);
        for (std::size_t i = 0; i < 100; ++i) CHECK(to_json(back[i]) == to_json(grid.records[i]));
    }

    TEST_CASE("one failing word leaves 98 records and two failure markers") {
        Fixture f;
        topics::CandidateWordSet candidates;
        for (int i = 0; i < 25; ++i) {
            candidates.topic_words.push_back("topic" + std::to_string(i));
            candidates.random_words.push_back("random" + std::to_string(i));
        }
        GenerationConfig config;
        mock::ScriptedChat chat([](const ChatRequest& req) -> std::string {
            if (req.user.find("Term: random7") != std::string::npos) throw HttpError("boom");
            return mock::canned_definition(req);
        });
        auto grid = run_grid(candidates, chat, f.retriever, config, testing::fixture_now());
        CHECK(grid.records.size() == 98);
        REQUIRE(grid.failures.size() == 2);
        CHECK(grid.failures[0].word == "random7");
        CHECK(failures_to_json(grid.failures).size() == 2);

        mock::ScriptedChat dead([](const ChatRequest&) -> std::string { throw HttpError("down"); });
        CHECK_THROWS_AS(run_grid(candidates, dead, f.retriever, config, testing::fixture_now()), GenerationError);
    }

    TEST_CASE("malformed definitions file is a StoreError") {
        testing::TempDir dir;
        write_file_atomic(dir / "bad.jsonl", "{\"record_id\": 1}\n");
        CHECK_THROWS_AS(read_jsonl(dir / "bad.jsonl"), StoreError);
    }
}
