#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "satire/config.hpp"
#include "satire/error.hpp"
#include "satire/http.hpp"
#include "satire/mock/backend.hpp"
#include "satire/pipeline.hpp"
#include "satire/service.hpp"
#include "satire/util/text.hpp"
#include "test_support.hpp"

using namespace satire;
using json = nlohmann::json;

namespace {

struct Mocks {
    std::shared_ptr<mock::ScriptedClassifier> classifier = std::make_shared<mock::ScriptedClassifier>();
    std::shared_ptr<mock::HashEmbedder> topic_embedder = std::make_shared<mock::HashEmbedder>("topic-model");
    std::shared_ptr<mock::HashEmbedder> retrieval_embedder = std::make_shared<mock::HashEmbedder>("retrieval-model");
    std::shared_ptr<mock::ScriptedChat> generator = std::make_shared<mock::ScriptedChat>();

    PipelineClients clients() const { return {classifier, topic_embedder, retrieval_embedder, generator}; }
    std::size_t calls() const {
        return classifier->calls() + topic_embedder->calls() + retrieval_embedder->calls() + generator->calls();
    }
};

PipelineConfig fixture_config(const std::filesystem::path& work) {
    PipelineConfig config;
    config.work_dir = work;
    config.source.fixture_dir = testing::fixture_corpus();
    config.now = testing::fixture_now();
    return config;
}

struct ScopedEnv {
    std::string name;
    ScopedEnv(std::string n, const std::string& value) : name(std::move(n)) { ::setenv(name.c_str(), value.c_str(), 1); }
    ~ScopedEnv() { ::unsetenv(name.c_str()); }
};

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("toml subset parses sections, scalars and arrays") {
        auto values = parse_toml(R"(
# comment
top = "x"
[gate]
token_limit = 1_024   # trailing comment
sentiment_threshold = 1.5
[ingest]
live = false
listing_urls = ["https://a.test/1", "https://a.test/#2"]
name = "tab\there \"quoted\""
)");
        CHECK(std::get<std::string>(values.at("top")) == "x");
        CHECK(std::get<double>(values.at("gate.token_limit")) == 1024);
        CHECK(std::get<double>(values.at("gate.sentiment_threshold")) == 1.5);
        CHECK(std::get<bool>(values.at("ingest.live")) == false);
        CHECK(std::get<std::vector<std::string>>(values.at("ingest.listing_urls")).size() == 2);
        CHECK(std::get<std::string>(values.at("ingest.name")) == "tab\there \"quoted\"");
    }

    TEST_CASE("toml errors name the line") {
        try {
            parse_toml("[gate]\ntoken_limit = \n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("2") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
        CHECK_THROWS_AS(parse_toml("[open\n"), ConfigError);
        CHECK_THROWS_AS(parse_toml("s = \"unterminated\n"), ConfigError);
    }

    TEST_CASE("settings map onto the config and unknown keys fail") {
        auto c = config_from_toml(R"(
[paths]
work_dir = "w"
[gate]
token_limit = 256
sentiment_threshold = 2.0
[retrieval]
top_k = 5
[models]
judges = ["a", "b"]
[endpoints]
classifier = "http://10.0.0.1:9000/classify"
)");
        CHECK(c.work_dir == "w");
        CHECK(c.gate.token_limit == 256);
        CHECK(c.gate.threshold == 2.0);
        CHECK(c.retrieval.top_k == 5);
        CHECK(c.models.judges == std::vector<std::string>{"a", "b"});
        CHECK(c.gate.classifier_endpoint == "http://10.0.0.1:9000/classify");
        CHECK_THROWS_AS(config_from_toml("[gate]\ncolour = 1\n"), ConfigError);
        CHECK_THROWS_AS(config_from_toml("[nosuch]\nx = 1\n"), ConfigError);
        CHECK_THROWS_AS(config_from_toml("[gate]\ntoken_limit = \"many\"\n"), ConfigError);
    }

    TEST_CASE("environment overrides the file, which overrides defaults") {
        testing::TempDir dir;
        write_file_atomic(dir / "c.toml", "[endpoints]\ngenerator = \"http://file.test/generate\"\n"
                                          "judge = \"http://file.test/judge\"\n");
        ScopedEnv env("SATIRE_JUDGE_URL", "http://env.test/judge");
        auto c = load_config(dir / "c.toml");
        CHECK(c.endpoints.generator == "http://file.test/generate");
        CHECK(c.endpoints.judge == "http://env.test/judge");
        CHECK(c.endpoints.classifier == EndpointConfig{}.classifier);
        CHECK_THROWS_AS(load_config(dir / "missing.toml"), ConfigError);
    }

    TEST_CASE("validation rejects out-of-range settings") {
        PipelineConfig c;
        c.validate();
        c.retrieval.top_k = 0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = PipelineConfig{};
        c.endpoints.generator = "ftp://x";
        CHECK_THROWS_AS(c.validate(), ConfigError);
    }
}

TEST_SUITE("http") {
    TEST_CASE("endpoint parsing and url resolution") {
        auto ep = http::Endpoint::parse("http://127.0.0.1:8800/classify");
        CHECK(ep.host == "127.0.0.1");
        CHECK(ep.port == 8800);
        CHECK(ep.path == "/classify");
        CHECK(http::Endpoint::parse("https://yle.fi").port == 443);
        CHECK_THROWS_AS(http::Endpoint::parse("yle.fi/news"), ConfigError);
        CHECK_THROWS_AS(http::Endpoint::parse("http://host:99999/"), ConfigError);
        CHECK(http::resolve_url("https://yle.fi/news/list", "/a/1") == "https://yle.fi/a/1");
        CHECK(http::resolve_url("https://yle.fi/news/list", "a/2#top") == "https://yle.fi/news/a/2");
        CHECK(http::resolve_url("http://h:81/x/y", "z") == "http://h:81/x/z");
        CHECK(http::resolve_url("https://yle.fi/", "https://other.test/p") == "https://other.test/p");
    }

    TEST_CASE("http clients talk to the mock backend") {
        mock::MockBackend backend;
        backend.set_classifier([](const std::string& t) { return t.size() % 5 + 1; });
        HttpClassifier classifier(backend.url("/classify"), std::chrono::seconds(5));
        CHECK(classifier.classify("abc") == 4);

        HttpEmbedder embedder(backend.url("/embed"), "m", std::chrono::seconds(5));
        auto vectors = embedder.embed({"sauna night", "hockey"});
        REQUIRE(vectors.size() == 2);
        CHECK(vectors[0] == mock::hash_embed("sauna night", "m"));

        HttpChat chat(backend.url("/generate"), std::chrono::seconds(5));
        ChatRequest req{"gen", "system", "Term: sauna", 0.8, 1};
        CHECK(chat.complete(req) == mock::canned_definition(req));

        backend.fail_next("generate", 1);
        CHECK_THROWS_AS(chat.complete(req), HttpError);
        CHECK(chat.complete(req) == mock::canned_definition(req));
        backend.set_down("classify", true);
        CHECK_THROWS_AS(classifier.classify("x"), HttpError);
        CHECK(backend.requests("generate") == 3);
    }
}

TEST_SUITE("pipeline") {
    TEST_CASE("full run, cache hits and determinism") {
        testing::TempDir a, b;
        Mocks m1, m2;
        auto reports = run_pipeline(fixture_config(a.path()), m1.clients());
        REQUIRE(reports.size() == 5);
        for (const auto& r : reports) CHECK_FALSE(r.cache_hit);
        run_pipeline(fixture_config(b.path()), m2.clients());

        WorkPaths pa(a.path()), pb(b.path());
        for (auto member : {&WorkPaths::topics, &WorkPaths::index, &WorkPaths::definitions, &WorkPaths::keep}) {
            CHECK(read_file(pa.*member) == read_file(pb.*member));
        }
        auto records = generation::read_jsonl(pa.definitions);
        CHECK(records.size() == 100);

        const auto before = m1.calls();
        auto rerun = run_pipeline(fixture_config(a.path()), m1.clients());
        CHECK(m1.calls() == before);
        for (const auto& r : rerun) {
            if (r.stage != "ingest") CHECK(r.cache_hit);
        }
    }

    TEST_CASE("a changed setting reruns only the affected stages") {
        testing::TempDir dir;
        Mocks m;
        run_pipeline(fixture_config(dir.path()), m.clients());
        auto config = fixture_config(dir.path());
        config.generation.temperature = 0.5;
        auto reports = run_pipeline(config, m.clients());
        for (const auto& r : reports) {
            if (r.stage == "gate" || r.stage == "topics" || r.stage == "index") CHECK(r.cache_hit);
            if (r.stage == "generate") CHECK_FALSE(r.cache_hit);
        }
    }

    TEST_CASE("a corrupted artifact halts with the stage name") {
        testing::TempDir dir;
        Mocks m;
        run_pipeline(fixture_config(dir.path()), m.clients());
        WorkPaths paths(dir.path());
        {
            std::ofstream out(paths.topics, std::ios::app);
            out << "garbage";
        }
        try {
            run_pipeline(fixture_config(dir.path()), m.clients());
            FAIL("expected StageError");
        } catch (const StageError& e) {
            CHECK(e.stage() == "topics");
        }
        PipelineOptions force;
        force.force = true;
        CHECK_NOTHROW(run_pipeline(fixture_config(dir.path()), m.clients(), force));
    }

    TEST_CASE("failing endpoints surface as StageError") {
        testing::TempDir dir;
        Mocks m;
        m.classifier = std::make_shared<mock::ScriptedClassifier>([](const std::string&) -> int {
            throw HttpError("down");
        });
        try {
            run_pipeline(fixture_config(dir.path()), m.clients());
            FAIL("expected StageError");
        } catch (const StageError& e) {
            CHECK(e.stage() == "gate");
        }
        PipelineOptions only;
        only.only = "generate";
        testing::TempDir empty;
        CHECK_THROWS_AS(run_pipeline(fixture_config(empty.path()), Mocks{}.clients(), only), StageError);
    }
}

TEST_SUITE("service") {
    struct ServiceFixture {
        testing::TempDir work;
        Mocks mocks;
        PipelineConfig config;
        std::unique_ptr<ApiServer> server;
        std::string base;

        explicit ServiceFixture(std::shared_ptr<ChatClient> generator = nullptr) {
            config = fixture_config(work.path());
            run_pipeline(config, mocks.clients());
            config.service.log_definitions = work / "served.jsonl";
            auto state = load_service_state(config, *mocks.retrieval_embedder);
            server = std::make_unique<ApiServer>(state, generator ? generator : mocks.generator, config,
                                                 [] { return testing::fixture_now(); });
            base = "http://127.0.0.1:" + std::to_string(server->start("127.0.0.1", 0));
        }

        http::Response get(const std::string& path) const {
            return http::send("GET", base + path, "", std::chrono::seconds(10));
        }
        http::Response post(const std::string& path, const std::string& body) const {
            return http::send("POST", base + path, body, std::chrono::seconds(10));
        }
    };

    TEST_CASE("read endpoints conform to their schemas") {
        ServiceFixture f;
        auto health = f.get("/api/health");
        CHECK(health.status == 200);
        auto hj = json::parse(health.body);
        CHECK(testing::schema_violation("api_health.schema.json", hj) == "");
        CHECK(hj["articles"] == 20);

        auto topics = f.get("/api/topics");
        CHECK(topics.status == 200);
        CHECK(testing::schema_violation("api_topics.schema.json", json::parse(topics.body)) == "");

        auto search = f.get("/api/search?q=election");
        CHECK(search.status == 200);
        auto sj = json::parse(search.body);
        CHECK(testing::schema_violation("api_search.schema.json", sj) == "");
        CHECK_FALSE(sj["snippets"].empty());
        for (const auto& s : sj["snippets"]) CHECK(s["similarity"].get<double>() >= 0.1);
    }

    TEST_CASE("define produces a schema-valid record and logs it") {
        ServiceFixture f;
        json request{{"word", "election"}, {"grounding", "rag"}};
        CHECK(testing::schema_violation("api_define_request.schema.json", request) == "");
        auto res = f.post("/api/define", request.dump());
        REQUIRE(res.status == 200);
        auto body = json::parse(res.body);
        CHECK(testing::schema_violation("api_define.schema.json", body) == "");
        CHECK(body["record"]["condition"]["word_source"] == "user");
        CHECK(body["record"]["generated_at"] == "2026-03-03T12:00:00Z");
        CHECK_FALSE(body["record"]["downgraded"].get<bool>());
        CHECK(split_lines(read_file(f.work / "served.jsonl")).size() == 1);

        auto none = json::parse(f.post("/api/define", R"({"word": "sauna", "grounding": "none"})").body);
        CHECK(none["snippets"].empty());
        CHECK(none["record"]["snippet_ids"].empty());
    }

    TEST_CASE("bad requests and missing routes answer with error bodies") {
        ServiceFixture f;
        for (const auto& bad : {std::string(R"({"word": ""})"), std::string(R"({"word": 3})"), std::string("nope"),
                                std::string(R"({"word": "x", "grounding": "maybe"})"),
                                std::string(R"({"word": "x", "extra": 1})")}) {
            auto res = f.post("/api/define", bad);
            CHECK(res.status == 400);
            CHECK(testing::schema_violation("api_error.schema.json", json::parse(res.body)) == "");
        }
        auto empty = f.get("/api/search?q=");
        CHECK(empty.status == 400);
        auto missing = f.get("/api/nothing");
        CHECK(missing.status == 404);
        auto mj = json::parse(missing.body);
        CHECK(testing::schema_violation("api_error.schema.json", mj) == "");
        CHECK(mj["error"] == "not_found");
    }

    TEST_CASE("generator failure is a 502") {
        ServiceFixture f(std::make_shared<mock::ScriptedChat>([](const ChatRequest&) -> std::string {
            throw HttpError("down");
        }));
        auto res = f.post("/api/define", R"({"word": "sauna"})");
        CHECK(res.status == 502);
        CHECK(testing::schema_violation("api_error.schema.json", json::parse(res.body)) == "");
    }

    TEST_CASE("missing artifacts stop the service from loading") {
        testing::TempDir dir;
        mock::HashEmbedder embedder("retrieval-model");
        CHECK_THROWS_AS(load_service_state(fixture_config(dir.path()), embedder), StoreError);
    }
}
