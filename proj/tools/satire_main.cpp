#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <condition_variable>
#include <csignal>
#include <iostream>
#include <mutex>
#include <optional>

#include "satire/config.hpp"
#include "satire/error.hpp"
#include "satire/eval/judge.hpp"
#include "satire/eval/report.hpp"
#include "satire/eval/shuffle.hpp"
#include "satire/generation.hpp"
#include "satire/mock/backend.hpp"
#include "satire/pipeline.hpp"
#include "satire/retrieval.hpp"
#include "satire/service.hpp"
#include "satire/util/json_io.hpp"
#include "satire/util/text.hpp"

namespace {

using namespace satire;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStage = 2;

struct GlobalOptions {
    std::string config_file;
    std::string work_dir;
    std::string now;
    bool verbose = false;
};

PipelineConfig make_config(const GlobalOptions& g) {
    std::optional<std::filesystem::path> file;
    if (!g.config_file.empty()) file = g.config_file;
    auto config = load_config(file);
    if (!g.work_dir.empty()) config.work_dir = g.work_dir;
    if (!g.now.empty()) config.now = parse_rfc3339(g.now);
    return config;
}

void print_reports(const std::vector<StageReport>& reports) {
    for (const auto& r : reports) {
        std::cout << r.stage << ": " << (r.cache_hit ? "cache-hit" : "done") << " -> " << r.output.string() << " ("
                  << r.summary << ")\n";
    }
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::size_t start = 0;
        while (start <= item.size()) {
            auto comma = item.find(',', start);
            auto part = trim(item.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (!part.empty()) out.push_back(part);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    return out;
}

std::function<void()> g_shutdown;

void on_signal(int) {
    if (g_shutdown) g_shutdown();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grounded satire generation pipeline and evaluation lab"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("-c,--config", g.config_file, "Config file (TOML subset)")->check(CLI::ExistingFile);
    app.add_option("-w,--work", g.work_dir, "Work directory (overrides paths.work_dir)");
    app.add_option("--now", g.now, "Clock for age filtering and timestamps (RFC 3339)");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");

    bool force = false;
    std::vector<CLI::App*> stage_commands;
    for (const auto& stage : kStages) {
        auto* cmd = app.add_subcommand(stage, "Run the " + stage + " stage");
        cmd->add_flag("--force", force, "Recompute even when the manifest says the output is fresh");
        stage_commands.push_back(cmd);
    }
    auto* run = app.add_subcommand("run", "Run every stage in order");
    run->add_flag("--force", force, "Recompute every stage");

    std::string query;
    auto* search = app.add_subcommand("search", "Retrieve snippets for a query");
    search->add_option("query", query, "Query text")->required();

    std::string definitions_path, packet_path = "packet.json", key_path = "key.json";
    std::optional<std::uint64_t> shuffle_seed;
    auto* shuffle = app.add_subcommand("shuffle", "Blind-shuffle definitions into an annotation packet and key");
    shuffle->add_option("--definitions", definitions_path, "definitions.jsonl")->required()->check(CLI::ExistingFile);
    shuffle->add_option("--packet", packet_path, "Packet output");
    shuffle->add_option("--key", key_path, "Key output");
    shuffle->add_option("--seed", shuffle_seed, "Shuffle seed (default eval.shuffle_seed)");

    std::vector<std::string> models;
    std::string judges_out = "judges.csv";
    auto* judge = app.add_subcommand("judge", "Score definitions with LLM judges");
    judge->add_option("--definitions", definitions_path, "definitions.jsonl")->required()->check(CLI::ExistingFile);
    judge->add_option("--models", models, "Judge models, comma separated (default models.judges)");
    judge->add_option("--out", judges_out, "Annotation CSV output");

    std::vector<std::string> annotation_files;
    std::string report_out = "report.json", table_out;
    auto* report = app.add_subcommand("report", "Compute agreement, tests and correlations");
    report->add_option("--annotations", annotation_files, "Annotation CSV files")->required()->check(CLI::ExistingFile);
    report->add_option("--key", key_path, "Shuffle key")->required();
    report->add_option("--out", report_out, "JSON report output");
    report->add_option("--table", table_out, "Text table output (stdout when omitted)");

    std::string host;
    int port = -1;
    std::string log_definitions;
    auto* serve = app.add_subcommand("serve", "Serve the /api endpoints");
    serve->add_option("--host", host, "Bind address (default service.host)");
    serve->add_option("--port", port, "Port (default service.port)");
    serve->add_option("--log-definitions", log_definitions, "Append every generated definition to this JSONL file");

    int mock_port = 8800;
    auto* mock_serve = app.add_subcommand("mock-serve", "Run the deterministic mock endpoints");
    mock_serve->add_option("--port", mock_port, "Port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }
    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_pattern("%^%l%$: %v");

    PipelineConfig config;
    try {
        config = make_config(g);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        for (std::size_t i = 0; i < kStages.size(); ++i) {
            if (stage_commands[i]->parsed()) {
                print_reports(run_pipeline(config, PipelineClients::from_config(config), {kStages[i], force}));
                return kExitOk;
            }
        }
        if (run->parsed()) {
            print_reports(run_pipeline(config, PipelineClients::from_config(config), {std::nullopt, force}));
            return kExitOk;
        }
        if (search->parsed()) {
            auto clients = PipelineClients::from_config(config);
            auto state = load_service_state(config, *clients.retrieval_embedder);
            json out = json::array();
            for (const auto& s : state.retriever->search(query)) out.push_back(retrieval::to_json(s));
            std::cout << out.dump(2) << "\n";
            return kExitOk;
        }
        if (shuffle->parsed()) {
            auto records = generation::read_jsonl(definitions_path);
            auto packet = eval::blind_shuffle(records, shuffle_seed.value_or(config.shuffle_seed));
            write_json_file(packet_path, eval::packet_to_json(packet.entries));
            write_json_file(key_path, eval::to_json(packet.key));
            std::cout << "packet: " << packet_path << " (" << packet.entries.size() << " entries), key: " << key_path
                      << "\n";
            return kExitOk;
        }
        if (judge->parsed()) {
            auto records = generation::read_jsonl(definitions_path);
            auto model_list = models.empty() ? config.models.judges : split_list(models);
            HttpChat client(config.endpoints.judge, config.endpoints.timeout);
            eval::JudgeOptions options{config.judge.max_retries, config.judge.temperature, config.judge.seed};
            auto result = eval::judge_all(records, model_list, client, options, config.judge.parallelism);
            eval::write_annotations_csv(judges_out, result.annotations);
            std::cout << judges_out << ": " << result.annotations.size() << " scores, " << result.missing.size()
                      << " missing\n";
            return kExitOk;
        }
        if (report->parsed()) {
            std::vector<std::filesystem::path> files(annotation_files.begin(), annotation_files.end());
            auto result = eval::run_report(files, key_path, config.report);
            write_json_file(report_out, result.data);
            if (table_out.empty()) std::cout << result.table;
            else write_file_atomic(table_out, result.table);
            return kExitOk;
        }
        if (serve->parsed()) {
            if (!log_definitions.empty()) config.service.log_definitions = log_definitions;
            auto clients = PipelineClients::from_config(config);
            auto state = load_service_state(config, *clients.retrieval_embedder);
            ApiServer server(std::move(state), clients.generator, config);
            int bound = server.bind(host.empty() ? config.service.host : host, port >= 0 ? port : config.service.port);
            spdlog::info("serving /api on port {}", bound);
            g_shutdown = [&server] { server.stop(); };
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.listen();
            return kExitOk;
        }
        if (mock_serve->parsed()) {
            mock::MockBackend backend(mock_port);
            spdlog::info("mock endpoints on http://127.0.0.1:{} (/classify /embed /generate /judge)", backend.port());
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::mutex m;
            std::condition_variable cv;
            bool done = false;
            g_shutdown = [&] {
                std::lock_guard lock(m);
                done = true;
                cv.notify_all();
            };
            std::unique_lock lock(m);
            cv.wait(lock, [&] { return done; });
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitUsage;
}
