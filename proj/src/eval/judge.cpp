#include "satire/eval/judge.hpp"

#include <spdlog/spdlog.h>

#include <mutex>

#include "satire/error.hpp"
#include "satire/util/parallel.hpp"

namespace satire::eval {

const char* const kJudgeSystemPrompt =
    "Task:\n"
    "Score a satirical definition on two dimensions:\n"
    "- funny\n"
    "- political\n"
    "\n"
    "Use only the text provided by the user.\n"
    "Do not use external knowledge.\n"
    "Do not explain your answer.\n"
    "Do not add any text before or after the JSON.\n"
    "\n"
    "Scales:\n"
    "\n"
    "funny:\n"
    "1 = not funny\n"
    "2 = slightly funny\n"
    "3 = funny\n"
    "4 = very funny\n"
    "5 = extremely funny\n"
    "\n"
    "political:\n"
    "1 = not political\n"
    "2 = slightly political\n"
    "3 = generally political\n"
    "4 = clearly political and topical\n"
    "5 = strongly political and specifically relevant to Finnish political culture\n"
    "\n"
    "Output rules:\n"
    "- Output exactly one JSON object\n"
    "- Use exactly these two keys: \"funny\", \"political\"\n"
    "- Both values must be integers from 1 to 5\n"
    "- Do not use markdown\n"
    "- Do not use code fences\n"
    "- Do not output anything except the JSON object\n"
    "\n"
    "Valid output example:\n"
    "{\"funny\": 3, \"political\": 4}";

namespace {

// Index one past the closing brace of the object opened at `open`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i + 1;
    }
    return std::string_view::npos;
}

int read_score(const nlohmann::json& obj, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw InvalidJudgeOutput(std::string("\"") + key + "\" is not an integer");
    auto n = v.get<long long>();
    if (n < 1 || n > 5) throw InvalidJudgeOutput(std::string("\"") + key + "\" = " + std::to_string(n) + " is outside 1..5");
    return static_cast<int>(n);
}

}  // namespace

JudgeScores parse_judge_reply(std::string_view reply) {
    if (reply.find('{') == std::string_view::npos) throw InvalidJudgeOutput("reply contains no JSON object");
    // Prose may contain stray braces; the first candidate that is a JSON object wins.
    nlohmann::json obj;
    for (auto open = reply.find('{'); open != std::string_view::npos; open = reply.find('{', open + 1)) {
        auto end = balanced_end(reply, open);
        if (end == std::string_view::npos) continue;
        auto parsed = nlohmann::json::parse(reply.substr(open, end - open), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            obj = std::move(parsed);
            break;
        }
    }
    if (obj.is_null()) throw InvalidJudgeOutput("reply has no balanced, valid JSON object");
    if (obj.size() != 2 || !obj.contains("funny") || !obj.contains("political")) {
        throw InvalidJudgeOutput("object must have exactly the keys \"funny\" and \"political\"");
    }
    return {read_score(obj, "funny"), read_score(obj, "political")};
}

std::string judge_user_message(const std::string& word, const std::string& definition_text) {
    return word + ": " + definition_text;
}

AnnotationRecord judge(const generation::DefinitionRecord& definition, const std::string& model,
                       ChatClient& client, const JudgeOptions& options) {
    ChatRequest request{model, kJudgeSystemPrompt, judge_user_message(definition.word, definition.definition_text),
                        options.temperature, options.seed};
    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        try {
            auto scores = parse_judge_reply(client.complete(request));
            return {definition.record_id, model, "llm:" + model, scores.funny, scores.political};
        } catch (const Error& e) {
            last_error = e.what();
            spdlog::debug("judge {} on {} attempt {}: {}", model, definition.record_id, attempt + 1, last_error);
        }
    }
    throw InvalidJudgeOutput(model + " gave no valid score for " + definition.record_id + " after " +
                             std::to_string(options.max_retries + 1) + " attempts: " + last_error);
}

JudgeRun judge_all(const std::vector<generation::DefinitionRecord>& definitions,
                   const std::vector<std::string>& models, ChatClient& client, const JudgeOptions& options,
                   std::size_t parallelism) {
    const std::size_t n = definitions.size() * models.size();
    std::vector<std::optional<AnnotationRecord>> slots(n);
    std::vector<std::string> errors(n);
    parallel_for(n, parallelism, [&](std::size_t i) {
        const auto& model = models[i / definitions.size()];
        const auto& def = definitions[i % definitions.size()];
        try {
            slots[i] = judge(def, model, client, options);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    JudgeRun run;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            run.annotations.push_back(std::move(*slots[i]));
        } else {
            run.missing.push_back({definitions[i % definitions.size()].record_id, models[i / definitions.size()], errors[i]});
            spdlog::warn("missing judge score: {}", errors[i]);
        }
    }
    return run;
}

}  // namespace satire::eval
