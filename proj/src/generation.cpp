#include "satire/generation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include "satire/error.hpp"
#include "satire/util/hash.hpp"
#include "satire/util/parallel.hpp"
#include "satire/util/text.hpp"

namespace satire::generation {

const char* const kRagSystemPrompt =
    "You are the editor of a 'Satirical Dictionary'. Define the term based SOLELY on the provided news context.\n"
    "CRITICAL RULE: You must use the SPECIFIC IRONY found in the text, not generic stereotypes.\n"
    "Example: If the text says 'working people need food', do NOT joke about laziness. Joke about how wages are "
    "useless.\n"
    "Style Guidelines:\n"
    "1. Cynical and Dark.\n"
    "2. Highlight the absurdity of the specific situation described in the text.\n"
    "3. ATTENTION: Keep it under 50 words.\n"
    "Only output the definition, No explanations or commentary.";

const char* const kBaselineSystemPrompt =
    "You are the editor of a 'Satirical Dictionary'.\n"
    "CRITICAL RULE: You must use SPECIFIC IRONY typical for Finnish culture.\n"
    "Style Guidelines:\n"
    "1. Cynical and Dark.\n"
    "2. ATTENTION: Keep it under 50 words.\n"
    "Only output the definition, No explanations or commentary.";

std::string to_string(WordSource s) {
    switch (s) {
        case WordSource::topic: return "topic";
        case WordSource::random: return "random";
        case WordSource::user: return "user";
    }
    return "unknown";
}
std::string to_string(Grounding g) { return g == Grounding::rag ? "rag" : "none"; }

WordSource word_source_from_string(const std::string& s) {
    if (s == "topic") return WordSource::topic;
    if (s == "random") return WordSource::random;
    if (s == "user") return WordSource::user;
    throw InvalidArgument("unknown word_source: " + s);
}

Grounding grounding_from_string(const std::string& s) {
    if (s == "rag") return Grounding::rag;
    if (s == "none") return Grounding::none;
    throw InvalidArgument("unknown grounding: " + s);
}

json to_json(const DefinitionRecord& r) {
    return {{"record_id", r.record_id},
            {"word", r.word},
            {"condition", {{"word_source", to_string(r.condition.word_source)}, {"grounding", to_string(r.condition.grounding)}}},
            {"downgraded", r.downgraded},
            {"prompt_text", r.prompt_text},
            {"snippet_ids", r.snippet_ids},
            {"definition_text", r.definition_text},
            {"word_count", r.word_count},
            {"model_id", r.model_id},
            {"generated_at", format_rfc3339(r.generated_at)},
            {"oversize_flag", r.oversize_flag},
            {"seed", r.seed}};
}

DefinitionRecord definition_from_json(const json& j) {
    try {
        DefinitionRecord r;
        r.record_id = j.at("record_id").get<std::string>();
        r.word = j.at("word").get<std::string>();
        r.condition.word_source = word_source_from_string(j.at("condition").at("word_source").get<std::string>());
        r.condition.grounding = grounding_from_string(j.at("condition").at("grounding").get<std::string>());
        r.downgraded = j.at("downgraded").get<bool>();
        r.prompt_text = j.at("prompt_text").get<std::string>();
        r.snippet_ids = j.at("snippet_ids").get<std::vector<std::string>>();
        r.definition_text = j.at("definition_text").get<std::string>();
        r.word_count = j.at("word_count").get<int>();
        r.model_id = j.at("model_id").get<std::string>();
        r.generated_at = parse_rfc3339(j.at("generated_at").get<std::string>());
        r.oversize_flag = j.at("oversize_flag").get<bool>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
    } catch (const json::exception& e) {
        throw StoreError(std::string("malformed definition record: ") + e.what());
    }
}

std::string record_id_for(const std::string& word, const Condition& c) {
    return "def-" + short_id(word + "\x1f" + to_string(c.word_source) + "\x1f" + to_string(c.grounding));
}

Prompt build_rag_prompt(const std::string& word, const std::vector<retrieval::Snippet>& snippets) {
    if (snippets.empty()) throw InvalidArgument("rag prompt needs at least one snippet; use the baseline prompt");
    std::string user;
    for (const auto& s : snippets) {
        std::string text = s.text;
        std::replace(text.begin(), text.end(), '\n', ' ');
        user += "[" + s.header.timestamp + " | " + s.header.category + " | " + s.header.title + "] " + text + "\n";
    }
    user += "\nTerm: " + word;
    return {kRagSystemPrompt, user};
}

Prompt build_baseline_prompt(const std::string& word) {
    if (trim(word).empty()) throw InvalidArgument("word must be non-empty");
    return {kBaselineSystemPrompt, "Term: " + word};
}

Generated generate_definition(const std::string& word, const Condition& condition,
                              const retrieval::Retriever* retriever, ChatClient& llm,
                              const GenerationConfig& config, Timestamp now) {
    Generated out;
    auto& r = out.record;
    r.word = word;
    r.condition = condition;
    r.record_id = record_id_for(word, condition);
    r.model_id = config.model;
    r.generated_at = now;
    r.seed = config.seed;

    Prompt prompt;
    if (condition.grounding == Grounding::rag) {
        if (retriever == nullptr) throw InvalidArgument("rag generation needs a search index");
        out.snippets = retriever->search(word);
        if (out.snippets.empty()) {
            spdlog::info("no snippets for '{}', downgrading to the baseline prompt", word);
            r.downgraded = true;
            prompt = build_baseline_prompt(word);
        } else {
            prompt = build_rag_prompt(word, out.snippets);
            for (const auto& s : out.snippets) r.snippet_ids.push_back(s.article_id);
        }
    } else {
        prompt = build_baseline_prompt(word);
    }
    r.prompt_text = prompt.text();
    if (utf8_length(r.prompt_text) > config.prompt_char_budget) {
        throw PromptBudgetError("prompt for '" + word + "' is " + std::to_string(utf8_length(r.prompt_text)) +
                                " characters, budget " + std::to_string(config.prompt_char_budget));
    }

    ChatRequest request{config.model, prompt.system, prompt.user, config.temperature, config.seed};
    std::string reply;
    try {
        reply = with_retries(kEndpointRetries, [&] { return llm.complete(request); });
    } catch (const Error& e) {
        throw GenerationError("generation for '" + word + "' failed: " + e.what());
    }
    r.definition_text = trim(reply);
    r.word_count = static_cast<int>(split_whitespace(r.definition_text).size());
    r.oversize_flag = r.word_count > config.max_words;
    return out;
}

GridResult run_grid(const topics::CandidateWordSet& candidates, ChatClient& llm,
                    const retrieval::Retriever& retriever, const GenerationConfig& config, Timestamp now) {
    struct Cell {
        std::string word;
        Condition condition;
    };
    std::vector<Cell> cells;
    for (const auto& w : candidates.topic_words) {
        cells.push_back({w, {WordSource::topic, Grounding::rag}});
        cells.push_back({w, {WordSource::topic, Grounding::none}});
    }
    for (const auto& w : candidates.random_words) {
        cells.push_back({w, {WordSource::random, Grounding::rag}});
        cells.push_back({w, {WordSource::random, Grounding::none}});
    }

    std::vector<std::optional<DefinitionRecord>> slots(cells.size());
    std::vector<std::string> errors(cells.size());
    parallel_for(cells.size(), config.parallelism, [&](std::size_t i) {
        try {
            slots[i] = generate_definition(cells[i].word, cells[i].condition, &retriever, llm, config, now).record;
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });

    GridResult result;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (slots[i]) {
            result.records.push_back(std::move(*slots[i]));
        } else {
            spdlog::warn("grid cell failed: {}", errors[i]);
            result.failures.push_back({cells[i].word, cells[i].condition, errors[i]});
        }
    }
    if (!cells.empty() &&
        static_cast<double>(result.failures.size()) > config.max_failure_fraction * static_cast<double>(cells.size())) {
        throw GenerationError(std::to_string(result.failures.size()) + " of " + std::to_string(cells.size()) +
                              " grid cells failed");
    }
    return result;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<DefinitionRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    write_file_atomic(path, out);
}

std::vector<DefinitionRecord> read_jsonl(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<DefinitionRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(definition_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw StoreError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw StoreError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

json failures_to_json(const std::vector<CellFailure>& failures) {
    json out = json::array();
    for (const auto& f : failures) {
        out.push_back({{"word", f.word},
                       {"condition", {{"word_source", to_string(f.condition.word_source)}, {"grounding", to_string(f.condition.grounding)}}},
                       {"error", f.error}});
    }
    return out;
}

}  // namespace satire::generation
