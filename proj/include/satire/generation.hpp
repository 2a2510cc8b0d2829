#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satire/clients.hpp"
#include "satire/retrieval.hpp"
#include "satire/topics.hpp"

namespace satire::generation {

using json = nlohmann::json;

extern const char* const kRagSystemPrompt;
extern const char* const kBaselineSystemPrompt;

/// `user` marks an ad-hoc request made through the service.
enum class WordSource { topic, random, user };
enum class Grounding { rag, none };

std::string to_string(WordSource s);
std::string to_string(Grounding g);
WordSource word_source_from_string(const std::string& s);
Grounding grounding_from_string(const std::string& s);

struct Condition {
    WordSource word_source = WordSource::topic;
    Grounding grounding = Grounding::rag;

    bool operator==(const Condition&) const = default;
};

struct Prompt {
    std::string system;
    std::string user;

    /// System and user parts separated by one blank line; this is what the
    /// record stores as prompt_text.
    std::string text() const { return system + "\n\n" + user; }
};

/// `condition` is the experimental cell the record belongs to. When a rag
/// request finds no snippets it is answered with the baseline prompt, and
/// `downgraded` is set; snippet_ids is then empty.
struct DefinitionRecord {
    std::string record_id;
    std::string word;
    Condition condition;
    bool downgraded = false;
    std::string prompt_text;
    std::vector<std::string> snippet_ids;
    std::string definition_text;
    int word_count = 0;
    std::string model_id;
    Timestamp generated_at;
    bool oversize_flag = false;
    std::uint64_t seed = 0;

    /// Grounding actually used for the prompt.
    Grounding effective_grounding() const { return downgraded ? Grounding::none : condition.grounding; }
};

json to_json(const DefinitionRecord& r);
DefinitionRecord definition_from_json(const json& j);

/// Stable id for a (word, condition) cell.
std::string record_id_for(const std::string& word, const Condition& condition);

/// One snippet per line as "[timestamp | category | title] text" (line
/// breaks inside the text become spaces), then a blank line and
/// "Term: <word>". InvalidArgument for an empty snippet list.
Prompt build_rag_prompt(const std::string& word, const std::vector<retrieval::Snippet>& snippets);

Prompt build_baseline_prompt(const std::string& word);

struct GenerationConfig {
    std::string model = "llama3:8b-instruct";
    double temperature = 0.8;
    std::uint64_t seed = 42;
    int max_words = 50;
    std::size_t prompt_char_budget = 4000;
    std::size_t parallelism = 4;
    double max_failure_fraction = 0.10;
};

struct Generated {
    DefinitionRecord record;
    std::vector<retrieval::Snippet> snippets;  // what the prompt embedded
};

/// For rag, searches first and downgrades to the baseline prompt when
/// nothing passes the similarity floor. PromptBudgetError before any call if
/// the prompt is too long; GenerationError once the endpoint keeps failing.
Generated generate_definition(const std::string& word, const Condition& condition,
                              const retrieval::Retriever* retriever, ChatClient& llm,
                              const GenerationConfig& config, Timestamp now);

struct CellFailure {
    std::string word;
    Condition condition;
    std::string error;
};

struct GridResult {
    std::vector<DefinitionRecord> records;  // word-then-condition order
    std::vector<CellFailure> failures;
};

/// Topic words then random words; each word as rag then none. Cells run
/// concurrently up to config.parallelism. GenerationError when more than
/// max_failure_fraction of the cells fail.
GridResult run_grid(const topics::CandidateWordSet& candidates, ChatClient& llm,
                    const retrieval::Retriever& retriever, const GenerationConfig& config, Timestamp now);

void write_jsonl(const std::filesystem::path& path, const std::vector<DefinitionRecord>& records);
std::vector<DefinitionRecord> read_jsonl(const std::filesystem::path& path);

json failures_to_json(const std::vector<CellFailure>& failures);

}  // namespace satire::generation
