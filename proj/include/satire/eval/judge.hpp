#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "satire/clients.hpp"
#include "satire/eval/annotations.hpp"
#include "satire/generation.hpp"

namespace satire::eval {

extern const char* const kJudgeSystemPrompt;

struct JudgeScores {
    int funny = 0;
    int political = 0;
};

/// Takes the first balanced {...} in the reply that parses as a JSON object,
/// string-aware, and requires exactly the keys "funny" and "political" holding
/// integers in 1..5. Anything else is InvalidJudgeOutput.
JudgeScores parse_judge_reply(std::string_view reply);

/// The user turn sent with the judge system prompt.
std::string judge_user_message(const std::string& word, const std::string& definition_text);

struct JudgeOptions {
    int max_retries = 3;
    double temperature = 0.0;
    std::uint64_t seed = 0;
};

/// One record with rater_id = model, rater_group = "llm:<model>". Transport
/// errors and unparseable replies both consume an attempt; after
/// 1 + max_retries attempts InvalidJudgeOutput is thrown.
AnnotationRecord judge(const generation::DefinitionRecord& definition, const std::string& model,
                       ChatClient& client, const JudgeOptions& options = {});

struct JudgeMissing {
    std::string record_id;
    std::string model;
    std::string error;
};

struct JudgeRun {
    std::vector<AnnotationRecord> annotations;  // model order, then definition order
    std::vector<JudgeMissing> missing;          // never imputed
};

JudgeRun judge_all(const std::vector<generation::DefinitionRecord>& definitions,
                   const std::vector<std::string>& models, ChatClient& client,
                   const JudgeOptions& options = {}, std::size_t parallelism = 4);

}  // namespace satire::eval
