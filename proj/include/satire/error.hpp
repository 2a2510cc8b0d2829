#pragma once

#include <stdexcept>
#include <string>

namespace satire {

/// Base for every error raised by the library. `kind()` is a stable
/// machine-readable code used in CLI messages and API error bodies.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SATIRE_DEFINE_ERROR(Name, code)                                        \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(code, message) {}    \
    }

SATIRE_DEFINE_ERROR(ParseError, "parse_error");
SATIRE_DEFINE_ERROR(IngestError, "ingest_error");
SATIRE_DEFINE_ERROR(StoreError, "store_error");
SATIRE_DEFINE_ERROR(HttpError, "upstream_error");
SATIRE_DEFINE_ERROR(ScoreError, "score_error");
SATIRE_DEFINE_ERROR(EmbedError, "embed_error");
SATIRE_DEFINE_ERROR(CandidateError, "candidate_error");
SATIRE_DEFINE_ERROR(IndexError, "index_error");
SATIRE_DEFINE_ERROR(SimilarityError, "undefined_similarity");
SATIRE_DEFINE_ERROR(SnippetError, "snippet_error");
SATIRE_DEFINE_ERROR(GenerationError, "generation_error");
SATIRE_DEFINE_ERROR(PromptBudgetError, "prompt_budget_exceeded");
SATIRE_DEFINE_ERROR(InvalidJudgeOutput, "invalid_judge_output");
SATIRE_DEFINE_ERROR(AgreementUndefined, "agreement_undefined");
SATIRE_DEFINE_ERROR(TestError, "test_error");
SATIRE_DEFINE_ERROR(CorrelationUndefined, "correlation_undefined");
SATIRE_DEFINE_ERROR(SummaryError, "summary_error");
SATIRE_DEFINE_ERROR(ReportError, "report_error");
SATIRE_DEFINE_ERROR(ConfigError, "config_error");
SATIRE_DEFINE_ERROR(InvalidArgument, "invalid_argument");

#undef SATIRE_DEFINE_ERROR

/// A pipeline stage failed; carries the stage name for the halt message.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error("stage_failed", "stage '" + stage + "' failed: " + cause),
          stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace satire
