#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "satire/clients.hpp"
#include "satire/config.hpp"

namespace satire {

/// Artifact layout under the work directory.
struct WorkPaths {
    explicit WorkPaths(const std::filesystem::path& work_dir);

    std::filesystem::path articles;     // one JSON document per article
    std::filesystem::path keep;         // sentiment gate result
    std::filesystem::path topics;       // topic model + candidate words
    std::filesystem::path index;        // retrieval index
    std::filesystem::path definitions;  // JSONL, one DefinitionRecord per line
    std::filesystem::path failures;     // grid cells that failed
    std::filesystem::path embeddings;   // embedding cache shared by all stages
    std::filesystem::path manifest;     // per-stage input/output hashes
};

inline const std::vector<std::string> kStages = {"ingest", "gate", "topics", "index", "generate"};

/// Endpoint clients used by the stages. Tests pass their own; otherwise
/// HTTP clients are built from the config.
struct PipelineClients {
    std::shared_ptr<ClassifierClient> classifier;
    std::shared_ptr<EmbedderClient> topic_embedder;
    std::shared_ptr<EmbedderClient> retrieval_embedder;
    std::shared_ptr<ChatClient> generator;

    static PipelineClients from_config(const PipelineConfig& config);
};

struct StageReport {
    std::string stage;
    bool cache_hit = false;
    std::filesystem::path output;
    std::string summary;
};

struct PipelineOptions {
    /// Run just this stage (its inputs must already exist). All stages when empty.
    std::optional<std::string> only;
    /// Ignore the manifest and recompute.
    bool force = false;
};

/// ingest -> gate -> topics -> index -> generate. A stage is skipped when the
/// manifest shows the same input hash and its output still has the recorded
/// hash. An output whose bytes no longer match the manifest halts the run.
/// Every failure surfaces as StageError carrying the stage name.
std::vector<StageReport> run_pipeline(const PipelineConfig& config, const PipelineClients& clients,
                                      const PipelineOptions& options = {});

}  // namespace satire
