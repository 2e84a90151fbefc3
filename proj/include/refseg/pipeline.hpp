// End-to-end orchestration: per sample, build prompts, obtain and parse the
// generated descriptions, filter negatives, render both strategy images per
// proposal, encode, score, and select. run_split adds batching, a worker
// pool, incremental result persistence, and exact resume keyed on the
// config digest.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refseg/backends.hpp"
#include "refseg/dataset.hpp"
#include "refseg/evaluation.hpp"
#include "refseg/prompts.hpp"
#include "refseg/scoring.hpp"

namespace refseg {

struct PipelineConfig {
    FusionWeights weights;
    RenderConfig render;
    double tau = 0.85;
    bool normalize_first = true;
    int worker_limit = 1;
    std::string dataset_tag = "refcoco"; // refcoco | refcoco_plus | refcocog | custom
    std::string cache_dir;               // empty disables the response cache
    bool lenient = false;
    std::map<BackendKind, BackendId> backend_ids;

    void validate() const;
};

// Per-dataset default alpha; beta defaults to 1.0 everywhere.
double default_alpha(const std::string& dataset_tag);

nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);

// Digest over every field that can change scores or selections. Worker
// count, leniency, and cache location are excluded: they cannot alter
// results, only how fast or strictly they are produced.
std::string config_digest(const PipelineConfig& cfg);

struct StageTimings {
    double describe_ms = 0.0;
    double encode_text_ms = 0.0;
    double filter_ms = 0.0;
    double render_ms = 0.0;
    double encode_image_ms = 0.0;
    double score_ms = 0.0;
};

struct SampleResult {
    std::string sample_id;
    int selected_index = 0;
    RleCounts selected_proposal;
    std::vector<ScoreBreakdown> breakdowns;
    DescriptionBundle bundle;
    std::vector<std::string> negative_phrases;
    StageTimings timing;
};

SampleResult run_sample(const RefSample& sample, const ProposalSet& proposals,
                        const PipelineConfig& cfg, BackendSet& backends);

nlohmann::json sample_result_to_json(const SampleResult& result, const FusionWeights& w,
                                     const std::string& config_digest,
                                     const std::vector<Overlap>& proposal_overlaps);

struct RunOutput {
    Metrics metrics;
    std::vector<SampleScoreTable> tables; // manifest order
    std::size_t sample_count = 0;
    std::size_t resumed = 0; // samples restored from existing result files
    std::size_t skipped = 0; // lenient mode only
};

// Runs every sample of the manifest, persisting results incrementally under
// out_dir/samples/. Existing result files with a matching config digest are
// reused without touching any backend; a digest mismatch is refused.
RunOutput run_split(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& proposals_dir, const PipelineConfig& cfg,
                    const std::filesystem::path& out_dir, BackendSet& backends);

} // namespace refseg
