#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "drllm/backend.hpp"
#include "drllm/cache.hpp"
#include "drllm/evaluation.hpp"
#include "drllm/flow_data.hpp"
#include "drllm/knowledge.hpp"
#include "drllm/prompts.hpp"
#include "drllm/reasoning.hpp"

namespace drllm {

struct RunConfig {
    std::string dataset_path;  // empty -> synthetic records
    std::string label_column = "Label";
    std::vector<std::string> features;  // empty -> all schema features
    std::size_t sample_n = 1000;
    std::uint64_t seed = 7;
    bool stratified = true;
    std::vector<TemplateId> templates = all_templates();
    std::vector<BackendConfig> backends;  // empty -> one default mock
    unsigned concurrency_limit = 1;
    std::string cache_path = "drllm_cache.bin";
    std::string output_dir = "out";
    AnomalyHandling anomaly_handling = AnomalyHandling::Exclude;
    double eps_sum = kDefaultEpsSum;
    double error_ceiling = 0.20;  // abort when errored fraction exceeds this
    bool profile_before_sampling = false;
    Stage1Carry stage1_carry = Stage1Carry::AssistantTurn;
};

// key=value file with [backend NAME] sections; flags and env override.
RunConfig load_run_config(const std::string& path);
// DRLLM_CACHE overrides cache_path; DRLLM_API_KEY_<NAME> is read by the
// http backend at construction.
void apply_env_overrides(RunConfig& config);

struct RecordResult {
    std::string backend;
    TemplateId template_id = TemplateId::P0;
    std::size_t record_index = 0;
    Label truth = Label::Benign;
    ReasoningTrace trace;
    InferenceOutcome outcome;
    std::string error;  // non-empty when the pipeline failed for this record

    bool ok() const { return error.empty(); }
};

struct RunArtifacts {
    std::vector<RecordResult> results;  // sorted by (backend, template, record_index)
    AblationReport report;
    std::vector<MockSidecarEntry> sidecar;  // from instrumented mock backends
    std::uint64_t backend_calls = 0;        // mock only; 0 for http runs
    std::uint64_t max_in_flight = 0;
    std::size_t records_evaluated = 0;
};

// Wraps any backend with fingerprint-keyed response caching; identical
// requests never reach the inner backend twice.
class CachingBackend : public Backend {
public:
    CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache,
                   BackendConfig config)
        : inner_(std::move(inner)), cache_(std::move(cache)), config_(std::move(config)) {}
    BackendResponse complete(const std::vector<ChatMessage>& messages) override;

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    BackendConfig config_;
};

// Loads/synthesizes and prepares the evaluation dataset per config.
Dataset prepare_dataset(const RunConfig& config);

// Full grid execution: compose -> role-reason (cache-aware, bounded
// concurrency) -> extract, then per-cell reports.
RunArtifacts run_experiment(const RunConfig& config);

// run_experiment plus report/trace/outcome files under output_dir.
RunArtifacts run_ablation(const RunConfig& config);

AblationReport report_from_results(const std::vector<RecordResult>& results,
                                   AnomalyHandling handling = AnomalyHandling::Exclude);

void write_artifacts(const RunConfig& config, const RunArtifacts& artifacts);

// Line-oriented trace log (escaped newlines/tabs); authoritative for
// re-reporting without re-querying.
std::string render_trace_log(const std::vector<RecordResult>& results);
std::vector<RecordResult> parse_trace_log(const std::string& text, double eps_sum = kDefaultEpsSum);

std::string render_outcomes_csv(const std::vector<RecordResult>& results);

}  // namespace drllm
