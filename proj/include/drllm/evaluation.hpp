#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drllm/flow_data.hpp"
#include "drllm/prompts.hpp"
#include "drllm/reasoning.hpp"

namespace drllm {

// Attack is the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct CellReport {
    std::string backend;
    TemplateId template_id = TemplateId::P0;
    double f1 = 0;
    double recall = 0;
    std::optional<double> auc;  // absent when only one class is present
    double l1_rate = 0;         // percent
    double l2_rate = 0;         // percent, includes parse failures
    std::uint64_t n_valid = 0;
    std::uint64_t n_l1 = 0;
    std::uint64_t n_l2 = 0;  // l2 + parse failures
    std::uint64_t n_total = 0;
};

struct AblationReport {
    std::vector<CellReport> cells;
};

// When anomalous outcomes count toward the metrics they are scored as
// misclassifications (sensitivity mode); default excludes them.
enum class AnomalyHandling { Exclude, CountAsError };

// Only Valid outcomes enter the confusion matrix under Exclude.
ConfusionCounts compute_confusion(const std::vector<std::pair<InferenceOutcome, Label>>& outcomes,
                                  AnomalyHandling handling = AnomalyHandling::Exclude);

// (f1, recall); 0/0 divisions yield 0.
std::pair<double, double> f1_recall(const ConfusionCounts& counts);

// Mann-Whitney rank AUC with midrank ties; nullopt when a class is absent.
std::optional<double> compute_auc(const std::vector<double>& scores,
                                  const std::vector<Label>& labels);

// (l1_rate, l2_rate) in percent; parse failures fold into l2.
std::pair<double, double> anomaly_rates(const std::vector<InferenceOutcome>& outcomes);

CellReport make_cell_report(const std::string& backend, TemplateId template_id,
                            const std::vector<std::pair<InferenceOutcome, Label>>& outcomes,
                            AnomalyHandling handling = AnomalyHandling::Exclude);

// Signed percent delta of `cell` vs the same backend's P3 value.
double delta_vs_p3(double cell_value, double p3_value);

// Metrics table (rows backend x metric, columns P0..P3, non-P3 cells
// annotated with their delta) followed by the anomaly-rate table.
std::string render_markdown(const AblationReport& report);

// Long form: backend,template,metric,value,delta_vs_p3.
std::string render_csv(const AblationReport& report);

}  // namespace drllm
