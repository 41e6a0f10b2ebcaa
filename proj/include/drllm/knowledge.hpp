#pragma once

#include <string>
#include <vector>

#include "drllm/flow_data.hpp"

namespace drllm {

// Per-column 5-tuple of global statistics, in the feature's native units.
struct ColumnStats {
    double max = 0;
    double min = 0;
    double median = 0;
    double mean = 0;
    double variance = 0;  // population variance (divide by n)
};

struct KnowledgeProfile {
    std::vector<ColumnStats> columns;  // aligned to schema order
    std::size_t row_count = 0;
};

// Requires a preprocessed dataset (all values finite, >= 1 record).
// Mean/variance use compensated summation in row order; median is the
// mean of the two middle order statistics for even counts.
KnowledgeProfile compute_profile(const Dataset& dataset);

ColumnStats compute_column_stats(const std::vector<double>& column);

// One line per feature:
//   <FeatureName> -> Max: <a>, Min: <b>, Median: <c>, Mean: <d>, Variance: <v>
// No trailing newline.
std::string render_knowledge_text(const KnowledgeProfile& profile, const FeatureSchema& schema);

// Machine-readable companion: feature,max,min,median,mean,variance rows.
std::string render_profile_csv(const KnowledgeProfile& profile, const FeatureSchema& schema);

}  // namespace drllm
