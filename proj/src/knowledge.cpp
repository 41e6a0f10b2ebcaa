#include "drllm/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "drllm/numeric_format.hpp"

namespace drllm {

namespace {

// Neumaier compensated sum over the values in given order.
double compensated_sum(const std::vector<double>& xs, double shift = 0.0) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double v = x - shift;
        const double t = sum + v;
        if (std::fabs(sum) >= std::fabs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    return sum + comp;
}

}  // namespace

ColumnStats compute_column_stats(const std::vector<double>& column) {
    if (column.empty()) throw std::runtime_error("empty column");
    const std::size_t n = column.size();

    ColumnStats s;
    s.max = *std::max_element(column.begin(), column.end());
    s.min = *std::min_element(column.begin(), column.end());

    std::vector<double> sorted(column);
    std::sort(sorted.begin(), sorted.end());
    if (n % 2 == 1)
        s.median = sorted[n / 2];
    else
        s.median = (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;

    s.mean = compensated_sum(column) / static_cast<double>(n);

    // two-pass: squared deviations from the mean, compensated
    double ss = 0.0, comp = 0.0;
    for (double x : column) {
        const double d = x - s.mean;
        const double v = d * d;
        const double t = ss + v;
        if (std::fabs(ss) >= std::fabs(v))
            comp += (ss - t) + v;
        else
            comp += (v - t) + ss;
        ss = t;
    }
    s.variance = std::max(0.0, (ss + comp) / static_cast<double>(n));
    return s;
}

KnowledgeProfile compute_profile(const Dataset& dataset) {
    if (dataset.records.empty()) throw std::runtime_error("cannot profile an empty dataset");
    const std::size_t m = dataset.schema.feature_count();

    KnowledgeProfile profile;
    profile.row_count = dataset.records.size();
    profile.columns.reserve(m);
    std::vector<double> column(dataset.records.size());
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < dataset.records.size(); ++i)
            column[i] = dataset.records[i].values[j];
        profile.columns.push_back(compute_column_stats(column));
    }
    return profile;
}

std::string render_knowledge_text(const KnowledgeProfile& profile, const FeatureSchema& schema) {
    if (profile.columns.size() != schema.feature_count())
        throw std::runtime_error("profile/schema arity mismatch");
    std::ostringstream out;
    for (std::size_t j = 0; j < profile.columns.size(); ++j) {
        const ColumnStats& s = profile.columns[j];
        if (j) out << '\n';
        out << schema.feature_names[j] << " -> Max: " << format_number(s.max)
            << ", Min: " << format_number(s.min) << ", Median: " << format_number(s.median)
            << ", Mean: " << format_number(s.mean)
            << ", Variance: " << format_number(s.variance);
    }
    return out.str();
}

std::string render_profile_csv(const KnowledgeProfile& profile, const FeatureSchema& schema) {
    if (profile.columns.size() != schema.feature_count())
        throw std::runtime_error("profile/schema arity mismatch");
    std::ostringstream out;
    out << "feature,max,min,median,mean,variance\n";
    for (std::size_t j = 0; j < profile.columns.size(); ++j) {
        const ColumnStats& s = profile.columns[j];
        out << schema.feature_names[j] << ',' << format_number(s.max) << ','
            << format_number(s.min) << ',' << format_number(s.median) << ','
            << format_number(s.mean) << ',' << format_number(s.variance) << '\n';
    }
    return out.str();
}

}  // namespace drllm
