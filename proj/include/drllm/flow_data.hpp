#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace drllm {

enum class Label { Attack, Benign };

inline const char* to_string(Label l) { return l == Label::Attack ? "Attack" : "Benign"; }

enum class FeatureKind { Numeric, Text };

struct FeatureSchema {
    std::vector<std::string> feature_names;
    std::vector<FeatureKind> feature_kinds;
    std::string label_column;

    std::size_t feature_count() const { return feature_names.size(); }
    // throws if `name` is absent
    std::size_t index_of(const std::string& name) const;
};

// One row of the source file after the header. `values` may contain
// NaN/Inf until preprocess() has run.
struct FlowRecord {
    std::size_t index = 0;
    std::vector<double> values;
    Label label = Label::Benign;
};

struct Provenance {
    std::string source_path;
    bool preprocessed = false;
    std::size_t rows_dropped = 0;
};

struct Dataset {
    FeatureSchema schema;
    std::vector<FlowRecord> records;
    Provenance provenance;

    std::size_t count(Label l) const;
};

// Default: exact "BENIGN" (case-insensitive) -> Benign, everything else
// -> Attack.
struct LabelMap {
    std::function<Label(const std::string&)> fn;
    Label map(const std::string& raw) const;
};

// Identifier columns excluded from the feature set when present in the
// header (CICDDoS2019 naming variants).
const std::vector<std::string>& default_ignore_columns();

Dataset load_dataset(const std::string& path, const std::string& label_column,
                     const LabelMap& label_map = {},
                     const std::vector<std::string>& ignore_columns = default_ignore_columns());

// Drops every row containing a non-finite value. Throws if nothing survives.
Dataset preprocess(const Dataset& dataset);

Dataset sample(const Dataset& dataset, std::size_t n, std::uint64_t seed, bool stratified);

Dataset select_features(const Dataset& dataset, const std::vector<std::string>& names);

// Writes the dataset back out in the input format (header + rows).
std::string serialize_dataset(const Dataset& dataset);

// Balanced synthetic flow dataset for offline runs: even indices Benign,
// odd indices Attack, attack rows shifted toward higher rates.
Dataset make_synthetic_dataset(std::size_t n, std::uint64_t seed);

}  // namespace drllm
