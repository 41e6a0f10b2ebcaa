#include "drllm/flow_data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "drllm/hash.hpp"
#include "drllm/numeric_format.hpp"

namespace drllm {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

// NaN/Inf spellings seen in CICDDoS2019 exports, plus anything that fails
// numeric parsing, all become NaN and are removed by preprocess().
double parse_field(const std::string& raw) {
    const std::string t = lower(raw);
    if (t == "nan" || t.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (t == "inf" || t == "+inf" || t == "infinity" || t == "+infinity")
        return std::numeric_limits<double>::infinity();
    if (t == "-inf" || t == "-infinity") return -std::numeric_limits<double>::infinity();
    auto v = parse_number(raw);
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::size_t FeatureSchema::index_of(const std::string& name) const {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) throw std::runtime_error("unknown feature: " + name);
    return static_cast<std::size_t>(it - feature_names.begin());
}

std::size_t Dataset::count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(),
                      [l](const FlowRecord& r) { return r.label == l; }));
}

Label LabelMap::map(const std::string& raw) const {
    if (fn) return fn(raw);
    return lower(trim(raw)) == "benign" ? Label::Benign : Label::Attack;
}

const std::vector<std::string>& default_ignore_columns() {
    static const std::vector<std::string> cols = {
        "Unnamed: 0",  "Flow ID",        "Source IP",   "Src IP",
        "Source Port", "Src Port",       "Destination IP", "Dst IP",
        "Destination Port", "Dst Port",  "Timestamp",   "SimillarHTTP",
    };
    return cols;
}

Dataset load_dataset(const std::string& path, const std::string& label_column,
                     const LabelMap& label_map,
                     const std::vector<std::string>& ignore_columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line);
    {
        std::set<std::string> seen;
        for (const auto& h : header) {
            if (!seen.insert(h).second)
                throw std::runtime_error("duplicate header column: " + h);
        }
    }

    std::set<std::string> ignored_lc;
    for (const auto& c : ignore_columns) ignored_lc.insert(lower(c));

    Dataset ds;
    ds.provenance.source_path = path;
    std::size_t label_idx = header.size();
    std::vector<std::size_t> feature_cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) {
            label_idx = i;
        } else if (!ignored_lc.count(lower(header[i]))) {
            feature_cols.push_back(i);
            ds.schema.feature_names.push_back(header[i]);
            ds.schema.feature_kinds.push_back(FeatureKind::Numeric);
        }
    }
    if (label_idx == header.size())
        throw std::runtime_error("header missing label column: " + label_column);
    if (ds.schema.feature_names.empty())
        throw std::runtime_error("no feature columns left after ignore list");
    ds.schema.label_column = label_column;

    std::size_t file_row = 1;  // header was row 1
    std::size_t record_index = 0;
    while (std::getline(in, line)) {
        ++file_row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << "row " << file_row << ": expected " << header.size()
                << " fields, got " << fields.size();
            throw std::runtime_error(msg.str());
        }
        FlowRecord rec;
        rec.index = record_index++;
        rec.values.reserve(feature_cols.size());
        for (std::size_t col : feature_cols) rec.values.push_back(parse_field(fields[col]));
        rec.label = label_map.map(fields[label_idx]);
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

Dataset preprocess(const Dataset& dataset) {
    Dataset out;
    out.schema = dataset.schema;
    out.provenance = dataset.provenance;
    for (const FlowRecord& rec : dataset.records) {
        const bool clean = std::all_of(rec.values.begin(), rec.values.end(),
                                       [](double v) { return std::isfinite(v); });
        if (clean)
            out.records.push_back(rec);
        else
            ++out.provenance.rows_dropped;
    }
    if (out.records.empty()) throw std::runtime_error("no rows survive preprocessing");
    out.provenance.preprocessed = true;
    return out;
}

namespace {

// Fisher-Yates with a portable hash stream so the draw is identical on
// every platform.
std::vector<std::size_t> pick(std::vector<std::size_t> pool, std::size_t n, SplitMix64& rng) {
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

}  // namespace

Dataset sample(const Dataset& dataset, std::size_t n, std::uint64_t seed, bool stratified) {
    if (n > dataset.records.size())
        throw std::runtime_error("sample size exceeds record count");

    SplitMix64 rng(mix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL));
    std::vector<std::size_t> chosen;
    if (!stratified) {
        std::vector<std::size_t> pool(dataset.records.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        chosen = pick(std::move(pool), n, rng);
    } else {
        std::vector<std::size_t> attack, benign;
        for (std::size_t i = 0; i < dataset.records.size(); ++i) {
            (dataset.records[i].label == Label::Attack ? attack : benign).push_back(i);
        }
        const double frac = static_cast<double>(attack.size()) / dataset.records.size();
        std::size_t n_attack = static_cast<std::size_t>(std::llround(frac * n));
        n_attack = std::min(n_attack, attack.size());
        if (n - n_attack > benign.size()) n_attack = n - benign.size();
        auto a = pick(std::move(attack), n_attack, rng);
        auto b = pick(std::move(benign), n - n_attack, rng);
        chosen = std::move(a);
        chosen.insert(chosen.end(), b.begin(), b.end());
    }
    std::sort(chosen.begin(), chosen.end());

    Dataset out;
    out.schema = dataset.schema;
    out.provenance = dataset.provenance;
    out.records.reserve(n);
    for (std::size_t i : chosen) out.records.push_back(dataset.records[i]);
    return out;
}

Dataset select_features(const Dataset& dataset, const std::vector<std::string>& names) {
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& name : names) cols.push_back(dataset.schema.index_of(name));

    Dataset out;
    out.provenance = dataset.provenance;
    out.schema.label_column = dataset.schema.label_column;
    for (std::size_t c : cols) {
        out.schema.feature_names.push_back(dataset.schema.feature_names[c]);
        out.schema.feature_kinds.push_back(dataset.schema.feature_kinds[c]);
    }
    out.records.reserve(dataset.records.size());
    for (const FlowRecord& rec : dataset.records) {
        FlowRecord r;
        r.index = rec.index;
        r.label = rec.label;
        r.values.reserve(cols.size());
        for (std::size_t c : cols) r.values.push_back(rec.values[c]);
        out.records.push_back(std::move(r));
    }
    return out;
}

std::string serialize_dataset(const Dataset& dataset) {
    std::ostringstream out;
    for (std::size_t i = 0; i < dataset.schema.feature_names.size(); ++i) {
        if (i) out << ',';
        out << dataset.schema.feature_names[i];
    }
    out << ',' << dataset.schema.label_column << '\n';
    for (const FlowRecord& rec : dataset.records) {
        for (std::size_t i = 0; i < rec.values.size(); ++i) {
            if (i) out << ',';
            out << format_number(rec.values[i]);
        }
        out << ',' << (rec.label == Label::Attack ? "Attack" : "BENIGN") << '\n';
    }
    return out.str();
}

Dataset make_synthetic_dataset(std::size_t n, std::uint64_t seed) {
    Dataset ds;
    ds.schema.feature_names = {
        "Flow Duration",     "Total Fwd Packets", "Total Backward Packets",
        "Flow Bytes/s",      "Flow Packets/s",    "Fwd Packet Length Mean",
        "SYN Flag Count",    "Average Packet Size",
    };
    ds.schema.feature_kinds.assign(ds.schema.feature_names.size(), FeatureKind::Numeric);
    ds.schema.label_column = "Label";
    ds.provenance.source_path = "<synthetic>";
    ds.provenance.preprocessed = true;

    ds.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        FlowRecord rec;
        rec.index = i;
        rec.label = (i % 2 == 1) ? Label::Attack : Label::Benign;
        SplitMix64 rng(mix64(seed) ^ mix64(i + 1));
        const double boost = rec.label == Label::Attack ? 4.0 : 1.0;
        rec.values = {
            std::floor(rng.next_unit() * 1e7),                 // duration us
            std::floor(1 + rng.next_unit() * 200 * boost),     // fwd packets
            std::floor(rng.next_unit() * 100),                 // bwd packets
            std::floor(rng.next_unit() * 5e5 * boost) / 2.0,   // bytes/s
            std::floor(rng.next_unit() * 4e3 * boost) / 4.0,   // packets/s
            std::floor(rng.next_unit() * 1500 * 100) / 100.0,  // fwd len mean
            std::floor(rng.next_unit() * 10 * boost),          // syn count
            std::floor(rng.next_unit() * 1200 * 10) / 10.0,    // avg size
        };
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

}  // namespace drllm
