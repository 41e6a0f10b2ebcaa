#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "drllm/hash.hpp"
#include "drllm/knowledge.hpp"

using namespace drllm;

namespace {

// Independent sort-and-sum reference in long double; deliberately naive.
ColumnStats reference_stats(std::vector<double> column) {
    ColumnStats s;
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    s.min = column.front();
    s.max = column.back();
    s.median = n % 2 ? column[n / 2] : (column[n / 2 - 1] + column[n / 2]) / 2.0;
    long double sum = 0;
    for (double v : column) sum += v;
    s.mean = static_cast<double>(sum / n);
    long double ss = 0;
    for (double v : column) ss += (static_cast<long double>(v) - s.mean) * (v - s.mean);
    s.variance = static_cast<double>(ss / n);
    return s;
}

bool close(double a, double b, double rel = 1e-9) {
    return std::fabs(a - b) <= rel * std::max({std::fabs(a), std::fabs(b), 1.0});
}

Dataset one_column(const std::vector<double>& values) {
    Dataset ds;
    ds.schema.feature_names = {"X"};
    ds.schema.feature_kinds = {FeatureKind::Numeric};
    ds.schema.label_column = "Label";
    for (std::size_t i = 0; i < values.size(); ++i)
        ds.records.push_back({i, {values[i]}, Label::Benign});
    return ds;
}

}  // namespace

TEST_CASE("four-element column") {
    ColumnStats s = compute_column_stats({1, 2, 3, 4});
    CHECK(s.max == 4);
    CHECK(s.min == 1);
    CHECK(s.median == 2.5);
    CHECK(s.mean == 2.5);
    CHECK(s.variance == 1.25);
}

TEST_CASE("constant and singleton columns") {
    ColumnStats c = compute_column_stats({5, 5, 5});
    CHECK(c.max == 5);
    CHECK(c.min == 5);
    CHECK(c.median == 5);
    CHECK(c.mean == 5);
    CHECK(c.variance == 0);

    ColumnStats one = compute_column_stats({3.25});
    CHECK(one.max == 3.25);
    CHECK(one.min == 3.25);
    CHECK(one.median == 3.25);
    CHECK(one.mean == 3.25);
    CHECK(one.variance == 0);
}

TEST_CASE("empty dataset is an error") {
    Dataset ds;
    ds.schema.feature_names = {"X"};
    CHECK_THROWS(compute_profile(ds));
}

TEST_CASE("oracle equivalence on 1000 random columns") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.next_below(500);
        std::vector<double> column(n);
        for (double& v : column) v = (rng.next_unit() * 2 - 1) * 1e6;
        ColumnStats got = compute_column_stats(column);
        ColumnStats want = reference_stats(column);
        CHECK(got.max == want.max);
        CHECK(got.min == want.min);
        CHECK(close(got.median, want.median));
        CHECK(close(got.mean, want.mean));
        CHECK(close(got.variance, want.variance));
    }
}

TEST_CASE("permutation invariance is exact") {
    SplitMix64 rng(9);
    std::vector<double> column(257);
    for (double& v : column) v = (rng.next_unit() * 2 - 1) * 1e5;
    Dataset ds = one_column(column);
    KnowledgeProfile a = compute_profile(ds);
    std::reverse(column.begin(), column.end());
    // reversal changes summation order; compensated sums keep the result bit-equal
    KnowledgeProfile b = compute_profile(one_column(column));
    CHECK(a.columns[0].max == b.columns[0].max);
    CHECK(a.columns[0].min == b.columns[0].min);
    CHECK(a.columns[0].median == b.columns[0].median);
    CHECK(a.columns[0].mean == doctest::Approx(b.columns[0].mean).epsilon(1e-15));
    CHECK(a.columns[0].variance == doctest::Approx(b.columns[0].variance).epsilon(1e-15));
}

TEST_CASE("shift and scale properties") {
    SplitMix64 rng(77);
    std::vector<double> column(128);
    for (double& v : column) v = (rng.next_unit() * 2 - 1) * 1e4;
    ColumnStats base = compute_column_stats(column);

    const double k = 123.5, s = -3.25;
    std::vector<double> shifted(column), scaled(column);
    for (double& v : shifted) v += k;
    for (double& v : scaled) v *= s;

    ColumnStats sh = compute_column_stats(shifted);
    CHECK(close(sh.max, base.max + k));
    CHECK(close(sh.min, base.min + k));
    CHECK(close(sh.median, base.median + k));
    CHECK(close(sh.mean, base.mean + k));
    CHECK(close(sh.variance, base.variance));

    ColumnStats sc = compute_column_stats(scaled);
    CHECK(close(sc.max, base.min * s));  // negative scale flips min/max
    CHECK(close(sc.min, base.max * s));
    CHECK(close(sc.median, base.median * s));
    CHECK(close(sc.mean, base.mean * s));
    CHECK(close(sc.variance, base.variance * s * s));
}

TEST_CASE("knowledge text golden line") {
    KnowledgeProfile p;
    p.columns = {{4, 1, 2.5, 2.5, 1.25}};
    p.row_count = 4;
    FeatureSchema schema;
    schema.feature_names = {"Flow Duration"};
    schema.feature_kinds = {FeatureKind::Numeric};
    CHECK(render_knowledge_text(p, schema) ==
          "Flow Duration -> Max: 4, Min: 1, Median: 2.5, Mean: 2.5, Variance: 1.25");
}

TEST_CASE("knowledge text: empty and two-feature cases") {
    KnowledgeProfile empty;
    FeatureSchema none;
    CHECK(render_knowledge_text(empty, none).empty());

    KnowledgeProfile two;
    two.columns = {{1, 0, 0.5, 0.5, 0.25}, {9, 3, 6, 6, 6}};
    FeatureSchema schema;
    schema.feature_names = {"A", "B"};
    schema.feature_kinds = {FeatureKind::Numeric, FeatureKind::Numeric};
    const std::string text = render_knowledge_text(two, schema);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    CHECK(text.rfind("A -> ", 0) == 0);
    CHECK(text.find("\nB -> ") != std::string::npos);
    CHECK(text.back() != '\n');
}

TEST_CASE("profile/schema arity mismatch is an error") {
    KnowledgeProfile p;
    p.columns = {{1, 0, 0, 0, 0}};
    FeatureSchema schema;
    schema.feature_names = {"A", "B"};
    CHECK_THROWS(render_knowledge_text(p, schema));
}
