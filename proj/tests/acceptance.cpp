// Acceptance suite: one pass/fail line per criterion, exit nonzero on any
// failure. Fully offline; the optional live smoke test only runs when an
// API key is present in the environment.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "drllm/hash.hpp"
#include "drllm/orchestrator.hpp"

using namespace drllm;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

void note(const std::string& msg) { g_notes.push_back(msg); }

void report(int id, const std::string& name, bool pass) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, name.c_str());
    for (const std::string& msg : g_notes) std::printf("         %s\n", msg.c_str());
    g_notes.clear();
    if (!pass) ++g_failures;
}

bool require(bool cond, const std::string& msg) {
    if (!cond) note("check failed: " + msg);
    return cond;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---- criterion 1: statistics oracle ------------------------------------

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

bool rel_close(double a, double b, double rel) {
    return std::fabs(a - b) <= rel * std::max({std::fabs(a), std::fabs(b), 1.0});
}

bool criterion_statistics_oracle() {
    const auto start = Clock::now();
    bool ok = true;
    SplitMix64 rng(2026);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.next_below(500);
        std::vector<double> column(n);
        for (double& v : column) v = (rng.next_unit() * 2 - 1) * 1e6;
        const ColumnStats got = compute_column_stats(column);
        const ColumnStats want = reference_stats(column);
        ok &= require(got.max == want.max && got.min == want.min, "min/max");
        ok &= require(rel_close(got.median, want.median, 1e-9), "median vs oracle");
        ok &= require(rel_close(got.mean, want.mean, 1e-9), "mean vs oracle");
        ok &= require(rel_close(got.variance, want.variance, 1e-9), "variance vs oracle");
        if (!ok) break;
    }
    // shift/scale properties on a fixed column
    std::vector<double> column(300);
    for (double& v : column) v = (rng.next_unit() * 2 - 1) * 1e5;
    const ColumnStats base = compute_column_stats(column);
    std::vector<double> shifted(column), scaled(column);
    const double k = 977.25, s = 5.5;
    for (double& v : shifted) v += k;
    for (double& v : scaled) v *= s;
    const ColumnStats sh = compute_column_stats(shifted);
    const ColumnStats sc = compute_column_stats(scaled);
    ok &= require(rel_close(sh.mean, base.mean + k, 1e-9) &&
                      rel_close(sh.median, base.median + k, 1e-9) &&
                      rel_close(sh.max, base.max + k, 1e-9) &&
                      rel_close(sh.min, base.min + k, 1e-9) &&
                      rel_close(sh.variance, base.variance, 1e-9),
                  "shift property");
    ok &= require(rel_close(sc.mean, base.mean * s, 1e-9) &&
                      rel_close(sc.variance, base.variance * s * s, 1e-9),
                  "scale property");
    const double elapsed = seconds_since(start);
    ok &= require(elapsed < 10.0, "runtime < 10 s");
    note("runtime " + std::to_string(elapsed) + " s");
    return ok;
}

// ---- criterion 2: metrics oracle ---------------------------------------

double auc_brute_force(const std::vector<double>& scores, const std::vector<Label>& labels) {
    double wins = 0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != Label::Attack) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != Label::Benign) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

bool criterion_metrics_oracle() {
    const auto start = Clock::now();
    bool ok = true;
    SplitMix64 rng(515);
    for (int i = 0; i < 1000 && ok; ++i) {
        const ConfusionCounts c{rng.next_below(100), rng.next_below(100), rng.next_below(100),
                                rng.next_below(100)};
        const auto [f1, recall] = f1_recall(c);
        const double r = (c.tp + c.fn) ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
        const double p = (c.tp + c.fp) ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
        const double f = (p + r) ? 2 * p * r / (p + r) : 0.0;
        ok &= require(recall == r && f1 == f, "f1/recall exact vs direct formula");
    }
    for (int trial = 0; trial < 500 && ok; ++trial) {
        const std::size_t n = 2 + rng.next_below(199);
        std::vector<double> scores(n);
        std::vector<Label> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.next_below(20)) / 20.0;  // ties on purpose
            labels[i] = rng.next_below(2) ? Label::Attack : Label::Benign;
        }
        labels[0] = Label::Attack;
        labels[n - 1] = Label::Benign;
        const auto auc = compute_auc(scores, labels);
        ok &= require(auc.has_value(), "AUC defined");
        if (auc)
            ok &= require(std::fabs(*auc - auc_brute_force(scores, labels)) <= 1e-12,
                          "rank AUC vs brute force");
    }
    const double elapsed = seconds_since(start);
    ok &= require(elapsed < 30.0, "runtime < 30 s");
    note("runtime " + std::to_string(elapsed) + " s");
    return ok;
}

// ---- criterion 3: prompt composition -----------------------------------

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

bool criterion_prompt_composition() {
    bool ok = true;
    const std::pair<PromptBlockKind, std::string> sentinels[] = {
        {PromptBlockKind::KP, "[[KP]]"},
        {PromptBlockKind::BP, "[[BP]]"},
        {PromptBlockKind::CoD, "[[CoD]]"},
        {PromptBlockKind::CoT, "[[CoT]]"},
    };
    std::map<TemplateId, std::size_t> block_counts;
    for (TemplateId id : all_templates()) {
        const bool kp = template_includes(id, PromptBlockKind::KP);
        const ComposedPrompt p =
            compose(id, kp ? std::optional<std::string>("STATS") : std::nullopt, "A: 1.5");
        std::string text;
        for (const auto& m : p.stage1) text += m.content + "\n";
        for (const auto& m : p.stage2) text += m.content + "\n";
        std::size_t last_pos = 0, blocks = 0;
        for (const auto& [kind, sentinel] : sentinels) {
            const std::size_t n = count_occurrences(text, sentinel);
            if (template_includes(id, kind)) {
                ok &= require(n == 1, to_string(id) + ": " + sentinel + " exactly once");
                const std::size_t pos = text.find(sentinel);
                ok &= require(pos >= last_pos, to_string(id) + ": canonical block order");
                last_pos = pos;
                ++blocks;
            } else {
                ok &= require(n == 0, to_string(id) + ": " + sentinel + " absent");
            }
        }
        block_counts[id] = blocks;
        ok &= require(text.find("Data: A: 1.5") != std::string::npos, "TP data line present");
    }
    // nesting chains (TP is common to all, so sentinel-set inclusion suffices)
    ok &= require(block_counts[TemplateId::P0] < block_counts[TemplateId::P1] &&
                      block_counts[TemplateId::P1] < block_counts[TemplateId::P2] &&
                      block_counts[TemplateId::P2] < block_counts[TemplateId::P3],
                  "P0 < P1 < P2 < P3 chain");
    ok &= require(block_counts[TemplateId::P1] < block_counts[TemplateId::P3prime] &&
                      block_counts[TemplateId::P3prime] < block_counts[TemplateId::P3],
                  "P0 < P1 < P3' < P3 chain");

    // TP fidelity: the Data line round-trips record values exactly
    Dataset ds = make_synthetic_dataset(64, 11);
    for (const FlowRecord& rec : ds.records) {
        const std::string token = render_token_text(rec, ds.schema);
        const auto pairs = parse_token_text(token);
        ok &= require(pairs.size() == rec.values.size(), "TP pair count");
        for (std::size_t j = 0; j < pairs.size(); ++j) {
            ok &= require(pairs[j].first == ds.schema.feature_names[j], "TP feature name");
            ok &= require(pairs[j].second == rec.values[j], "TP exact value round-trip");
        }
    }
    return ok;
}

// ---- criterion 4: parser totality and round-trip -----------------------

bool criterion_parser() {
    bool ok = true;
    SplitMix64 rng(40404);
    for (int i = 0; i < 10000 && ok; ++i) {
        std::string s(rng.next_below(150), '\0');
        for (char& c : s) c = static_cast<char>(rng.next_below(256));
        const InferenceOutcome o = extract_outcome(s);
        ok &= require(o.kind == InferenceOutcome::Kind::Valid ||
                          o.kind == InferenceOutcome::Kind::AnomalyL1 ||
                          o.kind == InferenceOutcome::Kind::AnomalyL2 ||
                          o.kind == InferenceOutcome::Kind::ParseFailure,
                      "fuzz input maps to a variant");
    }
    for (int pct = 0; pct <= 100 && ok; ++pct) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "Attack: %.2f, Benign: %.2f", pct / 100.0,
                      (100 - pct) / 100.0);
        const InferenceOutcome o = extract_outcome(buf);
        ok &= require(o.kind == InferenceOutcome::Kind::Valid, "printed pair is Valid");
        ok &= require(o.p_attack == pct / 100.0 && o.p_benign == (100 - pct) / 100.0,
                      "printed pair round-trips exactly");
    }
    // boundary at the tolerance: deviation exactly eps stays Valid, one
    // ulp tighter tips into L1
    const std::string boundary = "Attack: 0.5, Benign: 0.515625";
    const double dev = 0.015625;  // exact binary fraction
    ok &= require(extract_outcome(boundary, dev).kind == InferenceOutcome::Kind::Valid,
                  "|sum-1| == eps is Valid");
    ok &= require(extract_outcome(boundary, std::nextafter(dev, 0.0)).kind ==
                      InferenceOutcome::Kind::AnomalyL1,
                  "|sum-1| just past eps is L1");
    return ok;
}

// ---- criteria 5 and 6: end-to-end mock ablation + replay ----------------

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("drllm_accept_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

RunConfig ablation_config(const TempDir& dir) {
    RunConfig cfg;
    cfg.sample_n = 1000;
    cfg.seed = 7;
    cfg.cache_path = (dir.path / "cache.bin").string();
    cfg.output_dir = (dir.path / "out").string();
    BackendConfig b;
    b.kind = BackendKind::Mock;
    b.mock_params = {0.85, 0.05, 0.02, 7};
    cfg.backends.push_back(b);
    return cfg;
}

bool criterion_mock_ablation(const TempDir& dir) {
    const auto start = Clock::now();
    bool ok = true;
    const RunConfig cfg = ablation_config(dir);
    const RunArtifacts artifacts = run_ablation(cfg);
    ok &= require(artifacts.report.cells.size() == 5, "five template cells");

    for (const CellReport& cell : artifacts.report.cells) {
        ok &= require(std::fabs(cell.l1_rate - 5.0) <= 1.0,
                      to_string(cell.template_id) + ": L1 rate " +
                          std::to_string(cell.l1_rate) + " within 1pp of 5");
        ok &= require(std::fabs(cell.l2_rate - 2.0) <= 1.0,
                      to_string(cell.template_id) + ": L2 rate " +
                          std::to_string(cell.l2_rate) + " within 1pp of 2");
        ok &= require(cell.n_valid + cell.n_l1 + cell.n_l2 == cell.n_total,
                      "outcome counts account for every record");
    }

    // harness metrics must equal metrics recomputed from the mock's own
    // sidecar ground-truth log, exactly
    std::map<std::string, MockSidecarEntry> by_token;
    for (const MockSidecarEntry& e : artifacts.sidecar) by_token[e.token_text] = e;
    ok &= require(by_token.size() == 1000, "sidecar covers every record once");

    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::vector<double> scores;
    std::vector<Label> labels;
    for (const auto& [token, e] : by_token) {
        if (e.kind != "valid") continue;
        const Label predicted = e.p_attack >= 0.5 ? Label::Attack : Label::Benign;
        if (e.true_label == Label::Attack)
            (predicted == Label::Attack ? tp : fn)++;
        else
            (predicted == Label::Attack ? fp : tn)++;
        scores.push_back(e.p_attack);
        labels.push_back(e.true_label);
    }
    const auto [side_f1, side_recall] = f1_recall({tp, fp, tn, fn});
    const auto side_auc = compute_auc(scores, labels);
    for (const CellReport& cell : artifacts.report.cells) {
        ok &= require(cell.f1 == side_f1,
                      to_string(cell.template_id) + ": F1 equals sidecar-derived value");
        ok &= require(cell.recall == side_recall,
                      to_string(cell.template_id) + ": Recall equals sidecar-derived value");
        ok &= require(cell.auc && side_auc && *cell.auc == *side_auc,
                      to_string(cell.template_id) + ": AUC equals sidecar-derived value");
    }

    const double elapsed = seconds_since(start);
    ok &= require(elapsed < 120.0, "runtime < 2 min");
    note("runtime " + std::to_string(elapsed) + " s, " +
         std::to_string(artifacts.backend_calls) + " live mock calls");
    return ok;
}

bool criterion_replay_determinism(const TempDir& dir) {
    bool ok = true;
    RunConfig cfg = ablation_config(dir);  // cache warmed by criterion 5
    std::vector<std::string> outcomes, reports;
    for (unsigned limit : {1u, 1u, 8u, 8u}) {
        cfg.concurrency_limit = limit;
        const RunArtifacts artifacts = run_ablation(cfg);
        ok &= require(artifacts.backend_calls == 0, "warm cache issues no backend calls");
        outcomes.push_back(slurp((dir.path / "out" / "outcomes.csv").string()));
        reports.push_back(slurp((dir.path / "out" / "report.md").string()));
    }
    for (std::size_t i = 1; i < outcomes.size(); ++i) {
        ok &= require(outcomes[i] == outcomes[0], "outcomes.csv byte-identical across runs");
        ok &= require(reports[i] == reports[0], "report.md byte-identical across runs");
    }
    return ok;
}

// ---- criterion 7: report fidelity --------------------------------------

bool criterion_report_fidelity() {
    bool ok = true;
    const double row[5] = {0.7672, 0.7904, 0.8114, 0.7759, 0.8499};
    const TemplateId ids[5] = {TemplateId::P0, TemplateId::P1, TemplateId::P2,
                               TemplateId::P3prime, TemplateId::P3};
    AblationReport report;
    for (int i = 0; i < 5; ++i) {
        CellReport cell;
        cell.backend = "deepseek-chat-v2";
        cell.template_id = ids[i];
        cell.f1 = row[i];
        cell.recall = row[i];
        cell.auc = row[i];
        cell.n_total = cell.n_valid = 1;
        report.cells.push_back(cell);
    }
    const std::string md = render_markdown(report);
    const char* expected[] = {"0.7672 (-9.73%)", "0.7904 (-7.00%)", "0.8114 (-4.53%)",
                              "0.7759 (-8.71%)"};
    for (const char* e : expected)
        ok &= require(md.find(e) != std::string::npos, std::string("annotation ") + e);
    ok &= require(md.find("0.8499 (") == std::string::npos, "P3 column carries no delta");
    return ok;
}

// ---- criterion 8: call-count accounting --------------------------------

bool criterion_call_counts() {
    bool ok = true;
    BackendConfig cfg;
    cfg.kind = BackendKind::Mock;
    cfg.mock_params = {1.0, 0, 0, 3};
    MockBackend mock(cfg);

    Dataset ds = make_synthetic_dataset(50, 3);
    const KnowledgeProfile profile = compute_profile(ds);
    const std::string knowledge = render_knowledge_text(profile, ds.schema);

    std::uint64_t before = mock.call_count();
    for (const FlowRecord& rec : ds.records) {
        const std::string token = render_token_text(rec, ds.schema);
        mock.register_truth(token, rec.label);
        run_role_reasoning(mock, compose(TemplateId::P0, std::nullopt, token, rec.index));
        const std::uint64_t after = mock.call_count();
        ok &= require(after - before == 1, "P0 issues exactly 1 call per record");
        before = after;
    }
    for (const FlowRecord& rec : ds.records) {
        const std::string token = render_token_text(rec, ds.schema);
        run_role_reasoning(mock, compose(TemplateId::P3, knowledge, token, rec.index));
        const std::uint64_t after = mock.call_count();
        ok &= require(after - before == 2, "P3 issues exactly 2 calls per record");
        before = after;
    }
    return ok;
}

// ---- criterion 9: optional live smoke test -----------------------------

bool criterion_live_smoke(bool& skipped) {
    const char* url = std::getenv("DRLLM_LIVE_URL");
    const char* model = std::getenv("DRLLM_LIVE_MODEL");
    if (!url || !model || !std::getenv("DRLLM_API_KEY_LIVE")) {
        skipped = true;
        return true;
    }
    skipped = false;
    RunConfig cfg;
    cfg.sample_n = 20;
    cfg.seed = 7;
    cfg.templates = {TemplateId::P3};
    cfg.cache_path = "live_cache.bin";
    cfg.output_dir = "live_out";
    BackendConfig b;
    b.kind = BackendKind::Http;
    b.name = "live";
    b.endpoint_url = url;
    b.model_name = model;
    b.auth_env = "DRLLM_API_KEY_LIVE";
    cfg.backends.push_back(b);
    const RunArtifacts artifacts = run_experiment(cfg);
    std::uint64_t failures = 0;
    for (const RecordResult& r : artifacts.results)
        if (r.ok() && r.outcome.kind == InferenceOutcome::Kind::ParseFailure) ++failures;
    return failures * 2 <= artifacts.results.size();  // ParseFailure rate <= 50%
}

}  // namespace

int main() {
    report(1, "statistics oracle (1000 random columns, shift/scale)",
           criterion_statistics_oracle());
    report(2, "metrics oracle (F1/Recall exact, AUC vs brute force)", criterion_metrics_oracle());
    report(3, "prompt composition sentinels, nesting and TP fidelity",
           criterion_prompt_composition());
    report(4, "parser totality, grammar round-trip, eps_sum boundary", criterion_parser());
    {
        TempDir dir;
        report(5, "end-to-end mock ablation (1000 records, 5 templates)",
               criterion_mock_ablation(dir));
        report(6, "replay determinism with warm cache (concurrency 1 and 8)",
               criterion_replay_determinism(dir));
    }
    report(7, "report fidelity (published Deepseek F1 deltas)", criterion_report_fidelity());
    report(8, "call-count accounting (P0 = 1, P3 = 2 per record)", criterion_call_counts());
    {
        bool skipped = false;
        const bool pass = criterion_live_smoke(skipped);
        if (skipped)
            std::printf("[SKIP] criterion 9: live smoke test (set DRLLM_LIVE_URL, "
                        "DRLLM_LIVE_MODEL, DRLLM_API_KEY_LIVE to enable)\n");
        else
            report(9, "live smoke test (20 records under P3)", pass);
    }
    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
