#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "drllm/orchestrator.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

drllm::RunConfig base_config(const std::string& config_path) {
    if (!config_path.empty()) return drllm::load_run_config(config_path);
    drllm::RunConfig cfg;
    drllm::apply_env_overrides(cfg);
    return cfg;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// shared flag block for run/ablate
struct RunFlags {
    std::string config_path;
    std::string dataset;
    std::string label_column = "Label";
    std::vector<std::string> features;
    std::vector<std::string> templates;
    std::vector<std::string> backends;
    std::size_t records = 0;
    std::uint64_t seed = 0;
    bool have_seed = false;
    unsigned concurrency = 0;
    std::string cache_path;
    std::string output_dir;
    double eps_sum = -1;
    bool count_anomalies = false;
    double mock_accuracy = 1.0;
    double mock_l1 = 0.0;
    double mock_l2 = 0.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--dataset", dataset, "CSV dataset path (omit for synthetic records)");
        cmd->add_option("--label-column", label_column, "label column name");
        cmd->add_option("--features", features, "feature names to keep")->delimiter(',');
        cmd->add_option("--template", templates, "template ids (P0,P1,P2,P3prime,P3)")
            ->delimiter(',');
        cmd->add_option("--backend", backends,
                        "backend spec: 'mock' or 'http:NAME:URL:MODEL'")
            ->delimiter(';');
        cmd->add_option("--records", records, "evaluation sample size");
        cmd->add_option("--seed", seed, "sampling / mock seed")
            ->each([this](const std::string&) { have_seed = true; });
        cmd->add_option("--concurrency", concurrency, "max in-flight record pipelines");
        cmd->add_option("--cache", cache_path, "response cache file");
        cmd->add_option("--out", output_dir, "output directory");
        cmd->add_option("--eps-sum", eps_sum, "L1 tolerance on |p_attack+p_benign-1|");
        cmd->add_flag("--count-anomalies", count_anomalies,
                      "score anomalous outputs as misclassifications");
        cmd->add_option("--mock-accuracy", mock_accuracy, "mock backend accuracy");
        cmd->add_option("--mock-l1-rate", mock_l1, "mock L1 emission rate");
        cmd->add_option("--mock-l2-rate", mock_l2, "mock L2 emission rate");
    }

    drllm::RunConfig resolve() const {
        drllm::RunConfig cfg = base_config(config_path);
        if (!dataset.empty()) cfg.dataset_path = dataset;
        if (label_column != "Label") cfg.label_column = label_column;
        if (!features.empty()) cfg.features = features;
        if (records) cfg.sample_n = records;
        if (have_seed) cfg.seed = seed;
        if (concurrency) cfg.concurrency_limit = concurrency;
        if (!cache_path.empty()) cfg.cache_path = cache_path;
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (eps_sum >= 0) cfg.eps_sum = eps_sum;
        if (count_anomalies) cfg.anomaly_handling = drllm::AnomalyHandling::CountAsError;
        if (!templates.empty()) {
            cfg.templates.clear();
            for (const std::string& t : templates) {
                auto id = drllm::parse_template_id(t);
                if (!id) throw std::runtime_error("unknown template id: " + t);
                cfg.templates.push_back(*id);
            }
        }
        if (!backends.empty()) {
            cfg.backends.clear();
            for (const std::string& spec : backends) {
                drllm::BackendConfig b;
                if (spec == "mock") {
                    b.kind = drllm::BackendKind::Mock;
                    b.mock_params.accuracy = mock_accuracy;
                    b.mock_params.l1_rate = mock_l1;
                    b.mock_params.l2_rate = mock_l2;
                    b.mock_params.seed = have_seed ? seed : cfg.seed;
                } else if (spec.rfind("http:", 0) == 0) {
                    // http:NAME:URL:MODEL, URL may itself contain ':'
                    const std::size_t p1 = spec.find(':', 5);
                    const std::size_t p2 = spec.rfind(':');
                    if (p1 == std::string::npos || p2 <= p1)
                        throw std::runtime_error("bad http backend spec: " + spec);
                    b.kind = drllm::BackendKind::Http;
                    b.name = spec.substr(5, p1 - 5);
                    b.endpoint_url = spec.substr(p1 + 1, p2 - p1 - 1);
                    b.model_name = spec.substr(p2 + 1);
                } else {
                    throw std::runtime_error("bad backend spec: " + spec);
                }
                cfg.backends.push_back(std::move(b));
            }
        } else if (cfg.backends.empty()) {
            drllm::BackendConfig b;
            b.mock_params.accuracy = mock_accuracy;
            b.mock_params.l1_rate = mock_l1;
            b.mock_params.l2_rate = mock_l2;
            b.mock_params.seed = have_seed ? seed : cfg.seed;
            cfg.backends.push_back(std::move(b));
        }
        drllm::apply_env_overrides(cfg);
        return cfg;
    }
};

int cmd_preprocess(const std::string& input, const std::string& output,
                   const std::string& label_column) {
    drllm::Dataset raw = drllm::load_dataset(input, label_column);
    const std::size_t rows_in = raw.records.size();
    drllm::Dataset clean = drllm::preprocess(raw);
    write_text(output, drllm::serialize_dataset(clean));

    std::ostringstream summary;
    summary << "rows_in: " << rows_in << "\nrows_dropped: " << clean.provenance.rows_dropped
            << "\nrows_out: " << clean.records.size()
            << "\nattack: " << clean.count(drllm::Label::Attack)
            << "\nbenign: " << clean.count(drllm::Label::Benign) << '\n';
    write_text(output + ".summary.txt", summary.str());
    std::cout << summary.str();
    return 0;
}

int cmd_profile(const RunFlags& flags, const std::string& out_prefix) {
    drllm::RunConfig cfg = flags.resolve();
    drllm::Dataset ds = drllm::prepare_dataset(cfg);
    drllm::KnowledgeProfile profile = drllm::compute_profile(ds);
    const std::string text = drllm::render_knowledge_text(profile, ds.schema);
    write_text(out_prefix + ".txt", text + "\n");
    write_text(out_prefix + ".csv", drllm::render_profile_csv(profile, ds.schema));
    std::cout << text << '\n';
    return 0;
}

int cmd_render(const RunFlags& flags, const std::string& template_name, std::size_t row) {
    drllm::RunConfig cfg = flags.resolve();
    auto id = drllm::parse_template_id(template_name);
    if (!id) throw std::runtime_error("unknown template id: " + template_name);

    drllm::Dataset ds = drllm::prepare_dataset(cfg);
    if (row >= ds.records.size()) throw std::runtime_error("row out of range");
    const drllm::KnowledgeProfile profile = drllm::compute_profile(ds);

    const bool wants_kp = drllm::template_includes(*id, drllm::PromptBlockKind::KP);
    drllm::ComposedPrompt prompt = drllm::compose(
        *id,
        wants_kp ? std::optional<std::string>(drllm::render_knowledge_text(profile, ds.schema))
                 : std::nullopt,
        drllm::render_token_text(ds.records[row], ds.schema), ds.records[row].index);

    if (prompt.has_stage1()) {
        std::cout << "=== stage1 ===\n";
        for (const auto& m : prompt.stage1) std::cout << "[" << m.role << "]\n" << m.content << "\n";
    }
    std::cout << "=== stage2 ===\n";
    for (const auto& m : prompt.stage2) std::cout << "[" << m.role << "]\n" << m.content << "\n";
    return 0;
}

int cmd_run(const RunFlags& flags) {
    drllm::RunConfig cfg = flags.resolve();
    drllm::RunArtifacts artifacts = drllm::run_ablation(cfg);
    std::cout << "evaluated " << artifacts.records_evaluated << " records, "
              << artifacts.report.cells.size() << " cells; artifacts in " << cfg.output_dir
              << '\n';
    for (const auto& cell : artifacts.report.cells) {
        if (!cell.auc) {
            std::cerr << "cell " << cell.backend << "/" << drllm::to_string(cell.template_id)
                      << ": AUC not applicable (single-class valid outcomes)\n";
            return 1;
        }
    }
    return 0;
}

int cmd_report(const std::string& trace_path, const std::string& output_dir, double eps_sum,
               bool count_anomalies) {
    const auto results = drllm::parse_trace_log(read_text(trace_path),
                                                eps_sum >= 0 ? eps_sum : drllm::kDefaultEpsSum);
    const drllm::AblationReport report = drllm::report_from_results(
        results, count_anomalies ? drllm::AnomalyHandling::CountAsError
                                 : drllm::AnomalyHandling::Exclude);
    std::filesystem::create_directories(output_dir);
    write_text(output_dir + "/report.md", drllm::render_markdown(report));
    write_text(output_dir + "/report.csv", drllm::render_csv(report));
    write_text(output_dir + "/outcomes.csv", drllm::render_outcomes_csv(results));
    std::cout << "rebuilt reports for " << report.cells.size() << " cells in " << output_dir
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DrLLM: zero-shot DDoS flow classification with LLM backbones"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "drop NaN/Inf rows and write a clean CSV");
    std::string pre_in, pre_out, pre_label = "Label";
    pre->add_option("--input", pre_in, "input CSV")->required();
    pre->add_option("--output", pre_out, "output CSV")->required();
    pre->add_option("--label-column", pre_label, "label column name");

    // profile
    auto* prof = app.add_subcommand("profile", "compute and write the global feature profile");
    RunFlags prof_flags;
    prof_flags.attach(prof);
    std::string prof_out = "profile";
    prof->add_option("--out-prefix", prof_out, "output path prefix (.txt/.csv appended)");

    // render
    auto* rend = app.add_subcommand("render", "print the composed prompt for one record");
    RunFlags rend_flags;
    rend_flags.attach(rend);
    std::string rend_template = "P3";
    std::size_t rend_row = 0;
    rend->add_option("--prompt-template", rend_template, "template id");
    rend->add_option("--row", rend_row, "record position in the prepared dataset");

    // run / ablate (same machinery; ablate defaults to the full grid)
    auto* run = app.add_subcommand("run", "run the configured (backend x template) experiment");
    RunFlags run_flags;
    run_flags.attach(run);

    auto* abl = app.add_subcommand("ablate", "run the full P0..P3 ablation grid");
    RunFlags abl_flags;
    abl_flags.attach(abl);

    // report
    auto* rep = app.add_subcommand("report", "rebuild reports from an existing trace log");
    std::string rep_trace, rep_out = "out";
    double rep_eps = -1;
    bool rep_count = false;
    rep->add_option("--from-trace", rep_trace, "trace.log path")->required();
    rep->add_option("--out", rep_out, "output directory");
    rep->add_option("--eps-sum", rep_eps, "L1 tolerance override");
    rep->add_flag("--count-anomalies", rep_count, "score anomalies as misclassifications");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (pre->parsed()) return cmd_preprocess(pre_in, pre_out, pre_label);
        if (prof->parsed()) return cmd_profile(prof_flags, prof_out);
        if (rend->parsed()) return cmd_render(rend_flags, rend_template, rend_row);
        if (run->parsed()) return cmd_run(run_flags);
        if (abl->parsed()) {
            abl_flags.templates.clear();  // ablation always runs the full grid
            return cmd_run(abl_flags);
        }
        if (rep->parsed()) return cmd_report(rep_trace, rep_out, rep_eps, rep_count);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
