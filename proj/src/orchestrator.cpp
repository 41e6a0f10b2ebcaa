#include "drllm/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <tuple>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "drllm/hash.hpp"
#include "drllm/numeric_format.hpp"

namespace drllm {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(trim(item));
    return parts;
}

bool parse_bool(const std::string& v) { return v == "1" || v == "true" || v == "yes"; }

void apply_run_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset") cfg.dataset_path = value;
    else if (key == "label_column") cfg.label_column = value;
    else if (key == "features") cfg.features = split(value, ',');
    else if (key == "records") cfg.sample_n = std::stoull(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "stratified") cfg.stratified = parse_bool(value);
    else if (key == "concurrency") cfg.concurrency_limit = static_cast<unsigned>(std::stoul(value));
    else if (key == "cache") cfg.cache_path = value;
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "eps_sum") cfg.eps_sum = std::stod(value);
    else if (key == "error_ceiling") cfg.error_ceiling = std::stod(value);
    else if (key == "profile_before_sampling") cfg.profile_before_sampling = parse_bool(value);
    else if (key == "anomaly_handling")
        cfg.anomaly_handling = value == "count_as_error" ? AnomalyHandling::CountAsError
                                                         : AnomalyHandling::Exclude;
    else if (key == "stage1_carry")
        cfg.stage1_carry = value == "concatenate" ? Stage1Carry::Concatenate
                                                  : Stage1Carry::AssistantTurn;
    else if (key == "templates") {
        cfg.templates.clear();
        for (const std::string& t : split(value, ',')) {
            auto id = parse_template_id(t);
            if (!id) throw std::runtime_error("unknown template id: " + t);
            cfg.templates.push_back(*id);
        }
    } else {
        throw std::runtime_error("unknown config key: " + key);
    }
}

void apply_backend_key(BackendConfig& b, const std::string& key, const std::string& value) {
    if (key == "kind") b.kind = value == "http" ? BackendKind::Http : BackendKind::Mock;
    else if (key == "endpoint_url") b.endpoint_url = value;
    else if (key == "model") b.model_name = value;
    else if (key == "auth_env") b.auth_env = value;
    else if (key == "temperature") b.temperature = std::stod(value);
    else if (key == "max_output_tokens") b.max_output_tokens = std::stoi(value);
    else if (key == "timeout_ms") b.timeout = std::chrono::milliseconds(std::stoll(value));
    else if (key == "max_retries") b.max_retries = std::stoi(value);
    else if (key == "requests_per_second") b.requests_per_second = std::stod(value);
    else if (key == "mock_accuracy") b.mock_params.accuracy = std::stod(value);
    else if (key == "mock_l1_rate") b.mock_params.l1_rate = std::stod(value);
    else if (key == "mock_l2_rate") b.mock_params.l2_rate = std::stod(value);
    else if (key == "mock_seed") b.mock_params.seed = std::stoull(value);
    else throw std::runtime_error("unknown backend config key: " + key);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);

    RunConfig cfg;
    BackendConfig* current_backend = nullptr;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            const std::string section = trim(t.substr(1, t.size() - 2));
            if (section.rfind("backend", 0) != 0)
                throw std::runtime_error("unknown config section: " + section);
            BackendConfig b;
            b.name = trim(section.substr(7));
            if (b.name.empty()) throw std::runtime_error("backend section needs a name");
            cfg.backends.push_back(b);
            current_backend = &cfg.backends.back();
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (current_backend)
            apply_backend_key(*current_backend, key, value);
        else
            apply_run_key(cfg, key, value);
    }
    apply_env_overrides(cfg);
    return cfg;
}

void apply_env_overrides(RunConfig& config) {
    if (const char* cache = std::getenv("DRLLM_CACHE"); cache && *cache)
        config.cache_path = cache;
    // default auth variable per http backend when none is named
    for (BackendConfig& b : config.backends) {
        if (b.kind == BackendKind::Http && b.auth_env.empty()) {
            std::string name = b.name;
            for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            b.auth_env = "DRLLM_API_KEY_" + name;
        }
    }
}

BackendResponse CachingBackend::complete(const std::vector<ChatMessage>& messages) {
    const std::string fp = request_fingerprint(config_.model_name, messages, config_.temperature);
    if (auto hit = cache_->lookup(fp)) {
        BackendResponse resp;
        resp.text = *hit;
        resp.request_fingerprint = fp;
        return resp;
    }
    BackendResponse resp = inner_->complete(messages);
    cache_->store(fp, resp.text);
    return resp;
}

Dataset prepare_dataset(const RunConfig& config) {
    if (config.dataset_path.empty()) return make_synthetic_dataset(config.sample_n, config.seed);

    Dataset ds = preprocess(load_dataset(config.dataset_path, config.label_column));
    if (!config.features.empty()) ds = select_features(ds, config.features);
    if (config.sample_n < ds.records.size())
        ds = sample(ds, config.sample_n, config.seed, config.stratified);
    return ds;
}

namespace {

struct Task {
    std::size_t backend_idx;
    TemplateId template_id;
    std::size_t record_pos;  // position within dataset.records
};

}  // namespace

RunArtifacts run_experiment(const RunConfig& config) {
    if (config.templates.empty()) throw std::runtime_error("no templates configured");
    if (config.concurrency_limit < 1) throw std::runtime_error("concurrency_limit must be >= 1");

    std::vector<BackendConfig> backend_configs = config.backends;
    if (backend_configs.empty()) backend_configs.push_back(BackendConfig{});

    const Dataset dataset = prepare_dataset(config);

    // profile over what the model will see (or pre-sampling when asked)
    KnowledgeProfile profile;
    if (config.profile_before_sampling && !config.dataset_path.empty()) {
        Dataset full = preprocess(load_dataset(config.dataset_path, config.label_column));
        if (!config.features.empty()) full = select_features(full, config.features);
        profile = compute_profile(full);
    } else {
        profile = compute_profile(dataset);
    }
    const std::string knowledge_text = render_knowledge_text(profile, dataset.schema);

    std::vector<std::string> token_texts(dataset.records.size());
    for (std::size_t i = 0; i < dataset.records.size(); ++i)
        token_texts[i] = render_token_text(dataset.records[i], dataset.schema);

    auto cache = std::make_shared<ResponseCache>(config.cache_path);
    std::vector<std::shared_ptr<MockBackend>> mocks(backend_configs.size());
    std::vector<std::unique_ptr<CachingBackend>> backends;
    for (std::size_t b = 0; b < backend_configs.size(); ++b) {
        std::shared_ptr<Backend> inner;
        if (backend_configs[b].kind == BackendKind::Mock) {
            mocks[b] = std::make_shared<MockBackend>(backend_configs[b]);
            for (std::size_t i = 0; i < dataset.records.size(); ++i)
                mocks[b]->register_truth(token_texts[i], dataset.records[i].label);
            inner = mocks[b];
        } else {
            inner = std::shared_ptr<Backend>(make_backend(backend_configs[b]).release());
        }
        backends.push_back(std::make_unique<CachingBackend>(inner, cache, backend_configs[b]));
    }

    std::vector<Task> tasks;
    for (std::size_t b = 0; b < backend_configs.size(); ++b)
        for (TemplateId t : config.templates)
            for (std::size_t r = 0; r < dataset.records.size(); ++r)
                tasks.push_back({b, t, r});

    std::vector<RecordResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> errors{0};
    std::atomic<bool> aborted{false};
    const std::size_t error_limit =
        static_cast<std::size_t>(config.error_ceiling * static_cast<double>(tasks.size()));

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            const FlowRecord& record = dataset.records[task.record_pos];

            RecordResult& res = results[i];
            res.backend = backend_configs[task.backend_idx].name;
            res.template_id = task.template_id;
            res.record_index = record.index;
            res.truth = record.label;

            if (aborted.load()) {
                res.error = "aborted: error ceiling exceeded";
                continue;
            }
            try {
                const bool wants_kp = template_includes(task.template_id, PromptBlockKind::KP);
                ComposedPrompt prompt = compose(
                    task.template_id,
                    wants_kp ? std::optional<std::string>(knowledge_text) : std::nullopt,
                    token_texts[task.record_pos], record.index);
                res.trace = run_role_reasoning(*backends[task.backend_idx], prompt,
                                               config.stage1_carry);
                res.outcome = extract_outcome(res.trace.r2_text, config.eps_sum);
            } catch (const std::exception& e) {
                res.error = e.what();
                if (errors.fetch_add(1) + 1 > error_limit) aborted.store(true);
            }
        }
    };

    std::vector<std::thread> pool;
    const unsigned n_threads = std::min<unsigned>(config.concurrency_limit,
                                                  static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    if (aborted.load()) {
        std::size_t errored = 0;
        for (const RecordResult& r : results)
            if (!r.ok()) ++errored;
        throw std::runtime_error("run aborted: " + std::to_string(errored) + " of " +
                                 std::to_string(tasks.size()) +
                                 " record pipelines failed (ceiling " +
                                 format_number(config.error_ceiling * 100) + "%)");
    }

    std::sort(results.begin(), results.end(), [](const RecordResult& a, const RecordResult& b) {
        return std::tie(a.backend, a.template_id, a.record_index) <
               std::tie(b.backend, b.template_id, b.record_index);
    });

    RunArtifacts artifacts;
    artifacts.results = std::move(results);
    artifacts.records_evaluated = dataset.records.size();
    artifacts.report = report_from_results(artifacts.results, config.anomaly_handling);
    for (const auto& mock : mocks) {
        if (!mock) continue;
        artifacts.backend_calls += mock->call_count();
        artifacts.max_in_flight = std::max(artifacts.max_in_flight, mock->max_in_flight());
        auto entries = mock->sidecar();
        artifacts.sidecar.insert(artifacts.sidecar.end(), entries.begin(), entries.end());
    }
    return artifacts;
}

AblationReport report_from_results(const std::vector<RecordResult>& results,
                                   AnomalyHandling handling) {
    // group preserving first-seen backend order
    std::vector<std::string> backend_order;
    std::map<std::pair<std::string, int>, std::vector<std::pair<InferenceOutcome, Label>>> cells;
    for (const RecordResult& r : results) {
        if (!r.ok()) continue;
        if (std::find(backend_order.begin(), backend_order.end(), r.backend) ==
            backend_order.end())
            backend_order.push_back(r.backend);
        cells[{r.backend, static_cast<int>(r.template_id)}].emplace_back(r.outcome, r.truth);
    }

    AblationReport report;
    for (const std::string& b : backend_order)
        for (TemplateId t : all_templates())
            if (auto it = cells.find({b, static_cast<int>(t)}); it != cells.end())
                report.cells.push_back(make_cell_report(b, t, it->second, handling));
    return report;
}

namespace {

std::string escape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out += s[i];
            continue;
        }
        switch (s[++i]) {
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            default: out += s[i];
        }
    }
    return out;
}

}  // namespace

std::string render_trace_log(const std::vector<RecordResult>& results) {
    std::ostringstream out;
    for (const RecordResult& r : results) {
        out << r.backend << '\t' << to_string(r.template_id) << '\t' << r.record_index << '\t'
            << to_string(r.truth) << '\t'
            << (r.trace.r1_text ? escape_field(*r.trace.r1_text) : std::string("-")) << '\t'
            << escape_field(r.trace.r2_text) << '\t' << to_string(r.outcome.kind) << '\t'
            << format_number(r.outcome.p_attack) << '\t' << format_number(r.outcome.p_benign)
            << '\t' << format_number(r.outcome.sum_deviation) << '\t' << escape_field(r.error)
            << '\n';
    }
    return out.str();
}

std::vector<RecordResult> parse_trace_log(const std::string& text, double eps_sum) {
    std::vector<RecordResult> results;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() != 11)
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": expected 11 fields, got " +
                                     std::to_string(fields.size()));
        RecordResult r;
        r.backend = fields[0];
        auto tid = parse_template_id(fields[1]);
        if (!tid) throw std::runtime_error("trace line " + std::to_string(line_no) + ": bad template id");
        r.template_id = *tid;
        r.record_index = std::stoull(fields[2]);
        r.truth = fields[3] == "Attack" ? Label::Attack : Label::Benign;
        if (fields[4] != "-") r.trace.r1_text = unescape_field(fields[4]);
        r.trace.r2_text = unescape_field(fields[5]);
        r.trace.record_index = r.record_index;
        r.trace.template_id = r.template_id;
        r.error = unescape_field(fields[10]);
        // outcome is recomputed from the raw text, not trusted from the log
        if (r.ok()) r.outcome = extract_outcome(r.trace.r2_text, eps_sum);
        results.push_back(std::move(r));
    }
    return results;
}

std::string render_outcomes_csv(const std::vector<RecordResult>& results) {
    std::ostringstream out;
    out << "backend,template,record_index,true_label,outcome,p_attack,p_benign,sum_deviation,"
           "predicted\n";
    for (const RecordResult& r : results) {
        if (!r.ok()) continue;
        out << r.backend << ',' << to_string(r.template_id) << ',' << r.record_index << ','
            << to_string(r.truth) << ',' << to_string(r.outcome.kind) << ','
            << format_number(r.outcome.p_attack) << ',' << format_number(r.outcome.p_benign)
            << ',' << format_number(r.outcome.sum_deviation) << ','
            << (r.outcome.kind == InferenceOutcome::Kind::Valid ? to_string(r.outcome.predicted)
                                                                : "-")
            << '\n';
    }
    return out.str();
}

namespace {

std::string config_snapshot(const RunConfig& config) {
    std::ostringstream out;
    out << "dataset=" << (config.dataset_path.empty() ? "<synthetic>" : config.dataset_path)
        << "\nrecords=" << config.sample_n << "\nseed=" << config.seed
        << "\nstratified=" << (config.stratified ? "true" : "false") << "\ntemplates=";
    for (std::size_t i = 0; i < config.templates.size(); ++i)
        out << (i ? "," : "") << to_string(config.templates[i]);
    out << "\nbackends=";
    for (std::size_t i = 0; i < config.backends.size(); ++i)
        out << (i ? "," : "") << config.backends[i].name;
    if (config.backends.empty()) out << "mock";
    out << "\nconcurrency=" << config.concurrency_limit << "\neps_sum=" << config.eps_sum
        << "\nanomaly_handling="
        << (config.anomaly_handling == AnomalyHandling::Exclude ? "exclude" : "count_as_error")
        << "\nerror_ceiling=" << config.error_ceiling << '\n';
    return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

}  // namespace

void write_artifacts(const RunConfig& config, const RunArtifacts& artifacts) {
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);

    const std::string outcomes = render_outcomes_csv(artifacts.results);
    write_file(dir / "trace.log", render_trace_log(artifacts.results));
    write_file(dir / "outcomes.csv", outcomes);
    write_file(dir / "report.md", render_markdown(artifacts.report));
    write_file(dir / "report.csv", render_csv(artifacts.report));

    const std::string snapshot = config_snapshot(config);
    write_file(dir / "run_manifest",
               snapshot + "content_hash=" + hash128_hex(snapshot + outcomes) + '\n');

    if (!artifacts.sidecar.empty()) {
        std::ostringstream side;
        side << "token_hash,true_label,kind,p_attack,p_benign\n";
        for (const MockSidecarEntry& e : artifacts.sidecar) {
            side << hash128_hex(e.token_text) << ',' << to_string(e.true_label) << ',' << e.kind
                 << ',' << format_number(e.p_attack) << ',' << format_number(e.p_benign) << '\n';
        }
        write_file(dir / "mock_sidecar.csv", side.str());
    }
}

RunArtifacts run_ablation(const RunConfig& config) {
    RunArtifacts artifacts = run_experiment(config);
    write_artifacts(config, artifacts);
    return artifacts;
}

}  // namespace drllm
