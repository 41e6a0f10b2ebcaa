#include "drllm/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace drllm {

ConfusionCounts compute_confusion(const std::vector<std::pair<InferenceOutcome, Label>>& outcomes,
                                  AnomalyHandling handling) {
    ConfusionCounts c;
    for (const auto& [outcome, truth] : outcomes) {
        Label predicted;
        if (outcome.kind == InferenceOutcome::Kind::Valid) {
            predicted = outcome.predicted;
        } else if (handling == AnomalyHandling::CountAsError) {
            predicted = truth == Label::Attack ? Label::Benign : Label::Attack;
        } else {
            continue;
        }
        if (truth == Label::Attack)
            (predicted == Label::Attack ? c.tp : c.fn)++;
        else
            (predicted == Label::Attack ? c.fp : c.tn)++;
    }
    return c;
}

std::pair<double, double> f1_recall(const ConfusionCounts& c) {
    const double recall =
        (c.tp + c.fn) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    const double precision =
        (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double f1 =
        (precision + recall) == 0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    return {f1, recall};
}

std::optional<double> compute_auc(const std::vector<double>& scores,
                                  const std::vector<Label>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }

    double rank_sum_attack = 0;
    std::uint64_t n_attack = 0, n_benign = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == Label::Attack) {
            rank_sum_attack += rank[k];
            ++n_attack;
        } else {
            ++n_benign;
        }
    }
    if (n_attack == 0 || n_benign == 0) return std::nullopt;

    const double u = rank_sum_attack - static_cast<double>(n_attack) * (n_attack + 1) / 2.0;
    return u / (static_cast<double>(n_attack) * static_cast<double>(n_benign));
}

std::pair<double, double> anomaly_rates(const std::vector<InferenceOutcome>& outcomes) {
    if (outcomes.empty()) throw std::runtime_error("anomaly_rates: no outcomes");
    std::uint64_t l1 = 0, l2 = 0;
    for (const InferenceOutcome& o : outcomes) {
        if (o.kind == InferenceOutcome::Kind::AnomalyL1) ++l1;
        // parse failures fold into L2 for table-shaped reporting
        if (o.kind == InferenceOutcome::Kind::AnomalyL2 ||
            o.kind == InferenceOutcome::Kind::ParseFailure)
            ++l2;
    }
    const double total = static_cast<double>(outcomes.size());
    return {100.0 * static_cast<double>(l1) / total, 100.0 * static_cast<double>(l2) / total};
}

CellReport make_cell_report(const std::string& backend, TemplateId template_id,
                            const std::vector<std::pair<InferenceOutcome, Label>>& outcomes,
                            AnomalyHandling handling) {
    CellReport cell;
    cell.backend = backend;
    cell.template_id = template_id;
    cell.n_total = outcomes.size();

    std::vector<InferenceOutcome> flat;
    std::vector<double> scores;
    std::vector<Label> labels;
    flat.reserve(outcomes.size());
    for (const auto& [outcome, truth] : outcomes) {
        flat.push_back(outcome);
        switch (outcome.kind) {
            case InferenceOutcome::Kind::Valid:
                ++cell.n_valid;
                scores.push_back(outcome.p_attack);
                labels.push_back(truth);
                break;
            case InferenceOutcome::Kind::AnomalyL1:
                ++cell.n_l1;
                break;
            default:
                ++cell.n_l2;
                break;
        }
    }

    const auto [f1, recall] = f1_recall(compute_confusion(outcomes, handling));
    cell.f1 = f1;
    cell.recall = recall;
    if (!scores.empty()) cell.auc = compute_auc(scores, labels);
    if (cell.n_total > 0) {
        auto [l1, l2] = anomaly_rates(flat);
        cell.l1_rate = l1;
        cell.l2_rate = l2;
    }
    return cell;
}

double delta_vs_p3(double cell_value, double p3_value) {
    return 100.0 * (cell_value - p3_value) / p3_value;
}

namespace {

std::string fmt(double v, int places) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", places, v);
    return buf;
}

std::string fmt_delta(double d) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%+.2f", d);
    return buf;
}

const char* pretty_template(TemplateId id) {
    return id == TemplateId::P3prime ? "P3'" : (id == TemplateId::P0   ? "P0"
                                                : id == TemplateId::P1 ? "P1"
                                                : id == TemplateId::P2 ? "P2"
                                                                       : "P3");
}

struct Grid {
    std::vector<std::string> backends;           // insertion order
    std::vector<TemplateId> templates;           // canonical order
    std::map<std::pair<std::string, int>, const CellReport*> cells;
    bool has_p3 = false;

    const CellReport* at(const std::string& b, TemplateId t) const {
        auto it = cells.find({b, static_cast<int>(t)});
        return it == cells.end() ? nullptr : it->second;
    }
};

Grid build_grid(const AblationReport& report) {
    Grid g;
    for (const CellReport& cell : report.cells) {
        if (std::find(g.backends.begin(), g.backends.end(), cell.backend) == g.backends.end())
            g.backends.push_back(cell.backend);
        g.cells[{cell.backend, static_cast<int>(cell.template_id)}] = &cell;
    }
    for (TemplateId t : all_templates()) {
        bool present = false;
        for (const auto& b : g.backends)
            if (g.at(b, t)) present = true;
        if (present) g.templates.push_back(t);
    }
    g.has_p3 = std::find(g.templates.begin(), g.templates.end(), TemplateId::P3) != g.templates.end();
    return g;
}

// value cell with optional delta annotation vs the backend's P3 value
std::string metric_cell(std::optional<double> value, std::optional<double> p3_value,
                        bool annotate) {
    if (!value) return "n/a";
    std::string s = fmt(*value, 4);
    if (annotate && p3_value && *p3_value != 0.0)
        s += " (" + fmt_delta(delta_vs_p3(*value, *p3_value)) + "%)";
    return s;
}

std::optional<double> metric_of(const CellReport* cell, int metric) {
    if (!cell) return std::nullopt;
    switch (metric) {
        case 0: return cell->f1;
        case 1: return cell->recall;
        default: return cell->auc;
    }
}

}  // namespace

std::string render_markdown(const AblationReport& report) {
    const Grid g = build_grid(report);
    static const char* metric_names[] = {"F1", "Recall", "AUC"};

    std::ostringstream out;
    out << "# Ablation results\n\n## Classification metrics\n\n";
    out << "| Backbone | Metric |";
    for (TemplateId t : g.templates) out << ' ' << pretty_template(t) << " |";
    out << "\n|---|---|";
    for (std::size_t i = 0; i < g.templates.size(); ++i) out << "---|";
    out << '\n';
    for (const std::string& b : g.backends) {
        for (int m = 0; m < 3; ++m) {
            out << "| " << b << " | " << metric_names[m] << " |";
            const CellReport* p3 = g.at(b, TemplateId::P3);
            for (TemplateId t : g.templates) {
                const bool annotate = g.has_p3 && t != TemplateId::P3;
                out << ' ' << metric_cell(metric_of(g.at(b, t), m), metric_of(p3, m), annotate)
                    << " |";
            }
            out << '\n';
        }
    }

    out << "\n## Abnormal output rates [%]\n\n";
    out << "| Backbone | Metric |";
    for (TemplateId t : g.templates) out << ' ' << pretty_template(t) << " |";
    out << "\n|---|---|";
    for (std::size_t i = 0; i < g.templates.size(); ++i) out << "---|";
    out << '\n';
    for (const std::string& b : g.backends) {
        for (int m = 0; m < 2; ++m) {
            out << "| " << b << " | " << (m == 0 ? "L1" : "L2") << " |";
            for (TemplateId t : g.templates) {
                const CellReport* cell = g.at(b, t);
                out << ' '
                    << (cell ? fmt(m == 0 ? cell->l1_rate : cell->l2_rate, 2) : "n/a") << " |";
            }
            out << '\n';
        }
    }
    return out.str();
}

std::string render_csv(const AblationReport& report) {
    const Grid g = build_grid(report);
    std::ostringstream out;
    out << "backend,template,metric,value,delta_vs_p3\n";
    static const char* metric_names[] = {"f1", "recall", "auc", "l1_rate", "l2_rate"};
    for (const std::string& b : g.backends) {
        const CellReport* p3 = g.at(b, TemplateId::P3);
        for (TemplateId t : g.templates) {
            const CellReport* cell = g.at(b, t);
            if (!cell) continue;
            for (int m = 0; m < 5; ++m) {
                std::optional<double> value, p3_value;
                int places = m < 3 ? 4 : 2;
                switch (m) {
                    case 0: value = cell->f1; p3_value = p3 ? std::optional(p3->f1) : std::nullopt; break;
                    case 1: value = cell->recall; p3_value = p3 ? std::optional(p3->recall) : std::nullopt; break;
                    case 2: value = cell->auc; p3_value = p3 ? p3->auc : std::nullopt; break;
                    case 3: value = cell->l1_rate; p3_value = p3 ? std::optional(p3->l1_rate) : std::nullopt; break;
                    case 4: value = cell->l2_rate; p3_value = p3 ? std::optional(p3->l2_rate) : std::nullopt; break;
                }
                out << b << ',' << to_string(t) << ',' << metric_names[m] << ',';
                if (value) out << fmt(*value, places);
                out << ',';
                if (value && p3_value && t != TemplateId::P3 && *p3_value != 0.0)
                    out << fmt_delta(delta_vs_p3(*value, *p3_value));
                out << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace drllm
