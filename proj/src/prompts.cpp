#include "drllm/prompts.hpp"

#include <sstream>
#include <stdexcept>

#include "drllm/numeric_format.hpp"

namespace drllm {

std::string to_string(TemplateId id) {
    switch (id) {
        case TemplateId::P0: return "P0";
        case TemplateId::P1: return "P1";
        case TemplateId::P2: return "P2";
        case TemplateId::P3prime: return "P3prime";
        case TemplateId::P3: return "P3";
    }
    return "?";
}

std::optional<TemplateId> parse_template_id(const std::string& text) {
    if (text == "P0") return TemplateId::P0;
    if (text == "P1") return TemplateId::P1;
    if (text == "P2") return TemplateId::P2;
    if (text == "P3prime" || text == "P3'") return TemplateId::P3prime;
    if (text == "P3") return TemplateId::P3;
    return std::nullopt;
}

const std::vector<TemplateId>& all_templates() {
    static const std::vector<TemplateId> ids = {
        TemplateId::P0, TemplateId::P1, TemplateId::P2, TemplateId::P3prime, TemplateId::P3};
    return ids;
}

bool template_includes(TemplateId id, PromptBlockKind kind) {
    switch (kind) {
        case PromptBlockKind::BP:
        case PromptBlockKind::TP:
            return true;
        case PromptBlockKind::CoD:
            return id != TemplateId::P0;
        case PromptBlockKind::CoT:
            return id == TemplateId::P2 || id == TemplateId::P3;
        case PromptBlockKind::KP:
            return id == TemplateId::P3prime || id == TemplateId::P3;
    }
    return false;
}

std::string render_token_text(const FlowRecord& record, const FeatureSchema& schema) {
    if (record.values.size() != schema.feature_count())
        throw std::runtime_error("record/schema arity mismatch");
    std::ostringstream out;
    for (std::size_t j = 0; j < record.values.size(); ++j) {
        if (j) out << ", ";
        out << schema.feature_names[j] << ": " << format_number(record.values[j]);
    }
    return out.str();
}

std::vector<std::pair<std::string, double>> parse_token_text(const std::string& text) {
    std::vector<std::pair<std::string, double>> pairs;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(", ", pos);
        if (end == std::string::npos) end = text.size();
        const std::string item = text.substr(pos, end - pos);
        const std::size_t sep = item.rfind(": ");
        if (sep == std::string::npos) throw std::runtime_error("malformed token text: " + item);
        auto value = parse_number(item.substr(sep + 2));
        if (!value) throw std::runtime_error("malformed token value: " + item);
        pairs.emplace_back(item.substr(0, sep), *value);
        pos = end + (end < text.size() ? 2 : 0);
    }
    return pairs;
}

std::string expert_preamble() {
    return "You are an experienced network security expert specializing in DDoS "
           "traffic analysis and intrusion detection.";
}

std::string canonical_block_text(PromptBlockKind kind) {
    switch (kind) {
        case PromptBlockKind::KP:
            return "[[KP]] Assume the role of a network traffic analyst reviewing flow "
                   "statistics from a monitored network. Below is the global distribution "
                   "of every feature across the dataset, given as Max, Min, Median, Mean "
                   "and Variance in the feature's native units:\n"
                   "{{KNOWLEDGE}}\n"
                   "Memorize these statistics as prior knowledge for the classification "
                   "that follows. Do not analyze them now; reply with the single word OK "
                   "and nothing else.";
        case PromptBlockKind::BP:
            return "[[BP]] The data line below describes one network flow as feature-value "
                   "pairs. Decide whether this flow is DDoS attack traffic or benign "
                   "traffic, and provide a probabilistic judgment based on the data.";
        case PromptBlockKind::CoD:
            return "[[CoD]] Your final answer must contain exactly one line of the form "
                   "`Attack: <p>, Benign: <q>` where <p> and <q> are decimals between 0 "
                   "and 1 and p + q = 1. Output nothing after that line.";
        case PromptBlockKind::CoT:
            return "[[CoT]] Let's think step by step, examining each feature value "
                   "against its global distribution before concluding.";
        case PromptBlockKind::TP:
            // TP has no frozen wording; it is the Data line itself.
            return kDataPrefix;
    }
    return {};
}

ComposedPrompt compose(TemplateId id, const std::optional<std::string>& knowledge_text,
                       const std::string& token_text, std::size_t record_index) {
    const bool wants_kp = template_includes(id, PromptBlockKind::KP);
    if (wants_kp && !knowledge_text)
        throw std::runtime_error("template " + to_string(id) + " requires knowledge text");
    if (!wants_kp && knowledge_text)
        throw std::runtime_error("template " + to_string(id) + " does not take knowledge text");

    ComposedPrompt prompt;
    prompt.template_id = id;
    prompt.record_index = record_index;

    if (wants_kp) {
        std::string body = canonical_block_text(PromptBlockKind::KP);
        const std::string placeholder = "{{KNOWLEDGE}}";
        body.replace(body.find(placeholder), placeholder.size(), *knowledge_text);
        prompt.stage1.push_back({"system", expert_preamble()});
        prompt.stage1.push_back({"user", std::move(body)});
    }

    std::ostringstream body;
    body << canonical_block_text(PromptBlockKind::BP);
    if (template_includes(id, PromptBlockKind::CoD))
        body << '\n' << canonical_block_text(PromptBlockKind::CoD);
    if (template_includes(id, PromptBlockKind::CoT))
        body << '\n' << canonical_block_text(PromptBlockKind::CoT);
    body << '\n' << kDataPrefix << token_text;
    prompt.stage2.push_back({"user", body.str()});
    return prompt;
}

}  // namespace drllm
