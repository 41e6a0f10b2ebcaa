#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drllm/flow_data.hpp"

namespace drllm {

enum class PromptBlockKind { KP, BP, CoD, CoT, TP };

enum class TemplateId { P0, P1, P2, P3prime, P3 };

std::string to_string(TemplateId id);
std::optional<TemplateId> parse_template_id(const std::string& text);
const std::vector<TemplateId>& all_templates();

// Fixed block composition: P0={BP,TP}, P1={BP,CoD,TP}, P2={BP,CoD,CoT,TP},
// P3'={KP,BP,CoD,TP}, P3={KP,BP,CoD,CoT,TP}.
bool template_includes(TemplateId id, PromptBlockKind kind);

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

// Two-stage message bundle for one record. stage1 carries KP (empty when
// the template has no KP); stage2 carries BP/CoD/CoT and the Data line.
struct ComposedPrompt {
    std::vector<ChatMessage> stage1;
    std::vector<ChatMessage> stage2;
    TemplateId template_id = TemplateId::P0;
    std::size_t record_index = 0;

    bool has_stage1() const { return !stage1.empty(); }
};

// `<FeatureName>: <value>` pairs in schema order, joined by ", ".
std::string render_token_text(const FlowRecord& record, const FeatureSchema& schema);

// Inverse of render_token_text; exact for the canonical numeric format.
std::vector<std::pair<std::string, double>> parse_token_text(const std::string& text);

// Frozen block texts. Each carries a unique sentinel ([[KP]], [[BP]],
// [[CoD]], [[CoT]]) so composition can be asserted independent of wording.
// The KP text contains a {{KNOWLEDGE}} placeholder filled by compose().
std::string canonical_block_text(PromptBlockKind kind);

// System-role preamble sent ahead of the KP body.
std::string expert_preamble();

// Marker prefixing the serialized record in stage2.
inline constexpr const char* kDataPrefix = "Data: ";

ComposedPrompt compose(TemplateId id, const std::optional<std::string>& knowledge_text,
                       const std::string& token_text, std::size_t record_index = 0);

}  // namespace drllm
