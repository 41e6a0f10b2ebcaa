#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "drllm/backend.hpp"
#include "drllm/prompts.hpp"

namespace drllm {

// How stage1 output R1 is carried into the stage2 conversation.
enum class Stage1Carry { AssistantTurn, Concatenate };

struct ReasoningTrace {
    std::size_t record_index = 0;
    TemplateId template_id = TemplateId::P0;
    std::optional<std::string> r1_text;
    std::string r2_text;
    std::chrono::milliseconds stage1_latency{0};
    std::chrono::milliseconds stage2_latency{0};
    std::string r2_fingerprint;
};

struct ParsedClassification {
    double p_attack = 0;
    double p_benign = 0;
    Label predicted = Label::Benign;
    std::string raw;
};

struct InferenceOutcome {
    enum class Kind { Valid, AnomalyL1, AnomalyL2, ParseFailure };
    Kind kind = Kind::ParseFailure;
    // Valid and AnomalyL1 carry the parsed pair; Valid is renormalized so
    // p_attack + p_benign == 1 exactly.
    double p_attack = 0;
    double p_benign = 0;
    double sum_deviation = 0;  // AnomalyL1 only
    Label predicted = Label::Benign;
    std::string raw;
};

const char* to_string(InferenceOutcome::Kind kind);

// Default L1 tolerance on |p_attack + p_benign - 1|.
inline constexpr double kDefaultEpsSum = 0.01;

// Runs the one- or two-call pipeline. Backend errors are rethrown with a
// "stage1: " / "stage2: " prefix; a stage1 failure makes no stage2 call.
ReasoningTrace run_role_reasoning(Backend& backend, const ComposedPrompt& prompt,
                                  Stage1Carry carry = Stage1Carry::AssistantTurn);

// Total function: scans for the `Attack: <x>, Benign: <y>` grammar
// (case-insensitive, flexible whitespace, last qualifying match wins,
// percent pairs divided by 100), then the refusal lexicon.
InferenceOutcome extract_outcome(const std::string& raw, double eps_sum = kDefaultEpsSum);

// Attack wins the 0.5 tie.
Label decide(const ParsedClassification& parsed);
Label decide_from_p_attack(double p_attack);

}  // namespace drllm
