#include "drllm/reasoning.hpp"

#include <cctype>
#include <cmath>
#include <regex>
#include <stdexcept>

namespace drllm {

const char* to_string(InferenceOutcome::Kind kind) {
    switch (kind) {
        case InferenceOutcome::Kind::Valid: return "valid";
        case InferenceOutcome::Kind::AnomalyL1: return "l1";
        case InferenceOutcome::Kind::AnomalyL2: return "l2";
        case InferenceOutcome::Kind::ParseFailure: return "parse_failure";
    }
    return "?";
}

ReasoningTrace run_role_reasoning(Backend& backend, const ComposedPrompt& prompt,
                                  Stage1Carry carry) {
    ReasoningTrace trace;
    trace.record_index = prompt.record_index;
    trace.template_id = prompt.template_id;

    std::vector<ChatMessage> stage2 = prompt.stage2;
    if (prompt.has_stage1()) {
        BackendResponse r1;
        try {
            r1 = backend.complete(prompt.stage1);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("stage1: ") + e.what());
        }
        trace.r1_text = r1.text;
        trace.stage1_latency = r1.latency;

        if (carry == Stage1Carry::AssistantTurn) {
            std::vector<ChatMessage> continuation = prompt.stage1;
            continuation.push_back({"assistant", r1.text});
            continuation.insert(continuation.end(), stage2.begin(), stage2.end());
            stage2 = std::move(continuation);
        } else {
            // fold R1 into the head of the stage2 user message
            stage2.front().content = r1.text + "\n" + stage2.front().content;
        }
    }

    BackendResponse r2;
    try {
        r2 = backend.complete(stage2);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage2: ") + e.what());
    }
    trace.r2_text = r2.text;
    trace.stage2_latency = r2.latency;
    trace.r2_fingerprint = r2.request_fingerprint;
    return trace;
}

namespace {

const std::regex& grammar_regex() {
    static const std::regex re(
        R"(attack\s*:\s*([0-9]*\.?[0-9]+)\s*(%?)\s*,\s*benign\s*:\s*([0-9]*\.?[0-9]+)\s*(%?))",
        std::regex::icase | std::regex::optimize);
    return re;
}

const std::vector<std::string>& refusal_lexicon() {
    static const std::vector<std::string> phrases = {
        "cannot", "unable to", "impossible to determine", "insufficient information",
        "lack of confidence",
    };
    return phrases;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

InferenceOutcome extract_outcome(const std::string& raw, double eps_sum) {
    InferenceOutcome out;
    out.raw = raw;

    // last qualifying match wins (CoT outputs reason first, conclude last)
    bool found = false;
    double x = 0, y = 0;
    auto begin = std::sregex_iterator(raw.begin(), raw.end(), grammar_regex());
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        double a = 0, b = 0;
        try {
            a = std::stod(m[1].str());
            b = std::stod(m[3].str());
        } catch (const std::out_of_range&) {
            continue;  // absurd digit runs in fuzz input
        }
        const bool a_pct = m[2].length() > 0;
        const bool b_pct = m[4].length() > 0;
        if (a_pct && b_pct) {
            a /= 100.0;
            b /= 100.0;
        } else if (a_pct != b_pct) {
            continue;  // mixed units, ambiguous
        }
        if (a < 0 || a > 1 || b < 0 || b > 1) continue;
        x = a;
        y = b;
        found = true;
    }

    if (found) {
        const double sum = x + y;
        const double deviation = std::fabs(sum - 1.0);
        if (deviation <= eps_sum) {
            out.kind = InferenceOutcome::Kind::Valid;
            if (deviation <= 1e-12) {
                // decimal-rounding artifact only; keep the parsed pair so
                // grammar-printed values round-trip bit-exactly
                out.p_attack = x;
                out.p_benign = y;
            } else {
                // renormalize; anchor the >= 0.5 side so the complement
                // subtraction is exact and the pair sums to 1 exactly
                const double p = sum > 0 ? x / sum : 0.5;
                if (p >= 0.5) {
                    out.p_attack = p;
                    out.p_benign = 1.0 - p;
                } else {
                    out.p_benign = 1.0 - p;
                    out.p_attack = 1.0 - out.p_benign;
                }
            }
            out.predicted = decide_from_p_attack(out.p_attack);
        } else {
            out.kind = InferenceOutcome::Kind::AnomalyL1;
            out.p_attack = x;
            out.p_benign = y;
            out.sum_deviation = deviation;
        }
        return out;
    }

    const std::string text = lower(raw);
    for (const std::string& phrase : refusal_lexicon()) {
        if (text.find(phrase) != std::string::npos) {
            out.kind = InferenceOutcome::Kind::AnomalyL2;
            return out;
        }
    }
    out.kind = InferenceOutcome::Kind::ParseFailure;
    return out;
}

Label decide_from_p_attack(double p_attack) {
    return p_attack >= 0.5 ? Label::Attack : Label::Benign;
}

Label decide(const ParsedClassification& parsed) { return decide_from_p_attack(parsed.p_attack); }

}  // namespace drllm
