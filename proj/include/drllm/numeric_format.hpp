#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace drllm {

// Canonical numeric rendering used everywhere a value appears in prompt
// text or a report: shortest decimal string that parses back to the same
// double, integers without a decimal point, no scientific notation below
// 1e15 in magnitude.
std::string format_number(double value);

// Strict full-string parse; rejects trailing garbage. Accepts the tokens
// produced by format_number plus ordinary decimal/scientific literals.
std::optional<double> parse_number(std::string_view text);

}  // namespace drllm
