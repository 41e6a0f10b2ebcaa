#include "drllm/numeric_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace drllm {

namespace {

bool round_trips(const std::string& s, double value) {
    double parsed = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), parsed);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && parsed == value;
}

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";

    double integral = 0.0;
    if (std::modf(value, &integral) == 0.0 && std::fabs(value) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", value);
        return buf;
    }

    if (std::fabs(value) < 1e15) {
        // Shortest fixed-point form that survives a round trip.
        for (int prec = 1; prec <= 17; ++prec) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.*f", prec, value);
            std::string s(buf);
            // trim trailing zeros after the decimal point
            while (s.size() > 1 && s.back() == '0') s.pop_back();
            if (!s.empty() && s.back() == '.') s.pop_back();
            if (round_trips(s, value)) return s;
        }
    }

    // Huge magnitudes (or pathological subnormals): shortest round trip,
    // scientific allowed.
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    // from_chars does not accept a leading '+'
    if (text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

}  // namespace drllm
