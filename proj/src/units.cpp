// SPDX-License-Identifier: Apache-2.0
#include "dumix/units.hpp"

#include <cstdio>

#include "dumix/errors.hpp"

namespace dumix {

namespace {

std::uint64_t suffix_multiplier(char c) {
    switch (c) {
        case 'K': case 'k': return 1000ULL;
        case 'M': case 'm': return 1000000ULL;
        case 'B': case 'b': return 1000000000ULL;
        case 'T': case 't': return 1000000000000ULL;
        default: return 0;
    }
}

}  // namespace

std::uint64_t parse_token_count(std::string_view text) {
    if (text.empty()) throw ConfigError("empty token count");

    std::uint64_t multiplier = 1;
    std::string_view digits = text;
    if (std::uint64_t m = suffix_multiplier(text.back()); m != 0) {
        multiplier = m;
        digits = text.substr(0, text.size() - 1);
    }
    if (digits.empty()) throw ConfigError("malformed token count '" + std::string(text) + "'");

    // Exact integer arithmetic: accumulate digits, track decimal places,
    // then scale by multiplier / 10^frac with divisibility checks.
    std::uint64_t value = 0;
    std::uint64_t frac_scale = 1;
    bool seen_dot = false;
    for (char c : digits) {
        if (c == '.') {
            if (seen_dot) throw ConfigError("malformed token count '" + std::string(text) + "'");
            seen_dot = true;
            continue;
        }
        if (c < '0' || c > '9')
            throw ConfigError("malformed token count '" + std::string(text) + "'");
        if (value > (UINT64_MAX - 9) / 10)
            throw ConfigError("token count overflow in '" + std::string(text) + "'");
        value = value * 10 + static_cast<std::uint64_t>(c - '0');
        if (seen_dot) {
            if (frac_scale > UINT64_MAX / 10)
                throw ConfigError("token count overflow in '" + std::string(text) + "'");
            frac_scale *= 10;
        }
    }
    if (multiplier % frac_scale != 0)
        throw ConfigError("token count '" + std::string(text) + "' is not a whole number of tokens");
    multiplier /= frac_scale;
    if (multiplier != 0 && value > UINT64_MAX / multiplier)
        throw ConfigError("token count overflow in '" + std::string(text) + "'");
    return value * multiplier;
}

std::string format_token_count(std::uint64_t tokens) {
    struct Unit { std::uint64_t scale; char suffix; };
    static constexpr Unit kUnits[] = {
        {1000000000000ULL, 'T'}, {1000000000ULL, 'B'}, {1000000ULL, 'M'}, {1000ULL, 'K'}};
    // A suffix is used only when one decimal place renders the value
    // exactly; anything else prints as a plain integer.
    for (const Unit& u : kUnits) {
        if (tokens >= u.scale && tokens % (u.scale / 10) == 0) {
            std::uint64_t whole = tokens / u.scale;
            std::uint64_t tenth = (tokens % u.scale) / (u.scale / 10);
            char buf[48];
            if (tenth == 0)
                std::snprintf(buf, sizeof(buf), "%llu%c",
                              static_cast<unsigned long long>(whole), u.suffix);
            else
                std::snprintf(buf, sizeof(buf), "%llu.%llu%c",
                              static_cast<unsigned long long>(whole),
                              static_cast<unsigned long long>(tenth), u.suffix);
            return buf;
        }
    }
    return std::to_string(tokens);
}

}  // namespace dumix
