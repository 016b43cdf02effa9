// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dumix {

// Parses token counts like "4096", "71.7B", "0.5T" into an exact integer.
// Suffixes: K=1e3, M=1e6, B=1e9, T=1e12. Decimal values must resolve to a
// whole number of tokens ("1.5K" is fine, "1.5" is not).
std::uint64_t parse_token_count(std::string_view text);

// Human-readable rendering, e.g. 343500000000 -> "343.5B". Exact small
// values print as plain integers.
std::string format_token_count(std::uint64_t tokens);

}  // namespace dumix
