// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace evoagent {

/// Approximate token count. Deterministic, model-free.
struct TokenCount {
    std::uint64_t value = 0;

    friend TokenCount operator+(TokenCount a, TokenCount b) { return {a.value + b.value}; }
    TokenCount& operator+=(TokenCount o) { value += o.value; return *this; }
    auto operator<=>(const TokenCount&) const = default;
};

/// Counting rule (fixed): count = ceil((ceil(bytes/4) + words) / 2), where
/// words are maximal runs of non-whitespace bytes. Deterministic, monotone
/// in text length, and subadditive under concatenation:
///   token_count(a ++ b) <= token_count(a) + token_count(b) + 1.
TokenCount token_count(std::string_view text);

} // namespace evoagent
