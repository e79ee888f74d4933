// SPDX-License-Identifier: Apache-2.0
#include "evoagent/token.hpp"

#include <cctype>

namespace evoagent {

TokenCount token_count(std::string_view text) {
    std::uint64_t bytes = text.size();
    std::uint64_t words = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        bool ws = std::isspace(c) != 0;
        if (!ws && !in_word) ++words;
        in_word = !ws;
    }
    std::uint64_t quarter = (bytes + 3) / 4;
    return {(quarter + words + 1) / 2};
}

} // namespace evoagent
