#pragma once

#include <string>
#include <string_view>

namespace skypack {

/// Token accounting: ceil(bytes / 4).
constexpr long count_tokens(std::string_view text)
{
    return static_cast<long>((text.size() + 3) / 4);
}

/// A knowledge pack sliced at exposure level K and rendered to its wire text.
struct SerializedPack {
    int level = 1;
    std::string body;
    long token_count = 0;

    friend bool operator==(const SerializedPack&, const SerializedPack&) = default;
};

} // namespace skypack
