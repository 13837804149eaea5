#pragma once

#include <algorithm>
#include <compare>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

namespace skypack {

struct GridCell {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

/// Row-major order: by y, then x. Used for neighbor tie-breaking and canonical output.
inline bool row_major_less(const GridCell& a, const GridCell& b)
{
    return a.y != b.y ? a.y < b.y : a.x < b.x;
}

inline int manhattan(const GridCell& a, const GridCell& b)
{
    return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

inline int chebyshev(const GridCell& a, const GridCell& b)
{
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

inline std::string to_string(const GridCell& c)
{
    return std::to_string(c.x) + "," + std::to_string(c.y);
}

inline std::ostream& operator<<(std::ostream& os, const GridCell& c)
{
    return os << '(' << c.x << ',' << c.y << ')';
}

/// Per-tick UAV positions after each clock tick; the start cell is not included.
using Path = std::vector<GridCell>;

} // namespace skypack
