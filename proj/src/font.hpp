#pragma once

#include <array>
#include <cstdint>

namespace pap::font {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kGlyphAdvance = kGlyphWidth + 1;

/// 5x7 bitmap for digit d; bit (4 - x) of row y is column x.
const std::array<std::uint8_t, kGlyphHeight>& digit(int d);

}  // namespace pap::font
