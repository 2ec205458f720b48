#pragma once

#include <array>
#include <cstdint>

namespace primvid::render::font {

inline constexpr int kWidth = 5;
inline constexpr int kHeight = 7;
inline constexpr int kAdvance = 6;  // glyph width plus one column of spacing

/// Rows of a 5x7 glyph; lowercase maps to uppercase, unknown chars to '?'.
const std::array<std::uint8_t, 7>& glyph(char c);

}  // namespace primvid::render::font
