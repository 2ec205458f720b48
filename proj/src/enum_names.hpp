#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "primvid/error.hpp"

namespace primvid::detail {

template <typename E, std::size_t N>
std::string_view name_of(const std::pair<E, std::string_view> (&table)[N], E value) {
    for (const auto& [v, n] : table)
        if (v == value) return n;
    return "?";
}

template <typename E, std::size_t N>
E value_of(const std::pair<E, std::string_view> (&table)[N], std::string_view name, const char* what) {
    for (const auto& [v, n] : table)
        if (n == name) return v;
    throw InvalidSpec("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

}  // namespace primvid::detail
