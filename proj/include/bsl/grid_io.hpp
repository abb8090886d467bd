#pragma once

#include <filesystem>

#include "bsl/grid.hpp"

namespace bsl {

// Layout: "BSLB", u32 version (1), u32 dim, u32 N, f64 box_half_width,
// f64 domain_radius, u8 kind, then N^n complex128 values, all little-endian.
void write_grid(const ScalarField& field, const std::filesystem::path& path);
ScalarField read_grid(const std::filesystem::path& path);

inline constexpr std::uint32_t grid_format_version = 1;

}  // namespace bsl
