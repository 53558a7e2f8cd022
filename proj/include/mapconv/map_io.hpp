#pragma once

#include <filesystem>
#include <iosfwd>

#include "mapconv/sample_map.hpp"

namespace mapconv {

// MAPC container, little-endian:
//   "MAPC" | version u32 = 1 | n_in u64 | n_out u64 | k u32 | reserved u32 = 0
//   then n_out * k records of: tap_count u8, tap_count * (index u64, weight f64)
// The descriptor string is not stored.
inline constexpr std::uint32_t kMapFormatVersion = 1;

void write_sample_map(std::ostream& out, const SampleMap& map);
void write_sample_map(const std::filesystem::path& path, const SampleMap& map);

SampleMap read_sample_map(std::istream& in);
SampleMap read_sample_map(const std::filesystem::path& path);

}  // namespace mapconv
