#pragma once

#include <filesystem>
#include <iosfwd>

#include "mapconv/tensor.hpp"

namespace mapconv {

// VTXT vertex/flat tensor, little-endian:
//   "VTXT" | version u32 = 1 | channels u32 | count u64 | channels*count f64
inline constexpr std::uint32_t kVertexFormatVersion = 1;

void write_vtxt(std::ostream& out, const Tensor& t);
void write_vtxt(const std::filesystem::path& path, const Tensor& t);
// Returns a (channels, count) tensor.
Tensor read_vtxt(std::istream& in);
Tensor read_vtxt(const std::filesystem::path& path);

// Portable float map. 1 channel ("Pf") or 3 channels ("PF"); written
// little-endian (negative scale), bottom row first as the format requires.
// Values are stored as float32.
void write_pfm(std::ostream& out, const Tensor& image);
void write_pfm(const std::filesystem::path& path, const Tensor& image);
// Returns (C, H, W) with row 0 at the top.
Tensor read_pfm(std::istream& in);
Tensor read_pfm(const std::filesystem::path& path);

// Dispatch on extension: .pfm or .vtxt.
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& t);

}  // namespace mapconv
