#include "mapconv/map_io.hpp"

#include <fstream>

#include "mapconv/binary_io.hpp"

namespace mapconv {

using detail::get_le;
using detail::put_le;

void write_sample_map(std::ostream& out, const SampleMap& map) {
  out.write("MAPC", 4);
  put_le<std::uint32_t>(out, kMapFormatVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(map.n_in()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(map.n_out()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.k()));
  put_le<std::uint32_t>(out, 0);
  for (std::size_t s = 0; s < map.sample_count(); ++s) {
    const auto taps = map.sample(s);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(taps.size()));
    for (const auto& t : taps) {
      put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.index));
      put_le<double>(out, t.weight);
    }
  }
  if (!out) throw Error("failed writing sample map");
}

void write_sample_map(const std::filesystem::path& path, const SampleMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_sample_map(out, map);
}

SampleMap read_sample_map(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "MAPC") throw FormatError("not a MAPC file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kMapFormatVersion) {
    throw FormatError("unsupported MAPC version " + std::to_string(version));
  }
  const auto n_in = get_le<std::uint64_t>(in);
  const auto n_out = get_le<std::uint64_t>(in);
  const auto k = get_le<std::uint32_t>(in);
  if (get_le<std::uint32_t>(in) != 0) throw FormatError("MAPC reserved field must be zero");
  if (k == 0 || n_out > (std::uint64_t{1} << 40) || n_in > (std::uint64_t{1} << 40)) {
    throw FormatError("MAPC header dimensions out of range");
  }

  const std::size_t count = static_cast<std::size_t>(n_out) * k;
  std::vector<std::uint64_t> offsets;
  offsets.reserve(count + 1);
  offsets.push_back(0);
  std::vector<SampleTap> taps;
  for (std::size_t s = 0; s < count; ++s) {
    const auto c = get_le<std::uint8_t>(in);
    if (c > kMaxTaps) throw FormatError("MAPC record holds " + std::to_string(c) + " taps");
    for (int t = 0; t < c; ++t) {
      const auto index = get_le<std::uint64_t>(in);
      const auto weight = get_le<double>(in);
      taps.push_back({static_cast<std::int64_t>(index), weight});
    }
    offsets.push_back(taps.size());
  }
  return SampleMap(static_cast<std::int64_t>(n_in), static_cast<std::int64_t>(n_out), static_cast<int>(k),
                   std::move(offsets), std::move(taps), "mapc");
}

SampleMap read_sample_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_sample_map(in);
}

}  // namespace mapconv
