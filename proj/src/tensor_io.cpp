#include "mapconv/tensor_io.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "mapconv/binary_io.hpp"

namespace mapconv {

using detail::get_le;
using detail::put_le;

void write_vtxt(std::ostream& out, const Tensor& t) {
  if (t.rank() < 1) throw DimensionError("cannot write an empty tensor");
  out.write("VTXT", 4);
  put_le<std::uint32_t>(out, kVertexFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.channels()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.spatial_size()));
  for (const double v : t.values()) put_le<double>(out, v);
  if (!out) throw Error("failed writing VTXT tensor");
}

void write_vtxt(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_vtxt(out, t);
}

Tensor read_vtxt(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "VTXT") throw FormatError("not a VTXT file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVertexFormatVersion) throw FormatError("unsupported VTXT version " + std::to_string(version));
  const auto channels = get_le<std::uint32_t>(in);
  const auto count = get_le<std::uint64_t>(in);
  if (channels == 0 || count > (std::uint64_t{1} << 36)) throw FormatError("VTXT header dimensions out of range");
  std::vector<double> data(static_cast<std::size_t>(channels) * count);
  for (auto& v : data) v = get_le<double>(in);
  return Tensor({channels, static_cast<std::size_t>(count)}, std::move(data));
}

Tensor read_vtxt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_vtxt(in);
}

void write_pfm(std::ostream& out, const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw DimensionError("PFM holds (1|3, H, W) images, got " + image.shape_string());
  }
  const std::size_t channels = image.dim(0);
  const std::size_t height = image.dim(1);
  const std::size_t width = image.dim(2);
  out << (channels == 1 ? "Pf" : "PF") << '\n' << width << ' ' << height << '\n' << "-1.0" << '\n';
  for (std::size_t r = height; r-- > 0;) {
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t ch = 0; ch < channels; ++ch) {
        put_le<float>(out, static_cast<float>(image.at(ch, r * width + c)));
      }
    }
  }
  if (!out) throw Error("failed writing PFM image");
}

void write_pfm(const std::filesystem::path& path, const Tensor& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_pfm(out, image);
}

namespace {

std::string next_token(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw FormatError("truncated PFM header");
  return tok;
}

float get_be_float(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("unexpected end of PFM data");
  const std::uint32_t bits = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

Tensor read_pfm(std::istream& in) {
  const std::string kind = next_token(in);
  std::size_t channels = 0;
  if (kind == "Pf") {
    channels = 1;
  } else if (kind == "PF") {
    channels = 3;
  } else {
    throw FormatError("not a PFM file");
  }
  std::size_t width = 0;
  std::size_t height = 0;
  double scale = 0.0;
  try {
    width = std::stoul(next_token(in));
    height = std::stoul(next_token(in));
    scale = std::stod(next_token(in));
  } catch (const std::logic_error&) {
    throw FormatError("malformed PFM header");
  }
  if (width == 0 || height == 0 || scale == 0.0) throw FormatError("malformed PFM header");
  in.get();  // single whitespace byte before the raster
  const bool little = scale < 0.0;
  Tensor image({channels, height, width});
  for (std::size_t r = height; r-- > 0;) {
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t ch = 0; ch < channels; ++ch) {
        image.at(ch, r * width + c) = little ? get_le<float>(in) : get_be_float(in);
      }
    }
  }
  return image;
}

Tensor read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_pfm(in);
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".vtxt") return read_vtxt(path);
  throw ParameterError("unsupported tensor file extension '" + ext + "' (expected .pfm or .vtxt)");
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return write_pfm(path, t);
  if (ext == ".vtxt") return write_vtxt(path, t);
  throw ParameterError("unsupported tensor file extension '" + ext + "' (expected .pfm or .vtxt)");
}

}  // namespace mapconv
