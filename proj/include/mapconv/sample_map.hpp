#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mapconv {

inline constexpr std::size_t kMaxTaps = 4;

// One interpolation term: weight applied to a flattened input location.
struct SampleTap {
  std::int64_t index = 0;
  double weight = 0.0;

  friend bool operator==(const SampleTap&, const SampleTap&) = default;
};

// Interpolated read of the input at one real-valued location. Holds at most
// kMaxTaps taps; an empty sample reads as zero.
class Sample {
 public:
  Sample() = default;
  Sample(std::initializer_list<SampleTap> taps);

  void push(SampleTap tap);
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  const SampleTap* begin() const { return taps_.data(); }
  const SampleTap* end() const { return taps_.data() + count_; }
  const SampleTap& operator[](std::size_t i) const { return taps_[i]; }
  SampleTap& operator[](std::size_t i) { return taps_[i]; }

  double weight_sum() const;

 private:
  std::array<SampleTap, kMaxTaps> taps_{};
  std::uint8_t count_ = 0;
};

struct RowCol {
  double row = 0.0;
  double col = 0.0;
};

enum class Interpolation { nearest, bilinear };

const char* to_string(Interpolation interp);
Interpolation parse_interpolation(const std::string& name);

struct KernelSpec {
  int height = 1;
  int width = 1;
  // Angular distance between adjacent kernel taps in radians. Spherical
  // generators substitute their own default when unset.
  std::optional<double> delta;

  int size() const { return height * width; }
  void validate() const;
};

struct Pair {
  int h = 1;
  int w = 1;
};

// Adjacency list realizing a mapping function: for every output location n
// and kernel index m, the interpolated input read D(g, M[n, m]).
//
// Taps are stored compressed (offset table plus flat tap array), so a nearest
// map costs one tap per sample. Immutable once constructed.
class SampleMap {
 public:
  SampleMap() = default;

  // `samples` is n_out * k entries in output-major order.
  SampleMap(std::int64_t n_in, std::int64_t n_out, int k, std::span<const Sample> samples,
            std::string descriptor = {});

  // Raw compressed form, as read from disk. Validated.
  SampleMap(std::int64_t n_in, std::int64_t n_out, int k, std::vector<std::uint64_t> offsets,
            std::vector<SampleTap> taps, std::string descriptor);

  std::int64_t n_in() const { return n_in_; }
  std::int64_t n_out() const { return n_out_; }
  int k() const { return k_; }
  std::size_t sample_count() const { return static_cast<std::size_t>(n_out_) * k_; }
  const std::string& descriptor() const { return descriptor_; }

  std::span<const SampleTap> sample(std::int64_t n, int m) const {
    return sample(static_cast<std::size_t>(n) * k_ + m);
  }
  std::span<const SampleTap> sample(std::size_t flat) const {
    return {taps_.data() + offsets_[flat], taps_.data() + offsets_[flat + 1]};
  }

  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<SampleTap>& taps() const { return taps_; }

  // histogram[c] = number of samples holding c taps.
  std::array<std::size_t, kMaxTaps + 1> tap_histogram() const;

  // Compares the sampling structure; the descriptor is provenance only.
  friend bool operator==(const SampleMap& a, const SampleMap& b) {
    return a.n_in_ == b.n_in_ && a.n_out_ == b.n_out_ && a.k_ == b.k_ && a.offsets_ == b.offsets_ &&
           a.taps_ == b.taps_;
  }

 private:
  void validate() const;

  std::int64_t n_in_ = 0;
  std::int64_t n_out_ = 0;
  int k_ = 0;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<SampleTap> taps_;
  std::string descriptor_;
};

// Nearest-neighbour read at `point` on a height x width lattice, rounding
// half away from zero. Out-of-bounds reads are empty (zero padding).
Sample nearest_tap(RowCol point, int height, int width);

// Bilinear read; corners that fall outside the lattice are dropped, so a
// clipped sample has weight sum below one.
Sample bilinear_taps(RowCol point, int height, int width);

// Reads on a spherical (equirectangular or cube-face) lattice: columns wrap
// around when `wrap_cols` is set, otherwise they are clamped like rows.
// Rows are clamped to the lattice, so the weights always sum to one.
Sample nearest_tap_clamped(RowCol point, int height, int width, bool wrap_cols);
Sample bilinear_taps_clamped(RowCol point, int height, int width, bool wrap_cols);

Sample interpolate(Interpolation interp, RowCol point, int height, int width);

// Output extent of a strided, padded, dilated grid convolution along one axis.
int grid_output_extent(int input, int kernel, int stride, int padding, int dilation);

SampleMap make_grid_map(int height, int width, const KernelSpec& kernel, Pair stride = {1, 1},
                        Pair padding = {0, 0}, Pair dilation = {1, 1});

// Same-size grid map whose tap indices are pushed through one seeded uniform
// permutation of the spatial domain. With bilinear interpolation each sample
// instead reads at its permuted pixel plus a seeded sub-pixel offset.
SampleMap make_shuffle_map(int height, int width, const KernelSpec& kernel, std::uint64_t seed,
                           Interpolation interp = Interpolation::nearest);

}  // namespace mapconv
