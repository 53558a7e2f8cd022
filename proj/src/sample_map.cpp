#include "mapconv/sample_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mapconv/errors.hpp"

namespace mapconv {

Sample::Sample(std::initializer_list<SampleTap> taps) {
  for (const auto& t : taps) push(t);
}

void Sample::push(SampleTap tap) {
  if (count_ == kMaxTaps) throw ParameterError("sample already holds the maximum number of taps");
  taps_[count_++] = tap;
}

double Sample::weight_sum() const {
  double s = 0.0;
  for (const auto& t : *this) s += t.weight;
  return s;
}

const char* to_string(Interpolation interp) {
  return interp == Interpolation::nearest ? "nearest" : "bilinear";
}

Interpolation parse_interpolation(const std::string& name) {
  if (name == "nearest") return Interpolation::nearest;
  if (name == "bilinear") return Interpolation::bilinear;
  throw ParameterError("unknown interpolation '" + name + "' (expected nearest or bilinear)");
}

void KernelSpec::validate() const {
  if (height < 1 || width < 1) {
    throw ParameterError("kernel dimensions must be positive, got " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  if (delta && !(*delta > 0.0 && std::isfinite(*delta))) {
    throw ParameterError("kernel angular pitch must be positive and finite");
  }
}

SampleMap::SampleMap(std::int64_t n_in, std::int64_t n_out, int k, std::span<const Sample> samples,
                     std::string descriptor)
    : n_in_(n_in), n_out_(n_out), k_(k), descriptor_(std::move(descriptor)) {
  if (n_in < 0 || n_out < 0 || k < 1) throw DimensionError("invalid sample map dimensions");
  if (samples.size() != sample_count()) {
    throw DimensionError("sample map expects " + std::to_string(sample_count()) + " samples, got " +
                         std::to_string(samples.size()));
  }
  offsets_.resize(samples.size() + 1);
  offsets_[0] = 0;
  for (std::size_t s = 0; s < samples.size(); ++s) offsets_[s + 1] = offsets_[s] + samples[s].size();
  taps_.reserve(offsets_.back());
  for (const auto& sample : samples) taps_.insert(taps_.end(), sample.begin(), sample.end());
  validate();
}

SampleMap::SampleMap(std::int64_t n_in, std::int64_t n_out, int k, std::vector<std::uint64_t> offsets,
                     std::vector<SampleTap> taps, std::string descriptor)
    : n_in_(n_in),
      n_out_(n_out),
      k_(k),
      offsets_(std::move(offsets)),
      taps_(std::move(taps)),
      descriptor_(std::move(descriptor)) {
  if (n_in < 0 || n_out < 0 || k < 1) throw DimensionError("invalid sample map dimensions");
  validate();
}

void SampleMap::validate() const {
  if (offsets_.size() != sample_count() + 1 || offsets_.front() != 0 || offsets_.back() != taps_.size()) {
    throw DimensionError("sample map offset table is inconsistent with its tap array");
  }
  for (std::size_t s = 0; s < sample_count(); ++s) {
    if (offsets_[s + 1] < offsets_[s] || offsets_[s + 1] - offsets_[s] > kMaxTaps) {
      throw DimensionError("sample " + std::to_string(s) + " holds more than 4 taps");
    }
  }
  for (const auto& t : taps_) {
    if (t.index < 0 || t.index >= n_in_) {
      throw DimensionError("tap index " + std::to_string(t.index) + " outside input of size " +
                           std::to_string(n_in_));
    }
    if (!std::isfinite(t.weight)) throw InvalidCoordinate("non-finite tap weight");
  }
}

std::array<std::size_t, kMaxTaps + 1> SampleMap::tap_histogram() const {
  std::array<std::size_t, kMaxTaps + 1> hist{};
  for (std::size_t s = 0; s < sample_count(); ++s) ++hist[offsets_[s + 1] - offsets_[s]];
  return hist;
}

namespace {

void require_finite(RowCol p) {
  if (!std::isfinite(p.row) || !std::isfinite(p.col)) {
    throw InvalidCoordinate("sampling coordinate is not finite");
  }
}

void require_lattice(int height, int width) {
  if (height < 1 || width < 1) throw ParameterError("lattice dimensions must be positive");
}

std::int64_t wrap(std::int64_t c, int width) {
  const std::int64_t m = c % width;
  return m < 0 ? m + width : m;
}

// Adds a tap, merging into an existing tap on the same index.
void accumulate(Sample& s, std::int64_t index, double weight) {
  if (weight == 0.0) return;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].index == index) {
      s[i].weight += weight;
      return;
    }
  }
  s.push({index, weight});
}

}  // namespace

Sample nearest_tap(RowCol point, int height, int width) {
  require_finite(point);
  require_lattice(height, width);
  const double r = std::round(point.row);
  const double c = std::round(point.col);
  Sample s;
  if (r >= 0 && r < height && c >= 0 && c < width) {
    s.push({static_cast<std::int64_t>(r) * width + static_cast<std::int64_t>(c), 1.0});
  }
  return s;
}

Sample bilinear_taps(RowCol point, int height, int width) {
  require_finite(point);
  require_lattice(height, width);
  Sample s;
  // Entirely outside the support of every corner.
  if (point.row <= -1.0 || point.row >= height || point.col <= -1.0 || point.col >= width) return s;

  const double r0 = std::floor(point.row);
  const double c0 = std::floor(point.col);
  const double fr = point.row - r0;
  const double fc = point.col - c0;
  const auto ir = static_cast<std::int64_t>(r0);
  const auto ic = static_cast<std::int64_t>(c0);
  const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
  const std::int64_t dr[4] = {0, 0, 1, 1};
  const std::int64_t dc[4] = {0, 1, 0, 1};
  for (int q = 0; q < 4; ++q) {
    const std::int64_t r = ir + dr[q];
    const std::int64_t c = ic + dc[q];
    if (w[q] == 0.0 || r < 0 || r >= height || c < 0 || c >= width) continue;
    s.push({r * width + c, w[q]});
  }
  return s;
}

Sample nearest_tap_clamped(RowCol point, int height, int width, bool wrap_cols) {
  require_finite(point);
  require_lattice(height, width);
  const auto r = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::round(point.row)), 0, height - 1);
  auto c = static_cast<std::int64_t>(std::round(point.col));
  c = wrap_cols ? wrap(c, width) : std::clamp<std::int64_t>(c, 0, width - 1);
  return Sample{{r * width + c, 1.0}};
}

Sample bilinear_taps_clamped(RowCol point, int height, int width, bool wrap_cols) {
  require_finite(point);
  require_lattice(height, width);
  const double row = std::clamp(point.row, 0.0, static_cast<double>(height - 1));
  const double col = wrap_cols ? point.col : std::clamp(point.col, 0.0, static_cast<double>(width - 1));
  const double r0 = std::floor(row);
  const double c0 = std::floor(col);
  const double fr = row - r0;
  const double fc = col - c0;
  const auto ir = static_cast<std::int64_t>(r0);
  const auto ic = static_cast<std::int64_t>(c0);
  const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
  const std::int64_t dr[4] = {0, 0, 1, 1};
  const std::int64_t dc[4] = {0, 1, 0, 1};
  Sample s;
  for (int q = 0; q < 4; ++q) {
    if (w[q] == 0.0) continue;
    const std::int64_t r = std::min<std::int64_t>(ir + dr[q], height - 1);
    std::int64_t c = ic + dc[q];
    c = wrap_cols ? wrap(c, width) : std::min<std::int64_t>(c, width - 1);
    accumulate(s, r * width + c, w[q]);
  }
  return s;
}

Sample interpolate(Interpolation interp, RowCol point, int height, int width) {
  return interp == Interpolation::nearest ? nearest_tap(point, height, width)
                                          : bilinear_taps(point, height, width);
}

int grid_output_extent(int input, int kernel, int stride, int padding, int dilation) {
  const int span = input + 2 * padding - dilation * (kernel - 1) - 1;
  if (span < 0) return 0;
  return span / stride + 1;
}

SampleMap make_grid_map(int height, int width, const KernelSpec& kernel, Pair stride, Pair padding,
                        Pair dilation) {
  kernel.validate();
  if (height < 1 || width < 1 || stride.h < 1 || stride.w < 1 || dilation.h < 1 || dilation.w < 1 ||
      padding.h < 0 || padding.w < 0) {
    throw ParameterError("grid map requires positive size/stride/dilation and non-negative padding");
  }
  const int out_h = grid_output_extent(height, kernel.height, stride.h, padding.h, dilation.h);
  const int out_w = grid_output_extent(width, kernel.width, stride.w, padding.w, dilation.w);
  if (out_h < 1 || out_w < 1) throw DimensionError("kernel is larger than the padded input");

  const int k = kernel.size();
  std::vector<Sample> samples(static_cast<std::size_t>(out_h) * out_w * k);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const std::size_t n = static_cast<std::size_t>(oy) * out_w + ox;
      for (int i = 0; i < kernel.height; ++i) {
        for (int j = 0; j < kernel.width; ++j) {
          const int r = oy * stride.h - padding.h + i * dilation.h;
          const int c = ox * stride.w - padding.w + j * dilation.w;
          if (r < 0 || r >= height || c < 0 || c >= width) continue;
          samples[n * k + i * kernel.width + j].push({static_cast<std::int64_t>(r) * width + c, 1.0});
        }
      }
    }
  }
  std::string desc = "grid h=" + std::to_string(height) + " w=" + std::to_string(width) +
                     " kh=" + std::to_string(kernel.height) + " kw=" + std::to_string(kernel.width) +
                     " stride=" + std::to_string(stride.h) + "," + std::to_string(stride.w) +
                     " pad=" + std::to_string(padding.h) + "," + std::to_string(padding.w) +
                     " dilation=" + std::to_string(dilation.h) + "," + std::to_string(dilation.w) +
                     " out=" + std::to_string(out_h) + "x" + std::to_string(out_w);
  return SampleMap(static_cast<std::int64_t>(height) * width, static_cast<std::int64_t>(out_h) * out_w, k,
                   samples, std::move(desc));
}

SampleMap make_shuffle_map(int height, int width, const KernelSpec& kernel, std::uint64_t seed,
                           Interpolation interp) {
  kernel.validate();
  if (height < 1 || width < 1) throw ParameterError("shuffle map requires positive dimensions");
  const std::int64_t n = static_cast<std::int64_t>(height) * width;
  const int k = kernel.size();

  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), std::int64_t{0});
  for (std::int64_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::int64_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  std::uniform_real_distribution<double> frac(0.0, 1.0);

  // "Same" window placement: top-left offset (k-1)/2, which is the symmetric
  // padding for odd kernels.
  const int top = (kernel.height - 1) / 2;
  const int left = (kernel.width - 1) / 2;
  std::vector<Sample> samples(static_cast<std::size_t>(n) * k);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t out = static_cast<std::size_t>(r) * width + c;
      for (int i = 0; i < kernel.height; ++i) {
        for (int j = 0; j < kernel.width; ++j) {
          const int sr = r - top + i;
          const int sc = c - left + j;
          if (sr < 0 || sr >= height || sc < 0 || sc >= width) continue;
          const std::int64_t target = perm[static_cast<std::size_t>(sr) * width + sc];
          Sample& s = samples[out * k + i * kernel.width + j];
          if (interp == Interpolation::nearest) {
            s.push({target, 1.0});
          } else {
            const RowCol p{static_cast<double>(target / width) + frac(rng),
                           static_cast<double>(target % width) + frac(rng)};
            s = bilinear_taps(p, height, width);
          }
        }
      }
    }
  }
  std::string desc = "shuffle h=" + std::to_string(height) + " w=" + std::to_string(width) +
                     " kh=" + std::to_string(kernel.height) + " kw=" + std::to_string(kernel.width) +
                     " seed=" + std::to_string(seed) + " interp=" + to_string(interp);
  return SampleMap(n, n, k, samples, std::move(desc));
}

}  // namespace mapconv
