#include "mapconv/mapped_conv.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mapconv/gemm.hpp"

namespace mapconv {

template <typename T>
ConvParams<T>::ConvParams(int c_in, int c_out, int k)
    : c_in(c_in),
      c_out(c_out),
      k(k),
      weights(static_cast<std::size_t>(std::max(c_out, 0)) * std::max(c_in, 0) * std::max(k, 0), T(0)),
      bias(static_cast<std::size_t>(std::max(c_out, 0)), T(0)) {
  validate();
}

template <typename T>
ConvParams<T>::ConvParams(int c_in, int c_out, int k, std::vector<T> weights, std::vector<T> bias)
    : c_in(c_in), c_out(c_out), k(k), weights(std::move(weights)), bias(std::move(bias)) {
  validate();
}

template <typename T>
ConvParams<T> ConvParams<T>::random(int c_in, int c_out, int k, std::uint64_t seed) {
  ConvParams p(c_in, c_out, k);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> w(0.0, 1.0 / std::sqrt(static_cast<double>(c_in) * k));
  std::normal_distribution<double> b(0.0, 1.0);
  for (auto& v : p.weights) v = static_cast<T>(w(rng));
  for (auto& v : p.bias) v = static_cast<T>(b(rng));
  return p;
}

template <typename T>
void ConvParams<T>::validate() const {
  if (c_in < 1 || c_out < 1 || k < 1) throw ParameterError("channel counts and kernel size must be positive");
  if (weights.size() != static_cast<std::size_t>(c_out) * c_in * k) {
    throw DimensionError("weight array has " + std::to_string(weights.size()) + " entries, expected c_out*c_in*k = " +
                         std::to_string(static_cast<std::size_t>(c_out) * c_in * k));
  }
  if (bias.size() != static_cast<std::size_t>(c_out)) {
    throw DimensionError("bias has " + std::to_string(bias.size()) + " entries, expected " + std::to_string(c_out));
  }
}

template <typename T>
void require_finite(const BasicTensor<T>& t, const char* what) {
  for (const T v : t.values()) {
    if (!std::isfinite(v)) throw InvalidCoordinate(std::string(what) + " contains a non-finite value");
  }
}

AdjointIndex::AdjointIndex(const SampleMap& map) : offsets_(static_cast<std::size_t>(map.n_in()) + 1, 0) {
  for (const auto& t : map.taps()) ++offsets_[static_cast<std::size_t>(t.index) + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  entries_.resize(map.taps().size());
  std::vector<std::uint64_t> cursor(offsets_.begin(), offsets_.end() - 1);
  const int k = map.k();
  for (std::int64_t n = 0; n < map.n_out(); ++n) {
    for (int m = 0; m < k; ++m) {
      for (const auto& t : map.sample(n, m)) {
        entries_[cursor[static_cast<std::size_t>(t.index)]++] = {n, m, t.weight};
      }
    }
  }
}

std::size_t AdjointIndex::max_fan_in() const {
  std::size_t best = 0;
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) best = std::max<std::size_t>(best, offsets_[i + 1] - offsets_[i]);
  return best;
}

namespace {

template <typename T>
void check_input(const BasicTensor<T>& input, const SampleMap& map) {
  if (input.rank() < 2) throw DimensionError("input must be channel-first with at least 2 axes, got " + input.shape_string());
  if (static_cast<std::int64_t>(input.spatial_size()) != map.n_in()) {
    throw DimensionError("input spatial size " + std::to_string(input.spatial_size()) + " (shape " +
                         input.shape_string() + ") does not match map n_in " + std::to_string(map.n_in()));
  }
}

template <typename T>
void check_params(const SampleMap& map, const ConvParams<T>& params) {
  params.validate();
  if (params.k != map.k()) {
    throw DimensionError("kernel size " + std::to_string(params.k) + " does not match map k " + std::to_string(map.k()));
  }
}

template <typename T>
void check_grad_out(const BasicTensor<T>& grad_out, const SampleMap& map, int c_out) {
  if (grad_out.rank() < 2 || static_cast<int>(grad_out.channels()) != c_out ||
      static_cast<std::int64_t>(grad_out.spatial_size()) != map.n_out()) {
    throw DimensionError("output gradient shape " + grad_out.shape_string() + " does not match (" +
                         std::to_string(c_out) + ", " + std::to_string(map.n_out()) + ")");
  }
}

template <typename T>
void check_cols(const BasicTensor<T>& cols, const SampleMap& map) {
  if (cols.rank() != 2 || cols.dim(0) % static_cast<std::size_t>(map.k()) != 0 ||
      static_cast<std::int64_t>(cols.dim(1)) != map.n_out()) {
    throw DimensionError("column matrix shape " + cols.shape_string() + " does not match map (k=" +
                         std::to_string(map.k()) + ", n_out=" + std::to_string(map.n_out()) + ")");
  }
}

template <typename T>
void add_bias(BasicTensor<T>& out, const std::vector<T>& bias) {
  const std::size_t n = out.spatial_size();
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(bias.size()); ++c) {
    T* row = out.data() + static_cast<std::size_t>(c) * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += bias[static_cast<std::size_t>(c)];
  }
}

template <typename T>
std::vector<T> row_sums(const BasicTensor<T>& t) {
  std::vector<T> sums(t.channels(), T(0));
  for (std::size_t c = 0; c < t.channels(); ++c) {
    T acc = T(0);
    for (const T v : t.channel(c)) acc += v;
    sums[c] = acc;
  }
  return sums;
}

}  // namespace

template <typename T>
BasicTensor<T> mapped_im2col(const BasicTensor<T>& input, const SampleMap& map) {
  check_input(input, map);
  const std::size_t channels = input.channels();
  const std::size_t n_in = static_cast<std::size_t>(map.n_in());
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  const int k = map.k();
  BasicTensor<T> cols({channels * k, n_out});
  const T* src = input.data();
  T* dst = cols.data();
  const std::uint64_t* offsets = map.offsets().data();
  const SampleTap* taps = map.taps().data();

#pragma omp parallel for schedule(static)
  for (std::int64_t n = 0; n < static_cast<std::int64_t>(n_out); ++n) {
    for (int m = 0; m < k; ++m) {
      const std::size_t s = static_cast<std::size_t>(n) * k + m;
      const SampleTap* first = taps + offsets[s];
      const SampleTap* last = taps + offsets[s + 1];
      for (std::size_t c = 0; c < channels; ++c) {
        const T* plane = src + c * n_in;
        T acc = T(0);
        for (const SampleTap* t = first; t != last; ++t) acc += static_cast<T>(t->weight) * plane[t->index];
        dst[(c * k + m) * n_out + static_cast<std::size_t>(n)] = acc;
      }
    }
  }
  return cols;
}

template <typename T>
BasicTensor<T> mapped_col2im(const BasicTensor<T>& cols, const SampleMap& map, const AdjointIndex& adjoint) {
  check_cols(cols, map);
  if (adjoint.n_in() != map.n_in()) throw DimensionError("adjoint index was built for a different map");
  const int k = map.k();
  const std::size_t channels = cols.dim(0) / k;
  const std::size_t n_in = static_cast<std::size_t>(map.n_in());
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  BasicTensor<T> out({channels, n_in});
  const T* src = cols.data();
  T* dst = out.data();

  // Each worker owns a disjoint set of input locations, and each location
  // accumulates its bucket in (n, m) order, identical to serial::mapped_col2im.
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_in); ++i) {
    const auto bucket = adjoint.bucket(i);
    for (std::size_t c = 0; c < channels; ++c) {
      T acc = T(0);
      for (const auto& e : bucket) {
        acc += static_cast<T>(e.weight) * src[(c * k + static_cast<std::size_t>(e.m)) * n_out + static_cast<std::size_t>(e.n)];
      }
      dst[c * n_in + static_cast<std::size_t>(i)] = acc;
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> mapped_conv_forward(const BasicTensor<T>& input, const SampleMap& map, const ConvParams<T>& params) {
  check_input(input, map);
  check_params(map, params);
  if (static_cast<int>(input.channels()) != params.c_in) {
    throw DimensionError("input has " + std::to_string(input.channels()) + " channels, kernel expects " +
                         std::to_string(params.c_in));
  }
  require_finite(input, "input");
  const BasicTensor<T> cols = mapped_im2col(input, map);
  const std::size_t ck = static_cast<std::size_t>(params.c_in) * params.k;
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  BasicTensor<T> out({static_cast<std::size_t>(params.c_out), n_out});
  gemm<T>(Trans::no, Trans::no, params.c_out, n_out, ck, T(1), params.weights.data(), ck, cols.data(), n_out, T(0),
          out.data(), n_out);
  add_bias(out, params.bias);
  return out;
}

template <typename T>
BasicTensor<T> mapped_conv_backward_input(const BasicTensor<T>& grad_out, const SampleMap& map,
                                          const AdjointIndex& adjoint, const ConvParams<T>& params) {
  check_params(map, params);
  check_grad_out(grad_out, map, params.c_out);
  const std::size_t ck = static_cast<std::size_t>(params.c_in) * params.k;
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  BasicTensor<T> grad_cols({ck, n_out});
  gemm<T>(Trans::yes, Trans::no, ck, n_out, params.c_out, T(1), params.weights.data(), ck, grad_out.data(), n_out,
          T(0), grad_cols.data(), n_out);
  return mapped_col2im(grad_cols, map, adjoint);
}

template <typename T>
BasicTensor<T> mapped_conv_backward_input(const BasicTensor<T>& grad_out, const SampleMap& map,
                                          const ConvParams<T>& params) {
  return mapped_conv_backward_input(grad_out, map, AdjointIndex(map), params);
}

template <typename T>
ParamGrads<T> mapped_conv_backward_params(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                          const SampleMap& map) {
  check_input(input, map);
  if (grad_out.rank() < 2 || static_cast<std::int64_t>(grad_out.spatial_size()) != map.n_out()) {
    throw DimensionError("output gradient shape " + grad_out.shape_string() + " does not match map n_out " +
                         std::to_string(map.n_out()));
  }
  const BasicTensor<T> cols = mapped_im2col(input, map);
  const std::size_t c_out = grad_out.channels();
  const std::size_t ck = cols.dim(0);
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  ParamGrads<T> grads{std::vector<T>(c_out * ck), row_sums(grad_out)};
  gemm<T>(Trans::no, Trans::yes, c_out, ck, n_out, T(1), grad_out.data(), n_out, cols.data(), n_out, T(0),
          grads.weights.data(), ck);
  return grads;
}

namespace serial {

template <typename T>
BasicTensor<T> mapped_im2col(const BasicTensor<T>& input, const SampleMap& map) {
  check_input(input, map);
  const std::size_t channels = input.channels();
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  const int k = map.k();
  BasicTensor<T> cols({channels * k, n_out});
  for (std::size_t c = 0; c < channels; ++c) {
    for (int m = 0; m < k; ++m) {
      for (std::size_t n = 0; n < n_out; ++n) {
        T acc = T(0);
        for (const auto& t : map.sample(static_cast<std::int64_t>(n), m)) {
          acc += static_cast<T>(t.weight) * input.at(c, static_cast<std::size_t>(t.index));
        }
        cols[(c * k + m) * n_out + n] = acc;
      }
    }
  }
  return cols;
}

template <typename T>
BasicTensor<T> mapped_col2im(const BasicTensor<T>& cols, const SampleMap& map) {
  check_cols(cols, map);
  const int k = map.k();
  const std::size_t channels = cols.dim(0) / k;
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  BasicTensor<T> out({channels, static_cast<std::size_t>(map.n_in())});
  for (std::size_t n = 0; n < n_out; ++n) {
    for (int m = 0; m < k; ++m) {
      for (const auto& t : map.sample(static_cast<std::int64_t>(n), m)) {
        for (std::size_t c = 0; c < channels; ++c) {
          out.at(c, static_cast<std::size_t>(t.index)) += static_cast<T>(t.weight) * cols[(c * k + m) * n_out + n];
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> mapped_conv_forward(const BasicTensor<T>& input, const SampleMap& map, const ConvParams<T>& params) {
  check_input(input, map);
  check_params(map, params);
  if (static_cast<int>(input.channels()) != params.c_in) {
    throw DimensionError("input has " + std::to_string(input.channels()) + " channels, kernel expects " +
                         std::to_string(params.c_in));
  }
  require_finite(input, "input");
  const BasicTensor<T> cols = serial::mapped_im2col(input, map);
  const std::size_t ck = static_cast<std::size_t>(params.c_in) * params.k;
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  BasicTensor<T> out({static_cast<std::size_t>(params.c_out), n_out});
  serial::gemm<T>(Trans::no, Trans::no, params.c_out, n_out, ck, T(1), params.weights.data(), ck, cols.data(),
                  n_out, T(0), out.data(), n_out);
  for (int c = 0; c < params.c_out; ++c)
    for (auto& v : out.channel(static_cast<std::size_t>(c))) v += params.bias[static_cast<std::size_t>(c)];
  return out;
}

template <typename T>
BasicTensor<T> mapped_conv_backward_input(const BasicTensor<T>& grad_out, const SampleMap& map,
                                          const ConvParams<T>& params) {
  check_params(map, params);
  check_grad_out(grad_out, map, params.c_out);
  const std::size_t ck = static_cast<std::size_t>(params.c_in) * params.k;
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  BasicTensor<T> grad_cols({ck, n_out});
  serial::gemm<T>(Trans::yes, Trans::no, ck, n_out, params.c_out, T(1), params.weights.data(), ck,
                  grad_out.data(), n_out, T(0), grad_cols.data(), n_out);
  return serial::mapped_col2im(grad_cols, map);
}

template <typename T>
ParamGrads<T> mapped_conv_backward_params(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                          const SampleMap& map) {
  check_input(input, map);
  if (grad_out.rank() < 2 || static_cast<std::int64_t>(grad_out.spatial_size()) != map.n_out()) {
    throw DimensionError("output gradient shape " + grad_out.shape_string() + " does not match map n_out " +
                         std::to_string(map.n_out()));
  }
  const BasicTensor<T> cols = serial::mapped_im2col(input, map);
  const std::size_t c_out = grad_out.channels();
  const std::size_t ck = cols.dim(0);
  const std::size_t n_out = static_cast<std::size_t>(map.n_out());
  ParamGrads<T> grads{std::vector<T>(c_out * ck), row_sums(grad_out)};
  serial::gemm<T>(Trans::no, Trans::yes, c_out, ck, n_out, T(1), grad_out.data(), n_out, cols.data(), n_out, T(0),
                  grads.weights.data(), ck);
  return grads;
}

}  // namespace serial

#define MAPCONV_INSTANTIATE(T)                                                                                    \
  template struct ConvParams<T>;                                                                                  \
  template void require_finite<T>(const BasicTensor<T>&, const char*);                                            \
  template BasicTensor<T> mapped_im2col<T>(const BasicTensor<T>&, const SampleMap&);                              \
  template BasicTensor<T> mapped_col2im<T>(const BasicTensor<T>&, const SampleMap&, const AdjointIndex&);         \
  template BasicTensor<T> mapped_conv_forward<T>(const BasicTensor<T>&, const SampleMap&, const ConvParams<T>&);  \
  template BasicTensor<T> mapped_conv_backward_input<T>(const BasicTensor<T>&, const SampleMap&,                  \
                                                        const ConvParams<T>&);                                    \
  template BasicTensor<T> mapped_conv_backward_input<T>(const BasicTensor<T>&, const SampleMap&,                  \
                                                        const AdjointIndex&, const ConvParams<T>&);               \
  template ParamGrads<T> mapped_conv_backward_params<T>(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                                        const SampleMap&);                                        \
  template BasicTensor<T> serial::mapped_im2col<T>(const BasicTensor<T>&, const SampleMap&);                      \
  template BasicTensor<T> serial::mapped_col2im<T>(const BasicTensor<T>&, const SampleMap&);                      \
  template BasicTensor<T> serial::mapped_conv_forward<T>(const BasicTensor<T>&, const SampleMap&,                 \
                                                         const ConvParams<T>&);                                   \
  template BasicTensor<T> serial::mapped_conv_backward_input<T>(const BasicTensor<T>&, const SampleMap&,          \
                                                                const ConvParams<T>&);                            \
  template ParamGrads<T> serial::mapped_conv_backward_params<T>(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                                                const SampleMap&);

MAPCONV_INSTANTIATE(float)
MAPCONV_INSTANTIATE(double)

#undef MAPCONV_INSTANTIATE

}  // namespace mapconv
