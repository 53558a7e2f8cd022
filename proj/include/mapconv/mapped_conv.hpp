#pragma once

#include <cstdint>
#include <vector>

#include "mapconv/sample_map.hpp"
#include "mapconv/tensor.hpp"

namespace mapconv {

// Kernel weights laid out (c_out, c_in, k) plus one bias per output channel.
template <typename T>
struct ConvParams {
  int c_in = 0;
  int c_out = 0;
  int k = 0;
  std::vector<T> weights;
  std::vector<T> bias;

  ConvParams() = default;
  ConvParams(int c_in, int c_out, int k);
  ConvParams(int c_in, int c_out, int k, std::vector<T> weights, std::vector<T> bias);

  // Seeded N(0, 1/(c_in*k)) weights and N(0, 1) bias.
  static ConvParams random(int c_in, int c_out, int k, std::uint64_t seed);

  T& weight(int co, int ci, int m) { return weights[(static_cast<std::size_t>(co) * c_in + ci) * k + m]; }
  const T& weight(int co, int ci, int m) const {
    return weights[(static_cast<std::size_t>(co) * c_in + ci) * k + m];
  }

  void validate() const;
};

template <typename T>
struct ParamGrads {
  std::vector<T> weights;
  std::vector<T> bias;
};

// Transpose of a sample map: for every input location, the (output, kernel
// index, weight) triples that read from it, in increasing (n, m) order. Lets
// col2im gather per input location instead of racing on scatter-adds.
class AdjointIndex {
 public:
  struct Entry {
    std::int64_t n;
    std::int32_t m;
    double weight;
  };

  explicit AdjointIndex(const SampleMap& map);

  std::int64_t n_in() const { return static_cast<std::int64_t>(offsets_.size()) - 1; }
  std::span<const Entry> bucket(std::int64_t i) const {
    return {entries_.data() + offsets_[i], entries_.data() + offsets_[i + 1]};
  }
  // Largest number of reads any single input location receives.
  std::size_t max_fan_in() const;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<Entry> entries_;
};

// input (c_in, n_in...) -> columns (c_in * k, n_out); row c*k + m, column n
// holds the interpolated read of channel c at map[n, m].
template <typename T>
BasicTensor<T> mapped_im2col(const BasicTensor<T>& input, const SampleMap& map);

// Adjoint of mapped_im2col: columns (c * k, n_out) -> (c, n_in).
template <typename T>
BasicTensor<T> mapped_col2im(const BasicTensor<T>& cols, const SampleMap& map, const AdjointIndex& adjoint);

// output[co, n] = bias[co] + sum_{ci, m} w[co, ci, m] * D(input[ci], map[n, m])
template <typename T>
BasicTensor<T> mapped_conv_forward(const BasicTensor<T>& input, const SampleMap& map,
                                   const ConvParams<T>& params);

template <typename T>
BasicTensor<T> mapped_conv_backward_input(const BasicTensor<T>& grad_out, const SampleMap& map,
                                          const ConvParams<T>& params);
template <typename T>
BasicTensor<T> mapped_conv_backward_input(const BasicTensor<T>& grad_out, const SampleMap& map,
                                          const AdjointIndex& adjoint, const ConvParams<T>& params);

template <typename T>
ParamGrads<T> mapped_conv_backward_params(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                          const SampleMap& map);

// Single-threaded reference kernels; the parallel versions above must agree
// with these (bit-for-bit for im2col/col2im, to rounding for the GEMM path).
namespace serial {

template <typename T>
BasicTensor<T> mapped_im2col(const BasicTensor<T>& input, const SampleMap& map);

// Scatter-add in sample order.
template <typename T>
BasicTensor<T> mapped_col2im(const BasicTensor<T>& cols, const SampleMap& map);

template <typename T>
BasicTensor<T> mapped_conv_forward(const BasicTensor<T>& input, const SampleMap& map,
                                   const ConvParams<T>& params);
template <typename T>
BasicTensor<T> mapped_conv_backward_input(const BasicTensor<T>& grad_out, const SampleMap& map,
                                          const ConvParams<T>& params);
template <typename T>
ParamGrads<T> mapped_conv_backward_params(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                          const SampleMap& map);

}  // namespace serial

// Throws InvalidCoordinate on the first NaN/Inf.
template <typename T>
void require_finite(const BasicTensor<T>& t, const char* what);

}  // namespace mapconv
