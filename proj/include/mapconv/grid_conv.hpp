#pragma once

#include "mapconv/mapped_conv.hpp"
#include "mapconv/sample_map.hpp"
#include "mapconv/tensor.hpp"

namespace mapconv {

// Classic strided / padded / dilated cross-correlation geometry.
struct GridGeometry {
  int height = 1;
  int width = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  Pair stride{1, 1};
  Pair padding{0, 0};
  Pair dilation{1, 1};

  int out_h() const { return grid_output_extent(height, kernel_h, stride.h, padding.h, dilation.h); }
  int out_w() const { return grid_output_extent(width, kernel_w, stride.w, padding.w, dilation.w); }
  int k() const { return kernel_h * kernel_w; }
  void validate() const;
};

// Dense im2col with no sample-map indirection: (C, H, W) -> (C*k, out_h*out_w).
template <typename T>
BasicTensor<T> grid_im2col(const BasicTensor<T>& input, const GridGeometry& geom);

// Adjoint of grid_im2col: (C*k, out_h*out_w) -> (C, H*W).
template <typename T>
BasicTensor<T> grid_col2im(const BasicTensor<T>& cols, const GridGeometry& geom);

// Zero-padded cross-correlation via dense im2col + GEMM. Returns
// (c_out, out_h, out_w). Baseline for benchmarks and the equivalence oracle
// for make_grid_map.
template <typename T>
BasicTensor<T> grid_conv_reference(const BasicTensor<T>& input, const ConvParams<T>& params, const GridGeometry& geom);

template <typename T>
BasicTensor<T> grid_conv_backward_input(const BasicTensor<T>& grad_out, const ConvParams<T>& params,
                                        const GridGeometry& geom);

template <typename T>
ParamGrads<T> grid_conv_backward_params(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                        const GridGeometry& geom);

}  // namespace mapconv
