#include "mapconv/grid_conv.hpp"

#include <string>

#include "mapconv/gemm.hpp"

namespace mapconv {

void GridGeometry::validate() const {
  if (height < 1 || width < 1 || kernel_h < 1 || kernel_w < 1 || stride.h < 1 || stride.w < 1 ||
      dilation.h < 1 || dilation.w < 1 || padding.h < 0 || padding.w < 0) {
    throw ParameterError("invalid grid convolution geometry");
  }
  if (out_h() < 1 || out_w() < 1) throw DimensionError("kernel is larger than the padded input");
}

namespace {

template <typename T>
void check_image(const BasicTensor<T>& input, const GridGeometry& geom) {
  geom.validate();
  if (input.rank() < 2 || input.spatial_size() != static_cast<std::size_t>(geom.height) * geom.width) {
    throw DimensionError("input shape " + input.shape_string() + " does not match grid " +
                         std::to_string(geom.height) + "x" + std::to_string(geom.width));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> grid_im2col(const BasicTensor<T>& input, const GridGeometry& geom) {
  check_image(input, geom);
  const int channels = static_cast<int>(input.channels());
  const int out_h = geom.out_h();
  const int out_w = geom.out_w();
  const int k = geom.k();
  const std::size_t n_out = static_cast<std::size_t>(out_h) * out_w;
  BasicTensor<T> cols({static_cast<std::size_t>(channels) * k, n_out});
  const T* src = input.data();
  T* dst = cols.data();

#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < static_cast<std::int64_t>(channels) * k; ++row) {
    const int c = static_cast<int>(row / k);
    const int m = static_cast<int>(row % k);
    const int i = m / geom.kernel_w;
    const int j = m % geom.kernel_w;
    const T* plane = src + static_cast<std::size_t>(c) * geom.height * geom.width;
    T* out = dst + static_cast<std::size_t>(row) * n_out;
    for (int oy = 0; oy < out_h; ++oy) {
      const int r = oy * geom.stride.h - geom.padding.h + i * geom.dilation.h;
      if (r < 0 || r >= geom.height) {
        std::fill(out, out + out_w, T(0));
        out += out_w;
        continue;
      }
      const T* src_row = plane + static_cast<std::size_t>(r) * geom.width;
      for (int ox = 0; ox < out_w; ++ox) {
        const int cc = ox * geom.stride.w - geom.padding.w + j * geom.dilation.w;
        *out++ = (cc >= 0 && cc < geom.width) ? src_row[cc] : T(0);
      }
    }
  }
  return cols;
}

template <typename T>
BasicTensor<T> grid_col2im(const BasicTensor<T>& cols, const GridGeometry& geom) {
  geom.validate();
  const int k = geom.k();
  const std::size_t n_out = static_cast<std::size_t>(geom.out_h()) * geom.out_w();
  if (cols.rank() != 2 || cols.dim(0) % static_cast<std::size_t>(k) != 0 || cols.dim(1) != n_out) {
    throw DimensionError("column matrix shape " + cols.shape_string() + " does not match the grid geometry");
  }
  const int channels = static_cast<int>(cols.dim(0) / k);
  const std::size_t plane_size = static_cast<std::size_t>(geom.height) * geom.width;
  BasicTensor<T> out({static_cast<std::size_t>(channels), plane_size});
  const int out_h = geom.out_h();
  const int out_w = geom.out_w();

  // Channels are independent; within a channel the scatter runs in a fixed order.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    T* plane = out.data() + static_cast<std::size_t>(c) * plane_size;
    for (int m = 0; m < k; ++m) {
      const int i = m / geom.kernel_w;
      const int j = m % geom.kernel_w;
      const T* in = cols.data() + (static_cast<std::size_t>(c) * k + m) * n_out;
      for (int oy = 0; oy < out_h; ++oy) {
        const int r = oy * geom.stride.h - geom.padding.h + i * geom.dilation.h;
        if (r < 0 || r >= geom.height) {
          in += out_w;
          continue;
        }
        T* dst_row = plane + static_cast<std::size_t>(r) * geom.width;
        for (int ox = 0; ox < out_w; ++ox, ++in) {
          const int cc = ox * geom.stride.w - geom.padding.w + j * geom.dilation.w;
          if (cc >= 0 && cc < geom.width) dst_row[cc] += *in;
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> grid_conv_reference(const BasicTensor<T>& input, const ConvParams<T>& params,
                                   const GridGeometry& geom) {
  check_image(input, geom);
  params.validate();
  if (params.k != geom.k()) throw DimensionError("kernel size does not match the grid geometry");
  if (static_cast<int>(input.channels()) != params.c_in) {
    throw DimensionError("input has " + std::to_string(input.channels()) + " channels, kernel expects " +
                         std::to_string(params.c_in));
  }
  require_finite(input, "input");
  const BasicTensor<T> cols = grid_im2col(input, geom);
  const std::size_t ck = static_cast<std::size_t>(params.c_in) * params.k;
  const std::size_t n_out = cols.dim(1);
  BasicTensor<T> out({static_cast<std::size_t>(params.c_out), static_cast<std::size_t>(geom.out_h()),
                      static_cast<std::size_t>(geom.out_w())});
  gemm<T>(Trans::no, Trans::no, params.c_out, n_out, ck, T(1), params.weights.data(), ck, cols.data(), n_out, T(0),
          out.data(), n_out);
  for (int c = 0; c < params.c_out; ++c)
    for (auto& v : out.channel(static_cast<std::size_t>(c))) v += params.bias[static_cast<std::size_t>(c)];
  return out;
}

template <typename T>
BasicTensor<T> grid_conv_backward_input(const BasicTensor<T>& grad_out, const ConvParams<T>& params,
                                        const GridGeometry& geom) {
  geom.validate();
  params.validate();
  const std::size_t n_out = static_cast<std::size_t>(geom.out_h()) * geom.out_w();
  if (static_cast<int>(grad_out.channels()) != params.c_out || grad_out.spatial_size() != n_out) {
    throw DimensionError("output gradient shape " + grad_out.shape_string() + " does not match the grid output");
  }
  const std::size_t ck = static_cast<std::size_t>(params.c_in) * params.k;
  BasicTensor<T> grad_cols({ck, n_out});
  gemm<T>(Trans::yes, Trans::no, ck, n_out, params.c_out, T(1), params.weights.data(), ck, grad_out.data(), n_out,
          T(0), grad_cols.data(), n_out);
  return grid_col2im(grad_cols, geom);
}

template <typename T>
ParamGrads<T> grid_conv_backward_params(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                                        const GridGeometry& geom) {
  const BasicTensor<T> cols = grid_im2col(input, geom);
  const std::size_t n_out = cols.dim(1);
  if (grad_out.spatial_size() != n_out) throw DimensionError("output gradient does not match the grid output");
  const std::size_t c_out = grad_out.channels();
  const std::size_t ck = cols.dim(0);
  ParamGrads<T> grads{std::vector<T>(c_out * ck), std::vector<T>(c_out, T(0))};
  for (std::size_t c = 0; c < c_out; ++c)
    for (const T v : grad_out.channel(c)) grads.bias[c] += v;
  gemm<T>(Trans::no, Trans::yes, c_out, ck, n_out, T(1), grad_out.data(), n_out, cols.data(), n_out, T(0),
          grads.weights.data(), ck);
  return grads;
}

#define MAPCONV_INSTANTIATE(T)                                                                                  \
  template BasicTensor<T> grid_im2col<T>(const BasicTensor<T>&, const GridGeometry&);                          \
  template BasicTensor<T> grid_col2im<T>(const BasicTensor<T>&, const GridGeometry&);                          \
  template BasicTensor<T> grid_conv_reference<T>(const BasicTensor<T>&, const ConvParams<T>&,                  \
                                                 const GridGeometry&);                                         \
  template BasicTensor<T> grid_conv_backward_input<T>(const BasicTensor<T>&, const ConvParams<T>&,             \
                                                      const GridGeometry&);                                    \
  template ParamGrads<T> grid_conv_backward_params<T>(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                                      const GridGeometry&);

MAPCONV_INSTANTIATE(float)
MAPCONV_INSTANTIATE(double)

#undef MAPCONV_INSTANTIATE

}  // namespace mapconv
