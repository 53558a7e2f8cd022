#pragma once

#include "mapconv/sample_map.hpp"
#include "mapconv/sphere.hpp"
#include "mapconv/tensor.hpp"

namespace mapconv {

enum class Projection { gnomonic, equirect };

const char* to_string(Projection p);

// Tangent-plane offset of kernel tap (i, j): columns step east, rows step
// north with row 0 at the top.
inline double kernel_dx(const KernelSpec& kernel, int j, double delta) {
  return (j - (kernel.width - 1) / 2.0) * delta;
}
inline double kernel_dy(const KernelSpec& kernel, int i, double delta) {
  return ((kernel.height - 1) / 2.0 - i) * delta;
}

// Where kernel tap (i, j) centred at `center` lands on the sphere.
OffsetSample project_kernel_tap(SphericalCoord center, const KernelSpec& kernel, double delta, int i, int j,
                                Projection projection);

// Effective kernel pitch: kernel.delta or one equatorial pixel (2*pi/width).
double equirect_kernel_delta(const EquirectGeometry& geom, const KernelSpec& kernel);

// Spherical convolution on an equirectangular image. Every pixel is a kernel
// centre (n_out == n_in); longitude wraps, rows clamp at the poles.
SampleMap make_equirect_map(const EquirectGeometry& geom, const KernelSpec& kernel, Projection projection,
                            Interpolation interp);

// Effective pitch for cube maps: kernel.delta or pi/(2*face_dim), the pitch
// of a width-4*face_dim equirectangular image.
double cubemap_kernel_delta(int face_dim, const KernelSpec& kernel);

// Latitude/longitude kernel on a cube map: centre from cube_face_to_sph,
// offsets via inverse_equirect, taps on whichever face each sample lands on.
// Reproduces the radial kernel distortion on the +-Y faces.
SampleMap make_cubemap_map(int face_dim, const KernelSpec& kernel, Interpolation interp);

// Interpolated read of an equirectangular image at a sphere point (bilinear,
// longitude wrap, row clamp).
Sample equirect_sample(const EquirectGeometry& geom, SphericalCoord coord, Interpolation interp);

// Interpolated read of a cube map at a sphere point (taps on one face).
Sample cube_sample(const CubeGeometry& geom, SphericalCoord coord, Interpolation interp);

// Image resampling between equirectangular (C, H, W) and cube (C, 6*D, D).
Tensor resample_equirect_to_cube(const Tensor& image, int face_dim);
Tensor resample_cube_to_equirect(const Tensor& cube, const EquirectGeometry& geom);

}  // namespace mapconv
