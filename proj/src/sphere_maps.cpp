#include "mapconv/sphere_maps.hpp"

#include <string>
#include <vector>

#include "mapconv/errors.hpp"

namespace mapconv {

const char* to_string(Projection p) { return p == Projection::gnomonic ? "gnomonic" : "equirect"; }

OffsetSample project_kernel_tap(SphericalCoord center, const KernelSpec& kernel, double delta, int i, int j,
                                Projection projection) {
  const double dx = kernel_dx(kernel, j, delta);
  const double dy = kernel_dy(kernel, i, delta);
  if (projection == Projection::gnomonic) return {inverse_gnomonic(center, dx, dy), false};
  return inverse_equirect(center, dx, dy);
}

double equirect_kernel_delta(const EquirectGeometry& geom, const KernelSpec& kernel) {
  return kernel.delta.value_or(geom.pitch());
}

Sample equirect_sample(const EquirectGeometry& geom, SphericalCoord coord, Interpolation interp) {
  const RowCol p = sph_to_equirect_pix(coord, geom);
  return interp == Interpolation::nearest ? nearest_tap_clamped(p, geom.height, geom.width, true)
                                          : bilinear_taps_clamped(p, geom.height, geom.width, true);
}

Sample cube_sample(const CubeGeometry& geom, SphericalCoord coord, Interpolation interp) {
  const CubeFaceCoord fc = sph_to_cube_face(coord);
  const RowCol p = geom.face_to_pixel(fc);
  Sample local = interp == Interpolation::nearest ? nearest_tap_clamped(p, geom.face_dim, geom.face_dim, false)
                                                  : bilinear_taps_clamped(p, geom.face_dim, geom.face_dim, false);
  const std::int64_t base = static_cast<std::int64_t>(fc.face) * geom.face_dim * geom.face_dim;
  for (std::size_t t = 0; t < local.size(); ++t) local[t].index += base;
  return local;
}

SampleMap make_equirect_map(const EquirectGeometry& geom, const KernelSpec& kernel, Projection projection,
                            Interpolation interp) {
  geom.validate();
  kernel.validate();
  const double delta = equirect_kernel_delta(geom, kernel);
  const int k = kernel.size();
  const std::int64_t n = geom.pixels();
  std::vector<Sample> samples(static_cast<std::size_t>(n) * k);

#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) {
    const int row = static_cast<int>(p / geom.width);
    const int col = static_cast<int>(p % geom.width);
    const SphericalCoord center = equirect_pix_to_sph(row, col, geom);
    for (int i = 0; i < kernel.height; ++i) {
      for (int j = 0; j < kernel.width; ++j) {
        const OffsetSample s = project_kernel_tap(center, kernel, delta, i, j, projection);
        samples[static_cast<std::size_t>(p) * k + i * kernel.width + j] = equirect_sample(geom, s.coord, interp);
      }
    }
  }
  std::string desc = std::string("equirect-") + to_string(projection) + " h=" + std::to_string(geom.height) +
                     " w=" + std::to_string(geom.width) + " kh=" + std::to_string(kernel.height) +
                     " kw=" + std::to_string(kernel.width) + " delta=" + std::to_string(delta) +
                     " interp=" + to_string(interp);
  return SampleMap(n, n, k, samples, std::move(desc));
}

double cubemap_kernel_delta(int face_dim, const KernelSpec& kernel) {
  return kernel.delta.value_or(kPi / (2.0 * face_dim));
}

SampleMap make_cubemap_map(int face_dim, const KernelSpec& kernel, Interpolation interp) {
  const CubeGeometry geom{face_dim};
  geom.validate();
  kernel.validate();
  const double delta = cubemap_kernel_delta(face_dim, kernel);
  const int k = kernel.size();
  const std::int64_t n = geom.pixels();
  std::vector<Sample> samples(static_cast<std::size_t>(n) * k);

#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) {
    const int face = static_cast<int>(p / (static_cast<std::int64_t>(face_dim) * face_dim));
    const int rem = static_cast<int>(p % (static_cast<std::int64_t>(face_dim) * face_dim));
    const SphericalCoord center = cube_face_to_sph(geom.pixel_to_face(face, rem / face_dim, rem % face_dim));
    for (int i = 0; i < kernel.height; ++i) {
      for (int j = 0; j < kernel.width; ++j) {
        const OffsetSample s = project_kernel_tap(center, kernel, delta, i, j, Projection::equirect);
        samples[static_cast<std::size_t>(p) * k + i * kernel.width + j] = cube_sample(geom, s.coord, interp);
      }
    }
  }
  std::string desc = "cubemap face_dim=" + std::to_string(face_dim) + " kh=" + std::to_string(kernel.height) +
                     " kw=" + std::to_string(kernel.width) + " delta=" + std::to_string(delta) +
                     " interp=" + to_string(interp);
  return SampleMap(n, n, k, samples, std::move(desc));
}

namespace {

Tensor apply_samples(const Tensor& src, const std::vector<Sample>& samples, std::vector<std::size_t> out_shape) {
  Tensor out(std::move(out_shape));
  const std::size_t channels = src.channels();
  const std::size_t n = samples.size();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < n; ++p) {
      double acc = 0.0;
      for (const auto& t : samples[p]) acc += t.weight * src.at(c, static_cast<std::size_t>(t.index));
      out.at(c, p) = acc;
    }
  }
  return out;
}

}  // namespace

Tensor resample_equirect_to_cube(const Tensor& image, int face_dim) {
  if (image.rank() != 3) throw DimensionError("equirectangular image must be (C, H, W), got " + image.shape_string());
  const EquirectGeometry eq{static_cast<int>(image.dim(1)), static_cast<int>(image.dim(2))};
  eq.validate();
  const CubeGeometry cube{face_dim};
  cube.validate();
  std::vector<Sample> samples(static_cast<std::size_t>(cube.pixels()));
  for (int f = 0; f < 6; ++f)
    for (int r = 0; r < face_dim; ++r)
      for (int c = 0; c < face_dim; ++c)
        samples[static_cast<std::size_t>(cube.index(f, r, c))] =
            equirect_sample(eq, cube_face_to_sph(cube.pixel_to_face(f, r, c)), Interpolation::bilinear);
  return apply_samples(image, samples,
                       {image.channels(), static_cast<std::size_t>(6 * face_dim), static_cast<std::size_t>(face_dim)});
}

Tensor resample_cube_to_equirect(const Tensor& cube_image, const EquirectGeometry& geom) {
  geom.validate();
  if (cube_image.rank() != 3 || cube_image.dim(1) != 6 * cube_image.dim(2)) {
    throw DimensionError("cube map must be (C, 6*D, D), got " + cube_image.shape_string());
  }
  const CubeGeometry cube{static_cast<int>(cube_image.dim(2))};
  std::vector<Sample> samples(static_cast<std::size_t>(geom.pixels()));
  for (int r = 0; r < geom.height; ++r)
    for (int c = 0; c < geom.width; ++c)
      samples[static_cast<std::size_t>(r) * geom.width + c] =
          cube_sample(cube, equirect_pix_to_sph(r, c, geom), Interpolation::bilinear);
  return apply_samples(cube_image, samples,
                       {cube_image.channels(), static_cast<std::size_t>(geom.height), static_cast<std::size_t>(geom.width)});
}

}  // namespace mapconv
