#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "mapconv/sample_map.hpp"

namespace mapconv {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this / norm(); }
};

inline double triple(const Vec3& a, const Vec3& b, const Vec3& c) { return a.dot(b.cross(c)); }

// Angle between two unit vectors, accurate for small and near-pi angles.
inline double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

// Latitude phi in [-pi/2, pi/2], longitude lambda in [-pi, pi).
struct SphericalCoord {
  double phi = 0.0;
  double lambda = 0.0;
};

// Wraps into [-pi, pi).
double wrap_longitude(double lambda);

// Reflects latitudes past a pole (phi -> +-pi - phi, lambda -> lambda + pi)
// and wraps the longitude.
SphericalCoord normalize(double phi, double lambda);

// Z is north; lambda = 0 lies on +X.
Vec3 to_unit_vector(SphericalCoord s);
// Longitude is 0 at the poles.
SphericalCoord from_unit_vector(const Vec3& v);

// Pixel centres: lambda = 2*pi*(col + 0.5)/width - pi,
//                phi    = pi/2 - pi*(row + 0.5)/height.
struct EquirectGeometry {
  int height = 0;
  int width = 0;

  double pitch() const { return 2.0 * kPi / width; }
  // Full sphere coverage needs width == 2 * height.
  bool full_coverage() const { return width == 2 * height; }
  std::int64_t pixels() const { return static_cast<std::int64_t>(height) * width; }
  void validate() const;
};

SphericalCoord equirect_pix_to_sph(double row, double col, const EquirectGeometry& geom);
RowCol sph_to_equirect_pix(SphericalCoord coord, const EquirectGeometry& geom);

// Image-to-sphere gnomonic projection: the point at tangent-plane offset
// (dx, dy) from `center`, dy pointing north along the local meridian.
SphericalCoord inverse_gnomonic(SphericalCoord center, double dx, double dy);

struct OffsetSample {
  SphericalCoord coord;
  // The target latitude came within 1e-9 of a pole and sec(phi) was clamped.
  bool degenerate = false;
};

inline constexpr double kPoleGuard = 1e-9;

// Image-to-sphere equirectangular projection:
//   phi = phi0 + dy,  lambda = lambda0 + dx * sec(phi)
OffsetSample inverse_equirect(SphericalCoord center, double dx, double dy);

enum class CubeFace : int { pos_x = 0, neg_x, pos_y, neg_y, pos_z, neg_z };

const char* to_string(CubeFace face);

struct CubeFaceCoord {
  CubeFace face = CubeFace::pos_z;
  double u = 0.0;
  double v = 0.0;
};

// Face-local coordinates to latitude / longitude. +Z is (0, 0), +X is at
// lambda = pi/2, +Y is the south pole and -Y the north pole.
SphericalCoord cube_face_to_sph(CubeFaceCoord coord);

// Dominant-axis face selection; exact ties resolve +X, -X, +Y, -Y, +Z, -Z.
CubeFaceCoord sph_to_cube_face(SphericalCoord coord);

// Six face_dim x face_dim faces stacked in CubeFace order, row-major per face.
// Pixel centre (r, c) sits at u = 2(c + 0.5)/D - 1, v = 1 - 2(r + 0.5)/D.
struct CubeGeometry {
  int face_dim = 0;

  std::int64_t pixels() const { return 6 * static_cast<std::int64_t>(face_dim) * face_dim; }
  CubeFaceCoord pixel_to_face(int face, double row, double col) const;
  RowCol face_to_pixel(const CubeFaceCoord& coord) const;
  std::int64_t index(int face, int row, int col) const {
    return (static_cast<std::int64_t>(face) * face_dim + row) * face_dim + col;
  }
  void validate() const;
};

}  // namespace mapconv
