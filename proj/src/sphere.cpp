#include "mapconv/sphere.hpp"

#include <algorithm>
#include <string>

#include "mapconv/errors.hpp"

namespace mapconv {

double wrap_longitude(double lambda) {
  double w = lambda - 2.0 * kPi * std::floor((lambda + kPi) / (2.0 * kPi));
  if (w >= kPi) w -= 2.0 * kPi;
  if (w < -kPi) w += 2.0 * kPi;
  return w;
}

SphericalCoord normalize(double phi, double lambda) {
  // Bring phi into [-pi, pi) first so one reflection suffices.
  if (phi < -kPi || phi >= kPi) phi = wrap_longitude(phi);
  if (phi > kHalfPi) {
    phi = kPi - phi;
    lambda += kPi;
  } else if (phi < -kHalfPi) {
    phi = -kPi - phi;
    lambda += kPi;
  }
  return {phi, wrap_longitude(lambda)};
}

Vec3 to_unit_vector(SphericalCoord s) {
  const double c = std::cos(s.phi);
  return {c * std::cos(s.lambda), c * std::sin(s.lambda), std::sin(s.phi)};
}

SphericalCoord from_unit_vector(const Vec3& v) {
  const double horizontal = std::hypot(v.x, v.y);
  const double phi = std::atan2(v.z, horizontal);
  const double lambda = horizontal > 0.0 ? std::atan2(v.y, v.x) : 0.0;
  return {phi, wrap_longitude(lambda)};
}

void EquirectGeometry::validate() const {
  if (height < 1 || width < 1) {
    throw ParameterError("equirectangular geometry needs positive dimensions, got " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
}

SphericalCoord equirect_pix_to_sph(double row, double col, const EquirectGeometry& geom) {
  const double lambda = 2.0 * kPi * (col + 0.5) / geom.width - kPi;
  const double phi = kHalfPi - kPi * (row + 0.5) / geom.height;
  return normalize(phi, lambda);
}

RowCol sph_to_equirect_pix(SphericalCoord coord, const EquirectGeometry& geom) {
  return {(kHalfPi - coord.phi) * geom.height / kPi - 0.5, (coord.lambda + kPi) * geom.width / (2.0 * kPi) - 0.5};
}

SphericalCoord inverse_gnomonic(SphericalCoord center, double dx, double dy) {
  const double rho = std::hypot(dx, dy);
  if (rho == 0.0) return normalize(center.phi, center.lambda);
  const double c = std::atan(rho);
  const double sin_c = std::sin(c);
  const double cos_c = std::cos(c);
  const double sin0 = std::sin(center.phi);
  const double cos0 = std::cos(center.phi);
  const double phi = std::asin(std::clamp(cos_c * sin0 + dy * sin_c * cos0 / rho, -1.0, 1.0));
  // Two-argument arctangent keeps the longitude in the right half-plane when
  // the kernel reaches over a pole.
  const double lambda = center.lambda + std::atan2(dx * sin_c, rho * cos0 * cos_c - dy * sin0 * sin_c);
  return normalize(phi, lambda);
}

OffsetSample inverse_equirect(SphericalCoord center, double dx, double dy) {
  const double phi = center.phi + dy;
  OffsetSample out;
  double cos_phi = std::abs(std::cos(phi));
  if (std::abs(kHalfPi - std::abs(phi)) < kPoleGuard) {
    cos_phi = std::cos(kHalfPi - kPoleGuard);
    out.degenerate = true;
  }
  out.coord = normalize(phi, center.lambda + dx / cos_phi);
  return out;
}

const char* to_string(CubeFace face) {
  static constexpr const char* names[] = {"+X", "-X", "+Y", "-Y", "+Z", "-Z"};
  return names[static_cast<int>(face)];
}

namespace {

// Cube frame: x east at lambda = 0, y down (south), z toward lambda = 0.
// In terms of the global frame (X, Y, Z north): x = Y, y = -Z, z = X.
Vec3 cube_frame(SphericalCoord s) {
  const Vec3 g = to_unit_vector(s);
  return {g.y, -g.z, g.x};
}

}  // namespace

SphericalCoord cube_face_to_sph(CubeFaceCoord coord) {
  const double u = coord.u;
  const double v = coord.v;
  Vec3 p;
  switch (coord.face) {
    case CubeFace::pos_x: p = {1.0, -v, -u}; break;
    case CubeFace::neg_x: p = {-1.0, -v, u}; break;
    case CubeFace::pos_y: p = {u, 1.0, v}; break;
    case CubeFace::neg_y: p = {u, -1.0, v}; break;
    case CubeFace::pos_z: p = {u, -v, 1.0}; break;
    case CubeFace::neg_z: p = {-u, -v, -1.0}; break;
  }
  const double horizontal = std::hypot(p.x, p.z);
  const double phi = std::atan2(-p.y, horizontal);
  const double lambda = horizontal > 0.0 ? std::atan2(p.x, p.z) : 0.0;
  return {phi, wrap_longitude(lambda)};
}

CubeFaceCoord sph_to_cube_face(SphericalCoord coord) {
  const Vec3 d = cube_frame(coord);
  const double ax = std::abs(d.x);
  const double ay = std::abs(d.y);
  const double az = std::abs(d.z);
  if (ax >= ay && ax >= az) {
    return d.x >= 0.0 ? CubeFaceCoord{CubeFace::pos_x, -d.z / ax, -d.y / ax}
                      : CubeFaceCoord{CubeFace::neg_x, d.z / ax, -d.y / ax};
  }
  if (ay >= az) {
    return d.y >= 0.0 ? CubeFaceCoord{CubeFace::pos_y, d.x / ay, d.z / ay}
                      : CubeFaceCoord{CubeFace::neg_y, d.x / ay, d.z / ay};
  }
  return d.z >= 0.0 ? CubeFaceCoord{CubeFace::pos_z, d.x / az, -d.y / az}
                    : CubeFaceCoord{CubeFace::neg_z, -d.x / az, -d.y / az};
}

CubeFaceCoord CubeGeometry::pixel_to_face(int face, double row, double col) const {
  return {static_cast<CubeFace>(face), 2.0 * (col + 0.5) / face_dim - 1.0, 1.0 - 2.0 * (row + 0.5) / face_dim};
}

RowCol CubeGeometry::face_to_pixel(const CubeFaceCoord& coord) const {
  return {(1.0 - coord.v) * face_dim / 2.0 - 0.5, (coord.u + 1.0) * face_dim / 2.0 - 0.5};
}

void CubeGeometry::validate() const {
  if (face_dim < 1) throw ParameterError("cube face dimension must be positive");
}

}  // namespace mapconv
