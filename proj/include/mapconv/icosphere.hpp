#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mapconv/sample_map.hpp"
#include "mapconv/sphere.hpp"
#include "mapconv/tensor.hpp"

namespace mapconv {

using Triangle = std::array<std::int32_t, 3>;

enum class Subdivision {
  midpoint,  // split edges at their midpoints, then project to the sphere
  loop,      // Loop smoothing masks before projecting to the sphere
};

inline constexpr int kMaxIcosphereOrder = 8;

// Geodesic icosphere. The base icosahedron has vertices on both poles (+-Z).
// Every subdivision level is retained: the children of face f at level l are
// faces 4f .. 4f+3 at level l+1. Vertices of coarser levels keep their
// indices, so vertex i of order k is vertex i of every finer order.
class IcosphereMesh {
 public:
  int order() const { return static_cast<int>(levels_.size()) - 1; }
  Subdivision scheme() const { return scheme_; }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  std::int64_t vertex_count() const { return static_cast<std::int64_t>(vertices_.size()); }

  // Finest-level faces.
  const std::vector<Triangle>& faces() const { return levels_.back(); }
  const std::vector<Triangle>& faces(int level) const { return levels_.at(level); }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(faces().size()) * 3 / 2; }

  std::span<const std::int32_t> neighbors(std::int32_t v) const {
    return {adjacency_.data() + adjacency_offsets_[v], adjacency_.data() + adjacency_offsets_[v + 1]};
  }

  // Finest-level face across the edge opposite corner i of face f.
  std::int32_t face_neighbor(std::int64_t f, int i) const { return face_neighbors_[f][i]; }

 private:
  friend IcosphereMesh make_icosphere(int order, Subdivision scheme);

  Subdivision scheme_ = Subdivision::midpoint;
  std::vector<Vec3> vertices_;
  std::vector<std::vector<Triangle>> levels_;
  std::vector<std::int64_t> adjacency_offsets_;
  std::vector<std::int32_t> adjacency_;
  std::vector<std::array<std::int32_t, 3>> face_neighbors_;
};

// 0 <= order <= kMaxIcosphereOrder.
IcosphereMesh make_icosphere(int order, Subdivision scheme = Subdivision::midpoint);

// |F| = 20 * 4^k and |V| = 12 * 4^k - sum_{i<k} 6 * 4^i.
std::int64_t icosphere_face_count(int order);
std::int64_t icosphere_vertex_count(int order);

struct FaceHit {
  std::int64_t face = -1;
  std::array<double, 3> bary{};
  // Descent missed every child at some level and fell back to the nearest
  // child centroid (or walked to a neighbour at the finest level).
  bool fallback = false;
};

// Finest-level face whose planar triangle is pierced by the ray through
// `dir`, with planar barycentric weights at the intersection. O(order).
FaceHit locate_face(const IcosphereMesh& mesh, const Vec3& dir);

// Up to three taps on the hit face's vertices (zero weights dropped).
Sample barycentric_taps(const IcosphereMesh& mesh, const Vec3& dir);

enum class ResampleMode { scatter, gather };

// Equirectangular (C, H, W) -> vertex signal (C, |V|).
// scatter: every pixel adds its value to the 3 vertices of its face with
// barycentric weights; each vertex takes the weighted mean, and vertices that
// receive nothing fall back to a bilinear read at the vertex.
// gather: bilinear read at every vertex.
Tensor resample_equirect_to_vertices(const Tensor& image, const IcosphereMesh& mesh,
                                     ResampleMode mode = ResampleMode::scatter);

// Vertex signal (C, |V|) -> equirectangular (C, H, W) by barycentric reads.
Tensor resample_vertices_to_equirect(const Tensor& values, const IcosphereMesh& mesh, const EquirectGeometry& geom);

// Mean angle between adjacent vertices.
double mean_neighbor_angle(const IcosphereMesh& mesh);

// Mapped convolution on icosphere vertices with inverse-gnomonic kernels.
// mesh_out must have the order of mesh_in (stride 1) or one less (stride 2).
// Kernel "up" follows the local meridian north; at the poles it is the limit
// along lambda = 0. kernel.delta defaults to mean_neighbor_angle(mesh_in).
SampleMap make_isea_map(const IcosphereMesh& mesh_in, const IcosphereMesh& mesh_out, const KernelSpec& kernel);

// Spherical area of each vertex's Voronoi cell (polygon of the circumcentres
// of its incident faces). Sums to 4*pi.
std::vector<double> vertex_voronoi_areas(const IcosphereMesh& mesh);

// Solid angle of each pixel row of an equirectangular image.
std::vector<double> equirect_row_solid_angles(const EquirectGeometry& geom);

// Area of the spherical triangle spanned by three unit vectors.
double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

// Wavefront OBJ: v records then 1-based f records.
void write_obj(std::ostream& out, const IcosphereMesh& mesh);

}  // namespace mapconv
