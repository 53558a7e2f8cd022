#include "mapconv/icosphere.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>

#include "mapconv/errors.hpp"
#include "mapconv/sphere_maps.hpp"

namespace mapconv {

namespace {

std::uint64_t edge_key(std::int32_t a, std::int32_t b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

std::vector<Vec3> base_vertices() {
  std::vector<Vec3> v;
  v.push_back({0.0, 0.0, 1.0});
  const double ring_lat = std::atan(0.5);
  for (int k = 0; k < 5; ++k) v.push_back(to_unit_vector({ring_lat, 2.0 * kPi * k / 5.0}));
  for (int k = 0; k < 5; ++k) v.push_back(to_unit_vector({-ring_lat, 2.0 * kPi * k / 5.0 + kPi / 5.0}));
  v.push_back({0.0, 0.0, -1.0});
  return v;
}

std::vector<Triangle> base_faces(const std::vector<Vec3>& v) {
  std::vector<Triangle> f;
  auto up = [](int k) { return 1 + (k % 5); };
  auto lo = [](int k) { return 6 + (k % 5); };
  for (int k = 0; k < 5; ++k) f.push_back({0, up(k), up(k + 1)});
  for (int k = 0; k < 5; ++k) f.push_back({up(k), lo(k), up(k + 1)});
  for (int k = 0; k < 5; ++k) f.push_back({up(k + 1), lo(k), lo(k + 1)});
  for (int k = 0; k < 5; ++k) f.push_back({11, lo(k + 1), lo(k)});
  for (auto& t : f) {
    if (triple(v[t[0]], v[t[1]], v[t[2]]) < 0.0) std::swap(t[1], t[2]);
  }
  return f;
}

double loop_beta(int valence) {
  const double n = valence;
  const double t = 3.0 / 8.0 + 0.25 * std::cos(2.0 * kPi / n);
  return (5.0 / 8.0 - t * t) / n;
}

void subdivide(std::vector<Vec3>& vertices, const std::vector<Triangle>& parent, std::vector<Triangle>& children,
               Subdivision scheme) {
  struct EdgeInfo {
    std::int32_t mid;
    Vec3 opposite_sum;
  };
  std::unordered_map<std::uint64_t, EdgeInfo> edges;
  edges.reserve(parent.size() * 2);
  const auto old_count = static_cast<std::int32_t>(vertices.size());
  std::int32_t next = old_count;
  std::vector<std::pair<std::int32_t, std::int32_t>> edge_ends;

  auto midpoint = [&](std::int32_t a, std::int32_t b, std::int32_t opposite) {
    auto [it, inserted] = edges.try_emplace(edge_key(a, b), EdgeInfo{next, Vec3{}});
    if (inserted) {
      ++next;
      edge_ends.emplace_back(a, b);
    }
    it->second.opposite_sum = it->second.opposite_sum + vertices[opposite];
    return it->second.mid;
  };

  children.clear();
  children.reserve(parent.size() * 4);
  for (const auto& t : parent) {
    const std::int32_t a = t[0], b = t[1], c = t[2];
    const std::int32_t ab = midpoint(a, b, c);
    const std::int32_t bc = midpoint(b, c, a);
    const std::int32_t ca = midpoint(c, a, b);
    children.push_back({a, ab, ca});
    children.push_back({ab, b, bc});
    children.push_back({ca, bc, c});
    children.push_back({ab, bc, ca});
  }

  std::vector<Vec3> updated(static_cast<std::size_t>(next));
  for (const auto& [a, b] : edge_ends) {
    const EdgeInfo& e = edges.at(edge_key(a, b));
    updated[e.mid] = scheme == Subdivision::midpoint
                         ? (vertices[a] + vertices[b]) * 0.5
                         : (vertices[a] + vertices[b]) * (3.0 / 8.0) + e.opposite_sum * (1.0 / 8.0);
  }
  if (scheme == Subdivision::loop) {
    std::vector<Vec3> neighbor_sum(static_cast<std::size_t>(old_count));
    std::vector<int> valence(static_cast<std::size_t>(old_count), 0);
    for (const auto& [a, b] : edge_ends) {
      neighbor_sum[a] = neighbor_sum[a] + vertices[b];
      neighbor_sum[b] = neighbor_sum[b] + vertices[a];
      ++valence[a];
      ++valence[b];
    }
    for (std::int32_t v = 0; v < old_count; ++v) {
      const double beta = loop_beta(valence[v]);
      updated[v] = vertices[v] * (1.0 - valence[v] * beta) + neighbor_sum[v] * beta;
    }
  } else {
    for (std::int32_t v = 0; v < old_count; ++v) updated[v] = vertices[v];
  }
  // Midpoint subdivision leaves existing vertices bit-identical.
  const std::int32_t first_moved = scheme == Subdivision::loop ? 0 : old_count;
  for (std::int32_t v = first_moved; v < next; ++v) updated[v] = updated[v].normalized();
  vertices = std::move(updated);
}

// Barycentric score of the ray through d against triangle t: raw coordinates
// proportional to the planar barycentrics, and min coordinate / sum (negative
// infinity when the face lies on the far hemisphere).
double face_score(const IcosphereMesh& mesh, const Triangle& t, const Vec3& d, std::array<double, 3>& raw) {
  const auto& v = mesh.vertices();
  const Vec3& a = v[t[0]];
  const Vec3& b = v[t[1]];
  const Vec3& c = v[t[2]];
  raw = {triple(d, b, c), triple(a, d, c), triple(a, b, d)};
  const double sum = raw[0] + raw[1] + raw[2];
  if (!(sum > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::min({raw[0], raw[1], raw[2]}) / sum;
}

constexpr double kInsideTolerance = 1e-9;
constexpr int kMaxWalkSteps = 64;

Vec3 centroid_direction(const IcosphereMesh& mesh, const Triangle& t) {
  const auto& v = mesh.vertices();
  return (v[t[0]] + v[t[1]] + v[t[2]]).normalized();
}

}  // namespace

std::int64_t icosphere_face_count(int order) { return 20 * (std::int64_t{1} << (2 * order)); }

std::int64_t icosphere_vertex_count(int order) {
  if (order == 0) return 12;
  std::int64_t sum = 0;
  for (int i = 0; i < order; ++i) sum += 6 * (std::int64_t{1} << (2 * i));
  return 12 * (std::int64_t{1} << (2 * order)) - sum;
}

IcosphereMesh make_icosphere(int order, Subdivision scheme) {
  if (order < 0 || order > kMaxIcosphereOrder) {
    throw ParameterError("icosphere order must be in [0, " + std::to_string(kMaxIcosphereOrder) + "], got " +
                         std::to_string(order));
  }
  IcosphereMesh mesh;
  mesh.scheme_ = scheme;
  mesh.vertices_ = base_vertices();
  mesh.levels_.push_back(base_faces(mesh.vertices_));
  for (int l = 1; l <= order; ++l) {
    std::vector<Triangle> next;
    subdivide(mesh.vertices_, mesh.levels_.back(), next, scheme);
    mesh.levels_.push_back(std::move(next));
  }

  const auto& faces = mesh.levels_.back();
  const std::size_t nv = mesh.vertices_.size();
  std::vector<std::vector<std::int32_t>> nbrs(nv);
  std::unordered_map<std::uint64_t, std::pair<std::int64_t, int>> edge_owner;
  edge_owner.reserve(faces.size() * 2);
  mesh.face_neighbors_.assign(faces.size(), {-1, -1, -1});
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    for (int i = 0; i < 3; ++i) {
      const std::int32_t a = t[(i + 1) % 3];
      const std::int32_t b = t[(i + 2) % 3];
      nbrs[a].push_back(b);
      auto [it, inserted] = edge_owner.try_emplace(edge_key(a, b), static_cast<std::int64_t>(f), i);
      if (!inserted) {
        mesh.face_neighbors_[f][i] = static_cast<std::int32_t>(it->second.first);
        mesh.face_neighbors_[it->second.first][it->second.second] = static_cast<std::int32_t>(f);
      }
    }
  }
  mesh.adjacency_offsets_.assign(nv + 1, 0);
  for (std::size_t v = 0; v < nv; ++v) {
    auto& list = nbrs[v];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    mesh.adjacency_offsets_[v + 1] = mesh.adjacency_offsets_[v] + static_cast<std::int64_t>(list.size());
  }
  mesh.adjacency_.reserve(static_cast<std::size_t>(mesh.adjacency_offsets_.back()));
  for (const auto& list : nbrs) mesh.adjacency_.insert(mesh.adjacency_.end(), list.begin(), list.end());
  return mesh;
}

FaceHit locate_face(const IcosphereMesh& mesh, const Vec3& dir) {
  FaceHit hit;
  std::array<double, 3> raw{};
  std::array<double, 3> best_raw{};
  double best = -std::numeric_limits<double>::infinity();
  std::int64_t face = 0;
  const auto& base = mesh.faces(0);
  for (std::size_t f = 0; f < base.size(); ++f) {
    const double s = face_score(mesh, base[f], dir, raw);
    if (s > best) {
      best = s;
      face = static_cast<std::int64_t>(f);
      best_raw = raw;
    }
  }

  for (int level = 1; level <= mesh.order(); ++level) {
    const auto& faces = mesh.faces(level);
    const std::int64_t first = face * 4;
    best = -std::numeric_limits<double>::infinity();
    for (std::int64_t c = first; c < first + 4; ++c) {
      const double s = face_score(mesh, faces[c], dir, raw);
      if (s > best) {
        best = s;
        face = c;
        best_raw = raw;
      }
    }
    if (best < -kInsideTolerance) {
      // No child contains the ray: take the child whose centroid is nearest.
      double best_angle = std::numeric_limits<double>::infinity();
      for (std::int64_t c = first; c < first + 4; ++c) {
        const double ang = angle_between(centroid_direction(mesh, faces[c]), dir);
        if (ang < best_angle) {
          best_angle = ang;
          face = c;
        }
      }
      best = face_score(mesh, faces[face], dir, best_raw);
      hit.fallback = true;
    }
  }

  // Finest level: step across the most violated edge until the ray is inside.
  const auto& finest = mesh.faces();
  for (int step = 0; step < kMaxWalkSteps && best < -kInsideTolerance; ++step) {
    const auto worst = static_cast<int>(std::min_element(best_raw.begin(), best_raw.end()) - best_raw.begin());
    const std::int32_t next = mesh.face_neighbor(face, worst);
    if (next < 0) break;
    face = next;
    best = face_score(mesh, finest[face], dir, best_raw);
    hit.fallback = true;
  }

  hit.face = face;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    hit.bary[i] = std::max(best_raw[i], 0.0);
    sum += hit.bary[i];
  }
  if (sum > 0.0) {
    for (auto& w : hit.bary) w /= sum;
  } else {
    hit.bary = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  }
  return hit;
}

Sample barycentric_taps(const IcosphereMesh& mesh, const Vec3& dir) {
  const FaceHit hit = locate_face(mesh, dir);
  const auto& t = mesh.faces()[hit.face];
  Sample s;
  for (int i = 0; i < 3; ++i) {
    if (hit.bary[i] > 0.0) s.push({t[i], hit.bary[i]});
  }
  return s;
}

Tensor resample_equirect_to_vertices(const Tensor& image, const IcosphereMesh& mesh, ResampleMode mode) {
  if (image.rank() != 3 || image.size() == 0) {
    throw ParameterError("equirectangular image must be a non-empty (C, H, W) tensor, got " + image.shape_string());
  }
  const EquirectGeometry geom{static_cast<int>(image.dim(1)), static_cast<int>(image.dim(2))};
  geom.validate();
  const std::size_t channels = image.channels();
  const auto nv = static_cast<std::size_t>(mesh.vertex_count());
  Tensor out({channels, nv});

  auto gather_vertex = [&](std::size_t v) {
    const Sample s = equirect_sample(geom, from_unit_vector(mesh.vertices()[v]), Interpolation::bilinear);
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (const auto& t : s) acc += t.weight * image.at(c, static_cast<std::size_t>(t.index));
      out.at(c, v) = acc;
    }
  };

  if (mode == ResampleMode::gather) {
#pragma omp parallel for schedule(static)
    for (std::int64_t v = 0; v < static_cast<std::int64_t>(nv); ++v) gather_vertex(static_cast<std::size_t>(v));
    return out;
  }

  const std::int64_t pixels = geom.pixels();
  std::vector<Sample> hits(static_cast<std::size_t>(pixels));
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < pixels; ++p) {
    const SphericalCoord s = equirect_pix_to_sph(static_cast<double>(p / geom.width),
                                                 static_cast<double>(p % geom.width), geom);
    hits[static_cast<std::size_t>(p)] = barycentric_taps(mesh, to_unit_vector(s));
  }

  // Accumulate in pixel order so the result does not depend on threading.
  std::vector<double> weight(nv, 0.0);
  for (const auto& h : hits)
    for (const auto& t : h) weight[static_cast<std::size_t>(t.index)] += t.weight;
  for (std::size_t c = 0; c < channels; ++c) {
    auto dst = out.channel(c);
    for (std::size_t p = 0; p < hits.size(); ++p) {
      const double value = image.at(c, p);
      for (const auto& t : hits[p]) dst[static_cast<std::size_t>(t.index)] += t.weight * value;
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (weight[v] > 0.0) {
      for (std::size_t c = 0; c < channels; ++c) out.at(c, v) /= weight[v];
    } else {
      gather_vertex(v);
    }
  }
  return out;
}

Tensor resample_vertices_to_equirect(const Tensor& values, const IcosphereMesh& mesh, const EquirectGeometry& geom) {
  geom.validate();
  if (values.rank() != 2 || static_cast<std::int64_t>(values.dim(1)) != mesh.vertex_count()) {
    throw DimensionError("vertex signal shape " + values.shape_string() + " does not match mesh with " +
                         std::to_string(mesh.vertex_count()) + " vertices");
  }
  const std::size_t channels = values.channels();
  Tensor out({channels, static_cast<std::size_t>(geom.height), static_cast<std::size_t>(geom.width)});
  const std::int64_t pixels = geom.pixels();
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < pixels; ++p) {
    const SphericalCoord s = equirect_pix_to_sph(static_cast<double>(p / geom.width),
                                                 static_cast<double>(p % geom.width), geom);
    const Sample taps = barycentric_taps(mesh, to_unit_vector(s));
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (const auto& t : taps) acc += t.weight * values.at(c, static_cast<std::size_t>(t.index));
      out.at(c, static_cast<std::size_t>(p)) = acc;
    }
  }
  return out;
}

double mean_neighbor_angle(const IcosphereMesh& mesh) {
  const auto& v = mesh.vertices();
  double sum = 0.0;
  std::int64_t pairs = 0;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(v.size()); ++i) {
    for (const std::int32_t j : mesh.neighbors(i)) {
      if (j <= i) continue;
      sum += angle_between(v[i], v[j]);
      ++pairs;
    }
  }
  return pairs ? sum / static_cast<double>(pairs) : 0.0;
}

SampleMap make_isea_map(const IcosphereMesh& mesh_in, const IcosphereMesh& mesh_out, const KernelSpec& kernel) {
  kernel.validate();
  if (mesh_out.order() != mesh_in.order() && mesh_out.order() != mesh_in.order() - 1) {
    throw ParameterError("output icosphere order " + std::to_string(mesh_out.order()) + " must equal input order " +
                         std::to_string(mesh_in.order()) + " or be one less");
  }
  const double delta = kernel.delta.value_or(mean_neighbor_angle(mesh_in));
  const int k = kernel.size();
  const std::int64_t n_out = mesh_out.vertex_count();
  std::vector<Sample> samples(static_cast<std::size_t>(n_out) * k);

#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t v = 0; v < n_out; ++v) {
    const SphericalCoord center = from_unit_vector(mesh_out.vertices()[static_cast<std::size_t>(v)]);
    for (int i = 0; i < kernel.height; ++i) {
      for (int j = 0; j < kernel.width; ++j) {
        const SphericalCoord s = inverse_gnomonic(center, kernel_dx(kernel, j, delta), kernel_dy(kernel, i, delta));
        samples[static_cast<std::size_t>(v) * k + i * kernel.width + j] =
            barycentric_taps(mesh_in, to_unit_vector(s));
      }
    }
  }
  std::string desc = "isea order_in=" + std::to_string(mesh_in.order()) +
                     " order_out=" + std::to_string(mesh_out.order()) + " kh=" + std::to_string(kernel.height) +
                     " kw=" + std::to_string(kernel.width) + " delta=" + std::to_string(delta);
  return SampleMap(mesh_in.vertex_count(), n_out, k, samples, std::move(desc));
}

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double numer = std::abs(triple(a, b, c));
  const double denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(numer, denom);
}

std::vector<double> vertex_voronoi_areas(const IcosphereMesh& mesh) {
  const auto& verts = mesh.vertices();
  const auto& faces = mesh.faces();
  const std::size_t nv = verts.size();

  std::vector<Vec3> circumcenter(faces.size());
  std::vector<std::vector<std::int64_t>> incident(nv);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Vec3& a = verts[faces[f][0]];
    const Vec3& b = verts[faces[f][1]];
    const Vec3& c = verts[faces[f][2]];
    Vec3 n = (b - a).cross(c - a).normalized();
    if (n.dot(a) < 0.0) n = n * -1.0;
    circumcenter[f] = n;
    for (const auto v : faces[f]) incident[v].push_back(static_cast<std::int64_t>(f));
  }

  std::vector<double> area(nv, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t vi = 0; vi < static_cast<std::int64_t>(nv); ++vi) {
    const Vec3& v = verts[static_cast<std::size_t>(vi)];
    const Vec3 seed = std::abs(v.z) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
    const Vec3 e1 = seed.cross(v).normalized();
    const Vec3 e2 = v.cross(e1);
    auto ring = incident[static_cast<std::size_t>(vi)];
    std::vector<std::pair<double, std::int64_t>> ordered;
    ordered.reserve(ring.size());
    for (const auto f : ring) {
      const Vec3 d = circumcenter[f] - v;
      ordered.emplace_back(std::atan2(d.dot(e2), d.dot(e1)), f);
    }
    std::sort(ordered.begin(), ordered.end());
    double total = 0.0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      const Vec3& p = circumcenter[ordered[i].second];
      const Vec3& q = circumcenter[ordered[(i + 1) % ordered.size()].second];
      total += spherical_triangle_area(v, p, q);
    }
    area[static_cast<std::size_t>(vi)] = total;
  }
  return area;
}

std::vector<double> equirect_row_solid_angles(const EquirectGeometry& geom) {
  geom.validate();
  std::vector<double> rows(static_cast<std::size_t>(geom.height));
  const double dlambda = 2.0 * kPi / geom.width;
  for (int r = 0; r < geom.height; ++r) {
    const double top = kHalfPi - kPi * r / geom.height;
    const double bottom = kHalfPi - kPi * (r + 1) / geom.height;
    rows[static_cast<std::size_t>(r)] = dlambda * (std::sin(top) - std::sin(bottom));
  }
  return rows;
}

void write_obj(std::ostream& out, const IcosphereMesh& mesh) {
  char line[128];
  for (const auto& v : mesh.vertices()) {
    std::snprintf(line, sizeof line, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
    out << line;
  }
  for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

}  // namespace mapconv
