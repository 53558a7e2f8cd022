// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <random>
#include <string>
#include <vector>

#include "mapconv/bench.hpp"
#include "mapconv/gradcheck.hpp"
#include "mapconv/grid_conv.hpp"
#include "mapconv/icosphere.hpp"
#include "mapconv/mapped_conv.hpp"
#include "mapconv/sphere_maps.hpp"

using namespace mapconv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = n(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// --- 1 ----------------------------------------------------------------------

Outcome grid_equivalence() {
  std::mt19937_64 rng(101);
  const std::pair<int, int> kernels[] = {{1, 1}, {3, 3}, {1, 5}};
  double worst = 0.0;
  int instances = 0;
  for (int rep = 0; rep < 5; ++rep)
    for (const auto& [kh, kw] : kernels)
      for (int s : {1, 2})
        for (int p : {0, 1})
          for (int d : {1, 2}) {
            GridGeometry g;
            do {
              g = GridGeometry{pick(rng, 1, 32), pick(rng, 1, 32), kh, kw, {s, s}, {p, p}, {d, d}};
            } while (g.out_h() < 1 || g.out_w() < 1);
            const int ci = pick(rng, 1, 4), co = pick(rng, 1, 4);
            const auto params = ConvParams<double>::random(ci, co, kh * kw, rng());
            const Tensor x = random_tensor({std::size_t(ci), std::size_t(g.height), std::size_t(g.width)}, rng);
            const SampleMap map = make_grid_map(g.height, g.width, KernelSpec{kh, kw, {}}, g.stride, g.padding, g.dilation);
            const Tensor a = mapped_conv_forward(x, map, params);
            const Tensor b = grid_conv_reference(x, params, g);
            for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
            ++instances;
          }
  return {instances >= 100 && worst <= 1e-12,
          fmt("max abs diff %.2e over %d instances (tol 1e-12)", worst, instances)};
}

// --- shared random map families for 2 and 3 ----------------------------------

const char* kFamilies[] = {"grid", "shuffle", "equirect-gnomonic", "equirect-equirect", "cubemap", "isea"};

SampleMap random_map(int family, std::mt19937_64& rng) {
  const Interpolation interp = pick(rng, 0, 1) ? Interpolation::bilinear : Interpolation::nearest;
  const std::pair<int, int> shapes[] = {{1, 1}, {3, 3}, {1, 5}, {3, 2}};
  const auto [kh, kw] = shapes[pick(rng, 0, 3)];
  switch (family) {
    case 0: {
      for (;;) {
        const int h = pick(rng, 3, 10), w = pick(rng, 3, 10);
        const Pair s{pick(rng, 1, 2), pick(rng, 1, 2)}, p{pick(rng, 0, 1), pick(rng, 0, 1)},
            d{pick(rng, 1, 2), pick(rng, 1, 2)};
        if (grid_output_extent(h, kh, s.h, p.h, d.h) < 1 || grid_output_extent(w, kw, s.w, p.w, d.w) < 1) continue;
        return make_grid_map(h, w, KernelSpec{kh, kw, {}}, s, p, d);
      }
    }
    case 1:
      return make_shuffle_map(pick(rng, 3, 10), pick(rng, 3, 10), KernelSpec{kh, kw, {}}, rng(), interp);
    case 2:
    case 3: {
      const int h = pick(rng, 3, 8);
      return make_equirect_map({h, 2 * h}, KernelSpec{3, 3, {}}, family == 2 ? Projection::gnomonic : Projection::equirect,
                               interp);
    }
    case 4:
      return make_cubemap_map(pick(rng, 2, 4), KernelSpec{3, 3, {}}, interp);
    default: {
      const int order = pick(rng, 0, 3);
      const IcosphereMesh in = make_icosphere(order);
      if (order > 0 && pick(rng, 0, 1)) return make_isea_map(in, make_icosphere(order - 1), KernelSpec{3, 3, {}});
      return make_isea_map(in, in, KernelSpec{3, 3, {}});
    }
  }
}

// --- 2 ----------------------------------------------------------------------

Outcome gradient_correctness() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  std::string per_family;
  for (int f = 0; f < 6; ++f) {
    double family_worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const SampleMap map = random_map(f, rng);
      const auto r = gradient_check(map, pick(rng, 1, 3), pick(rng, 1, 3), rng());
      family_worst = std::max(family_worst, r.worst());
    }
    per_family += fmt(" %s=%.1e", kFamilies[f], family_worst);
    worst = std::max(worst, family_worst);
  }
  return {worst < 1e-6, fmt("max relative error %.2e over 6x20 instances (tol 1e-6);", worst) + per_family};
}

// --- 3 ----------------------------------------------------------------------

Outcome adjointness() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const SampleMap map = random_map(t % 6, rng);
    const int ci = pick(rng, 1, 3), co = pick(rng, 1, 3);
    auto params = ConvParams<double>::random(ci, co, map.k(), rng());
    std::fill(params.bias.begin(), params.bias.end(), 0.0);
    const Tensor x = random_tensor({std::size_t(ci), std::size_t(map.n_in())}, rng);
    const Tensor y = random_tensor({std::size_t(co), std::size_t(map.n_out())}, rng);
    const double lhs = dot(mapped_conv_forward(x, map, params), y);
    const double rhs = dot(x, mapped_conv_backward_input(y, map, params));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
  }
  return {worst <= 1e-10, fmt("max relative gap %.2e over 100 triples (tol 1e-10)", worst)};
}

// --- 4 ----------------------------------------------------------------------

Outcome mesh_exactness() {
  bool ok = true;
  double norm_err = 0.0;
  std::string counts;
  for (int k = 0; k <= 7; ++k) {
    const IcosphereMesh mesh = make_icosphere(k);
    const auto v = mesh.vertex_count();
    const auto f = static_cast<std::int64_t>(mesh.faces().size());
    const auto e = mesh.edge_count();
    std::int64_t formula_v = 12;
    if (k > 0) {
      formula_v = 12 * (std::int64_t{1} << (2 * k));
      for (int i = 0; i < k; ++i) formula_v -= 6 * (std::int64_t{1} << (2 * i));
    }
    ok &= f == 20 * (std::int64_t{1} << (2 * k));
    ok &= v == formula_v;
    ok &= v - e + f == 2;
    for (const auto& p : mesh.vertices()) norm_err = std::max(norm_err, std::abs(p.norm() - 1.0));
    if (k == 7) {
      ok &= v == 163842 && f == 327680;
      counts = fmt("order 7: V=%lld F=%lld E=%lld", static_cast<long long>(v), static_cast<long long>(f),
                   static_cast<long long>(e));
    }
  }
  ok &= norm_err <= 1e-12;
  return {ok, counts + fmt(", max |norm-1| %.1e, V-E+F=2 for orders 0-7", norm_err)};
}

// --- 5 ----------------------------------------------------------------------

Outcome row_preservation() {
  const EquirectGeometry g{256, 512};
  const KernelSpec k{3, 3, {}};
  const double delta = equirect_kernel_delta(g, k);
  std::int64_t violations = 0, samples = 0;
  for (int row = 0; row < g.height; ++row)
    for (int col = 0; col < g.width; ++col) {
      const SphericalCoord c = equirect_pix_to_sph(row, col, g);
      for (int i = 0; i < 3; ++i) {
        const double expect = normalize(c.phi + kernel_dy(k, i, delta), 0.0).phi;
        for (int j = 0; j < 3; ++j, ++samples) {
          if (project_kernel_tap(c, k, delta, i, j, Projection::equirect).coord.phi != expect) ++violations;
        }
      }
    }
  // Same property seen through the generated map: each kernel row reads a
  // single image row.
  const SampleMap map = make_equirect_map(g, k, Projection::equirect, Interpolation::nearest);
  std::int64_t row_breaks = 0;
  for (std::int64_t n = 0; n < map.n_out(); ++n)
    for (int i = 0; i < 3; ++i) {
      const auto r = map.sample(n, i * 3)[0].index / g.width;
      for (int j = 1; j < 3; ++j) row_breaks += map.sample(n, i * 3 + j)[0].index / g.width != r;
    }

  const SphericalCoord c60{kPi / 3, 0.0};
  auto phi = [&](int i, int j) { return project_kernel_tap(c60, k, delta, i, j, Projection::gnomonic).coord.phi; };
  double curve = std::numeric_limits<double>::infinity();
  for (int i : {0, 2})
    for (int j : {0, 2}) curve = std::min(curve, std::abs(phi(i, j) - phi(i, 1)));
  const bool ok = violations == 0 && row_breaks == 0 && curve > 1e-4;
  return {ok, fmt("equirect: %lld/%lld samples off their row, %lld map row breaks; gnomonic at 60 deg: "
                  "min corner latitude departure %.4e rad (need > 1e-4)",
                  static_cast<long long>(violations), static_cast<long long>(samples),
                  static_cast<long long>(row_breaks), curve)};
}

// --- 6 ----------------------------------------------------------------------

Outcome projection_round_trips() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> zdist(-1.0, 1.0), lon(-kPi, kPi);
  const EquirectGeometry g{256, 512};
  double cube_err = 0.0, eq_err = 0.0, face_err = 0.0;
  int points = 0;
  while (points < 100000) {
    const SphericalCoord s{std::asin(zdist(rng)), lon(rng)};
    if (std::abs(s.phi) > kHalfPi - 1e-6) continue;
    const CubeFaceCoord fc = sph_to_cube_face(s);
    if (std::max(std::abs(fc.u), std::abs(fc.v)) > 1.0 - 1e-6) continue;
    ++points;
    const SphericalCoord back = cube_face_to_sph(fc);
    cube_err = std::max(cube_err, angle_between(to_unit_vector(s), to_unit_vector(back)));
    const CubeFaceCoord again = sph_to_cube_face(back);
    if (again.face != fc.face) face_err = 1.0;
    face_err = std::max({face_err, std::abs(again.u - fc.u), std::abs(again.v - fc.v)});

    const RowCol px = sph_to_equirect_pix(s, g);
    const SphericalCoord e = equirect_pix_to_sph(px.row, px.col, g);
    double dl = std::abs(e.lambda - s.lambda);
    dl = std::min(dl, 2 * kPi - dl);
    eq_err = std::max({eq_err, std::abs(e.phi - s.phi), dl});
  }
  const double worst = std::max({cube_err, face_err, eq_err});
  return {worst <= 1e-9, fmt("%d interior points: sph-cube-sph %.1e rad, cube-sph-cube %.1e, sph-equirect-sph %.1e "
                             "(tol 1e-9)",
                             points, cube_err, face_err, eq_err)};
}

// --- 7 ----------------------------------------------------------------------

struct Field {
  const char* name;
  std::function<double(const Vec3&)> f;
};

// Unnormalized real spherical harmonics, one per degree plus a mixture.
const std::vector<Field>& test_fields() {
  static const std::vector<Field> fields = {
      {"l1", [](const Vec3& p) { return p.z; }},
      {"l2", [](const Vec3& p) { return p.x * p.y; }},
      {"l3", [](const Vec3& p) { return p.x * (5 * p.z * p.z - 1); }},
      {"l4", [](const Vec3& p) { return 35 * std::pow(p.z, 4) - 30 * p.z * p.z + 3; }},
      {"mix", [](const Vec3& p) {
         return 0.8 * p.z + 1.2 * p.x * p.z + 0.5 * (3 * p.z * p.z - 1) + 0.7 * p.y * (5 * p.z * p.z - 1) +
                0.3 * (p.x * p.x * p.x * p.x - 6 * p.x * p.x * p.y * p.y + p.y * p.y * p.y * p.y);
       }},
  };
  return fields;
}

// Relative RMS error of the order-7 round trip, frozen from the run that
// first validated the resampling path (about 5% above the measured value).
const std::map<std::string, double> kOrder7Bound = {
    {"l1", 1.152e-3}, {"l2", 2.222e-3}, {"l3", 3.185e-3}, {"l4", 3.487e-3}, {"mix", 2.149e-3},
};

Outcome resampling_convergence() {
  const EquirectGeometry g{256, 512};
  const auto& fields = test_fields();
  std::vector<Tensor> images;
  for (const auto& field : fields) {
    Tensor img({1, 256, 512});
    for (int r = 0; r < g.height; ++r)
      for (int c = 0; c < g.width; ++c) img[r * g.width + c] = field.f(to_unit_vector(equirect_pix_to_sph(r, c, g)));
    images.push_back(std::move(img));
  }
  auto rel_rms = [](const Tensor& back, const Tensor& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < back.size(); ++p) {
      num += (back[p] - ref[p]) * (back[p] - ref[p]);
      den += ref[p] * ref[p];
    }
    return std::sqrt(num / den);
  };
  std::vector<std::vector<double>> err(fields.size()), gather_err(fields.size());
  for (int order = 4; order <= 7; ++order) {
    const IcosphereMesh mesh = make_icosphere(order);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const Tensor back = resample_vertices_to_equirect(resample_equirect_to_vertices(images[i], mesh), mesh, g);
      err[i].push_back(rel_rms(back, images[i]));
      const Tensor via_gather = resample_vertices_to_equirect(
          resample_equirect_to_vertices(images[i], mesh, ResampleMode::gather), mesh, g);
      gather_err[i].push_back(rel_rms(via_gather, images[i]));
    }
  }
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& e = err[i];
    const bool monotone = std::is_sorted(e.rbegin(), e.rend()) && std::adjacent_find(e.begin(), e.end()) == e.end();
    const double bound = kOrder7Bound.at(fields[i].name);
    ok &= monotone && e.back() <= bound;
    detail += fmt(" %s:%.4e,%.4e,%.4e,%.4e(<=%.2e)", fields[i].name, e[0], e[1], e[2], e[3], bound);
  }
  // Gather is reported for comparison only; the verdict is on the default path.
  detail += "; gather:";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& e = gather_err[i];
    detail += fmt(" %s:%.2e,%.2e,%.2e,%.2e", fields[i].name, e[0], e[1], e[2], e[3]);
  }
  return {ok, "scatter relative RMS orders 4..7:" + detail};
}

// --- 8 ----------------------------------------------------------------------

Outcome benchmark_shape() {
  BenchConfig cfg;
  cfg.sizes = {{128, 128}, {256, 256}, {512, 512}};
  cfg.channels = 10;
  cfg.trials = 10;
  cfg.warmup = 5;
  cfg.seed = 808;
  const auto records = run_bench(cfg);
  bool ok = true;
  std::map<std::string, std::pair<double, double>> range;
  for (const auto& r : records) {
    if (!r.slowdown_vs_grid) continue;
    const double s = *r.slowdown_vs_grid;
    if (r.height * r.width > 64 * 64) ok &= s >= 1.0;
    const std::string key = std::string(to_string(r.pass)) + "/" + to_string(r.variant);
    auto [it, fresh] = range.try_emplace(key, s, s);
    if (!fresh) it->second = {std::min(it->second.first, s), std::max(it->second.second, s)};
  }
  std::string detail;
  for (const auto& [key, mm] : range) {
    ok &= mm.second / mm.first <= 2.0;
    detail += fmt(" %s %.2f-%.2f", key.c_str(), mm.first, mm.second);
  }
  return {ok, "slowdown vs grid over 128^2..512^2 (min-max):" + detail};
}

// --- 9 ----------------------------------------------------------------------

Outcome area_balance() {
  const auto areas = vertex_voronoi_areas(make_icosphere(7));
  const auto [amin, amax] = std::minmax_element(areas.begin(), areas.end());
  const double ico = *amax / *amin;
  const auto rows = equirect_row_solid_angles({256, 512});
  const auto [rmin, rmax] = std::minmax_element(rows.begin(), rows.end());
  const double eq = *rmax / *rmin;
  return {ico < 2.0 && eq > 100.0,
          fmt("order-7 vertex area max/min %.4f (need < 2), 256x512 pixel solid angle max/min %.2f (need > 100)", ico, eq)};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number; default runs them all.
  std::set<std::size_t> only;
  for (int a = 1; a < argc; ++a) only.insert(static_cast<std::size_t>(std::stoul(argv[a])));
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"grid equivalence", grid_equivalence},
      {"gradient correctness", gradient_correctness},
      {"adjointness", adjointness},
      {"mesh exactness", mesh_exactness},
      {"row preservation", row_preservation},
      {"projection round trips", projection_round_trips},
      {"resampling convergence", resampling_convergence},
      {"benchmark shape", benchmark_shape},
      {"area balance", area_balance},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
