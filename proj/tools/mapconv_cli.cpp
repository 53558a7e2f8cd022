// mapconv command-line tool: map generation, convolution, gradient checks,
// resampling, meshes and the grid-vs-mapped benchmark.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mapconv/bench.hpp"
#include "mapconv/errors.hpp"
#include "mapconv/gradcheck.hpp"
#include "mapconv/grid_conv.hpp"
#include "mapconv/icosphere.hpp"
#include "mapconv/map_io.hpp"
#include "mapconv/mapped_conv.hpp"
#include "mapconv/sphere_maps.hpp"
#include "mapconv/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace mapconv;

namespace {

constexpr std::int64_t kGradcheckMaxInput = 4096;

// Thrown for bad flag combinations discovered after parsing.
struct UsageError : Error {
  using Error::Error;
};

struct MapFlags {
  std::string type;
  int h = 0;
  int w = 0;
  int kh = 3;
  int kw = 3;
  int stride = 1;
  int pad = 0;
  int dilation = 1;
  std::uint64_t seed = 0;
  std::string interp = "bilinear";
  int face_dim = 0;
  int order = -1;
  int order_out = -1;
  std::optional<double> delta;
  std::string subdivision = "midpoint";
};

const std::vector<std::string> kMapTypes = {"grid", "shuffle", "equirect-gnomonic", "equirect-equirect", "cubemap",
                                            "isea"};

void add_map_flags(CLI::App* cmd, MapFlags& f) {
  cmd->add_option("--h", f.h, "Input image height");
  cmd->add_option("--w", f.w, "Input image width");
  cmd->add_option("--kh", f.kh, "Kernel height")->capture_default_str();
  cmd->add_option("--kw", f.kw, "Kernel width")->capture_default_str();
  cmd->add_option("--stride", f.stride, "Grid stride (both axes)")->capture_default_str();
  cmd->add_option("--pad", f.pad, "Grid zero padding (both axes)")->capture_default_str();
  cmd->add_option("--dilation", f.dilation, "Grid dilation (both axes)")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Shuffle seed")->capture_default_str();
  cmd->add_option("--interp", f.interp, "Interpolation for image-domain taps")
      ->check(CLI::IsMember({"nearest", "bilinear"}))
      ->capture_default_str();
  cmd->add_option("--face-dim", f.face_dim, "Cube face size in pixels");
  cmd->add_option("--order", f.order, "Icosphere order of the input mesh");
  cmd->add_option("--order-out", f.order_out, "Icosphere order of the output mesh (order or order-1)");
  cmd->add_option("--delta", f.delta, "Kernel angular pitch in radians");
  cmd->add_option("--subdivision", f.subdivision, "Icosphere subdivision rule")
      ->check(CLI::IsMember({"midpoint", "loop"}))
      ->capture_default_str();
}

Subdivision parse_subdivision(const std::string& s) { return s == "loop" ? Subdivision::loop : Subdivision::midpoint; }

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

void warn_aspect(int h, int w) {
  if (w != 2 * h) {
    std::cerr << "warning: " << h << "x" << w << " equirectangular image does not cover the full sphere (width != 2*height)\n";
  }
}

SampleMap build_map(const MapFlags& f) {
  const KernelSpec kernel{f.kh, f.kw, f.delta};
  const Interpolation interp = parse_interpolation(f.interp);
  if (f.type == "grid" || f.type == "shuffle") {
    require(f.h > 0 && f.w > 0, f.type + " map needs --h and --w");
    if (f.type == "grid") {
      return make_grid_map(f.h, f.w, kernel, {f.stride, f.stride}, {f.pad, f.pad}, {f.dilation, f.dilation});
    }
    return make_shuffle_map(f.h, f.w, kernel, f.seed, interp);
  }
  if (f.type == "equirect-gnomonic" || f.type == "equirect-equirect") {
    require(f.h > 0 && f.w > 0, f.type + " map needs --h and --w");
    warn_aspect(f.h, f.w);
    const Projection p = f.type == "equirect-gnomonic" ? Projection::gnomonic : Projection::equirect;
    return make_equirect_map({f.h, f.w}, kernel, p, interp);
  }
  if (f.type == "cubemap") {
    require(f.face_dim > 0, "cubemap map needs --face-dim");
    return make_cubemap_map(f.face_dim, kernel, interp);
  }
  if (f.type == "isea") {
    require(f.order >= 0, "isea map needs --order");
    const int out_order = f.order_out >= 0 ? f.order_out : f.order;
    require(out_order == f.order || out_order == f.order - 1, "--order-out must equal --order or --order minus one");
    const IcosphereMesh in = make_icosphere(f.order, parse_subdivision(f.subdivision));
    if (out_order == f.order) return make_isea_map(in, in, kernel);
    return make_isea_map(in, make_icosphere(out_order, parse_subdivision(f.subdivision)), kernel);
  }
  throw UsageError("unknown map type '" + f.type + "'");
}

void print_summary(const SampleMap& map) {
  const auto hist = map.tap_histogram();
  std::cout << "n_in=" << map.n_in() << " n_out=" << map.n_out() << " k=" << map.k() << " taps:";
  for (std::size_t c = 0; c < hist.size(); ++c) std::cout << ' ' << c << '=' << hist[c];
  std::cout << '\n';
}

// Any tensor as (C, N).
Tensor flatten(Tensor t) {
  const std::size_t c = t.channels();
  const std::size_t n = t.spatial_size();
  t.reshape({c, n});
  return t;
}

int cmd_genmap(const MapFlags& f, const std::string& out) {
  const SampleMap map = build_map(f);
  if (!out.empty()) write_sample_map(fs::path(out), map);
  std::cout << map.descriptor() << '\n';
  print_summary(map);
  return 0;
}

struct ConvFlags {
  std::string input;
  std::string map;
  std::string weights;
  std::optional<std::uint64_t> random_weights;
  int cout = 1;
  std::string out;
  bool check_grid = false;
};

ConvParams<double> load_weights(const ConvFlags& c, int c_in, int k) {
  if (c.random_weights) return ConvParams<double>::random(c_in, c.cout, k, *c.random_weights);
  const Tensor w = read_vtxt(fs::path(c.weights));
  const auto expect = static_cast<std::size_t>(c_in) * k + 1;
  if (w.dim(1) != expect) {
    throw DimensionError("weights file holds rows of " + std::to_string(w.dim(1)) + " values, expected c_in*k+1 = " +
                         std::to_string(expect) + " (c_in=" + std::to_string(c_in) + ", k=" + std::to_string(k) + ")");
  }
  const int c_out = static_cast<int>(w.channels());
  ConvParams<double> p(c_in, c_out, k);
  for (int co = 0; co < c_out; ++co) {
    auto row = w.channel(co);
    std::copy(row.begin(), row.end() - 1, p.weights.begin() + static_cast<std::ptrdiff_t>(co) * c_in * k);
    p.bias[co] = row.back();
  }
  return p;
}

int cmd_conv(const ConvFlags& c, const MapFlags& grid) {
  require(c.random_weights.has_value() != !c.weights.empty(), "give exactly one of --weights or --random-weights");
  const Tensor raw = read_tensor(fs::path(c.input));
  const SampleMap map = read_sample_map(fs::path(c.map));
  const Tensor input = flatten(raw);
  if (static_cast<std::int64_t>(input.spatial_size()) != map.n_in()) {
    throw DimensionError("input " + raw.shape_string() + " has " + std::to_string(input.spatial_size()) +
                         " spatial elements but the map expects n_in=" + std::to_string(map.n_in()));
  }
  const int c_in = static_cast<int>(input.channels());
  const ConvParams<double> params = load_weights(c, c_in, map.k());
  Tensor output = mapped_conv_forward(input, map, params);

  int status = 0;
  if (c.check_grid) {
    require(grid.h > 0 && grid.w > 0, "--check-against-grid needs the grid geometry (--h --w --kh --kw ...)");
    const GridGeometry g{grid.h, grid.w, grid.kh, grid.kw, {grid.stride, grid.stride}, {grid.pad, grid.pad},
                         {grid.dilation, grid.dilation}};
    g.validate();
    const SampleMap expect = make_grid_map(g.height, g.width, KernelSpec{g.kernel_h, g.kernel_w, {}}, g.stride,
                                           g.padding, g.dilation);
    if (!(expect == map)) throw UsageError("map file is not the grid map for the given geometry");
    Tensor image = input;
    image.reshape({input.channels(), static_cast<std::size_t>(g.height), static_cast<std::size_t>(g.width)});
    const Tensor ref = grid_conv_reference(image, params, g);
    double diff = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) diff = std::max(diff, std::abs(ref[i] - output[i]));
    const bool ok = diff <= 1e-12;
    std::printf("grid check: max abs diff %.3e (%s)\n", diff, ok ? "ok" : "MISMATCH");
    if (!ok) status = 1;
  }

  if (!c.out.empty()) {
    const fs::path out(c.out);
    if (out.extension() == ".pfm") {
      require(raw.rank() == 3 && static_cast<std::int64_t>(raw.dim(1) * raw.dim(2)) == map.n_out(),
              "PFM output needs an image-shaped result; write .vtxt instead");
      output.reshape({output.channels(), raw.dim(1), raw.dim(2)});
    }
    write_tensor(out, output);
  }
  std::cout << "output " << output.shape_string() << '\n';
  return status;
}

struct GradFlags {
  std::string map;
  int cin = 2;
  int cout = 2;
  std::uint64_t seed = 0;
  bool corrupt = false;
};

int cmd_gradcheck(const GradFlags& g, const MapFlags& f) {
  require(g.map.empty() != f.type.empty(), "give exactly one of --map or --type");
  const SampleMap map = g.map.empty() ? build_map(f) : read_sample_map(fs::path(g.map));
  if (map.n_in() > kGradcheckMaxInput) {
    throw UsageError("gradcheck is limited to n_in <= " + std::to_string(kGradcheckMaxInput) + ", map has n_in=" +
                     std::to_string(map.n_in()));
  }
  GradCheckOptions opt;
  opt.corrupt_weight_grad = g.corrupt;
  const GradCheckReport r = gradient_check(map, g.cin, g.cout, g.seed, opt);
  std::printf("input   %.3e\nweights %.3e\nbias    %.3e\n", r.input_error, r.weight_error, r.bias_error);
  const bool ok = r.passed();
  std::printf("%s (tolerance 1e-6)\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

struct ResampleFlags {
  std::string direction;
  std::string input;
  std::string out;
  int order = -1;
  int h = 0;
  int w = 0;
  int face_dim = 0;
  std::string mode = "scatter";
  std::string subdivision = "midpoint";
};

int cmd_resample(const ResampleFlags& r) {
  const Tensor in = read_tensor(fs::path(r.input));
  Tensor out;
  if (r.direction == "eq2ico" || r.direction == "ico2eq") {
    require(r.order >= 0, r.direction + " needs --order");
    const IcosphereMesh mesh = make_icosphere(r.order, parse_subdivision(r.subdivision));
    if (r.direction == "eq2ico") {
      require(in.rank() == 3, "eq2ico input must be an equirectangular image");
      warn_aspect(static_cast<int>(in.dim(1)), static_cast<int>(in.dim(2)));
      out = resample_equirect_to_vertices(in, mesh, r.mode == "gather" ? ResampleMode::gather : ResampleMode::scatter);
    } else {
      require(r.h > 0 && r.w > 0, "ico2eq needs --h and --w");
      out = resample_vertices_to_equirect(flatten(in), mesh, {r.h, r.w});
    }
  } else if (r.direction == "eq2cube") {
    require(r.face_dim > 0, "eq2cube needs --face-dim");
    out = resample_equirect_to_cube(in, r.face_dim);
  } else {
    require(r.h > 0 && r.w > 0, "cube2eq needs --h and --w");
    out = resample_cube_to_equirect(in, {r.h, r.w});
  }
  write_tensor(fs::path(r.out), out);
  std::cout << r.direction << ": " << in.shape_string() << " -> " << out.shape_string() << '\n';
  return 0;
}

std::vector<BenchSize> parse_sizes(const std::string& list) {
  std::vector<BenchSize> sizes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto x = item.find('x');
    try {
      if (x == std::string::npos) {
        const int s = std::stoi(item);
        sizes.push_back({s, s});
      } else {
        sizes.push_back({std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1))});
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad size '" + item + "' (expected N or HxW)");
    }
    require(sizes.back().height > 0 && sizes.back().width > 0, "sizes must be positive");
  }
  require(!sizes.empty(), "--sizes is empty");
  return sizes;
}

int cmd_bench(BenchConfig cfg, const std::string& sizes, int kh, int kw, const std::string& out) {
  cfg.sizes = parse_sizes(sizes);
  cfg.kernel = KernelSpec{kh, kw, std::nullopt};
  const auto records = run_bench(cfg, [](const std::string& line) { std::cerr << line << '\n'; });
  if (out.empty()) {
    write_bench_csv(std::cout, cfg, records);
  } else {
    std::ofstream file(out);
    if (!file) throw Error("cannot open " + out + " for writing");
    write_bench_csv(file, cfg, records);
  }
  return 0;
}

int cmd_icosphere(int order, const std::string& subdivision, const std::string& out) {
  const IcosphereMesh mesh = make_icosphere(order, parse_subdivision(subdivision));
  const auto v = mesh.vertex_count();
  const auto e = mesh.edge_count();
  const auto f = static_cast<std::int64_t>(mesh.faces().size());
  if (!out.empty()) {
    std::ofstream file(out);
    if (!file) throw Error("cannot open " + out + " for writing");
    write_obj(file, mesh);
  }
  std::printf("order=%d V=%lld E=%lld F=%lld V-E+F=%lld mean_neighbor_angle=%.12g\n", order,
              static_cast<long long>(v), static_cast<long long>(e), static_cast<long long>(f),
              static_cast<long long>(v - e + f), mean_neighbor_angle(mesh));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mapped convolution toolkit"};
  app.set_help_flag("--help", "Print help and exit");
  app.require_subcommand(1);

  MapFlags map_flags;
  std::string out;

  auto* genmap = app.add_subcommand("genmap", "Generate a sample map (MAPC file)");
  genmap->add_option("type", map_flags.type, "Map type")->required()->check(CLI::IsMember(kMapTypes));
  add_map_flags(genmap, map_flags);
  genmap->add_option("--out", out, "Output .mapc file");

  ConvFlags conv;
  auto* conv_cmd = app.add_subcommand("conv", "Apply a mapped convolution");
  conv_cmd->add_option("--input", conv.input, "Input tensor (.pfm or .vtxt)")->required();
  conv_cmd->add_option("--map", conv.map, "Sample map file")->required();
  conv_cmd->add_option("--weights", conv.weights, "VTXT weights, one row of c_in*k weights plus bias per output channel");
  conv_cmd->add_option("--random-weights", conv.random_weights, "Seed for random weights instead of --weights");
  conv_cmd->add_option("--cout", conv.cout, "Output channels for --random-weights")->capture_default_str();
  conv_cmd->add_option("--out", conv.out, "Output tensor (.pfm or .vtxt)");
  conv_cmd->add_flag("--check-against-grid", conv.check_grid, "Compare against dense grid convolution");
  MapFlags conv_grid;
  conv_cmd->add_option("--h", conv_grid.h, "Grid height for --check-against-grid");
  conv_cmd->add_option("--w", conv_grid.w, "Grid width for --check-against-grid");
  conv_cmd->add_option("--kh", conv_grid.kh, "Grid kernel height")->capture_default_str();
  conv_cmd->add_option("--kw", conv_grid.kw, "Grid kernel width")->capture_default_str();
  conv_cmd->add_option("--stride", conv_grid.stride, "Grid stride")->capture_default_str();
  conv_cmd->add_option("--pad", conv_grid.pad, "Grid padding")->capture_default_str();
  conv_cmd->add_option("--dilation", conv_grid.dilation, "Grid dilation")->capture_default_str();

  GradFlags grad;
  MapFlags grad_map;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the backward passes");
  grad_cmd->add_option("--map", grad.map, "Sample map file");
  grad_cmd->add_option("--type", grad_map.type, "Generate the map instead")->check(CLI::IsMember(kMapTypes));
  add_map_flags(grad_cmd, grad_map);
  grad_cmd->add_option("--cin", grad.cin, "Input channels")->capture_default_str();
  grad_cmd->add_option("--cout", grad.cout, "Output channels")->capture_default_str();
  grad_cmd->add_option("--instance-seed", grad.seed, "Seed for the random instance")->capture_default_str();
  grad_cmd->add_flag("--corrupt", grad.corrupt, "Perturb the analytic weight gradient (harness self-test)");

  ResampleFlags rs;
  auto* rs_cmd = app.add_subcommand("resample", "Resample between equirectangular, icosphere and cube maps");
  rs_cmd->add_option("direction", rs.direction, "Direction")
      ->required()
      ->check(CLI::IsMember({"eq2ico", "ico2eq", "eq2cube", "cube2eq"}));
  rs_cmd->add_option("--input", rs.input, "Input tensor")->required();
  rs_cmd->add_option("--out", rs.out, "Output tensor")->required();
  rs_cmd->add_option("--order", rs.order, "Icosphere order");
  rs_cmd->add_option("--h", rs.h, "Equirectangular output height");
  rs_cmd->add_option("--w", rs.w, "Equirectangular output width");
  rs_cmd->add_option("--face-dim", rs.face_dim, "Cube face size");
  rs_cmd->add_option("--mode", rs.mode, "eq2ico accumulation")
      ->check(CLI::IsMember({"scatter", "gather"}))
      ->capture_default_str();
  rs_cmd->add_option("--subdivision", rs.subdivision, "Icosphere subdivision rule")
      ->check(CLI::IsMember({"midpoint", "loop"}))
      ->capture_default_str();

  BenchConfig bench;
  std::string sizes = "64,128,256,512,1024";
  int bench_kh = 3, bench_kw = 3;
  auto* bench_cmd = app.add_subcommand("bench", "Time grid against shuffled mapped convolution");
  bench_cmd->add_option("--sizes", sizes, "Comma-separated sizes, N or HxW")->capture_default_str();
  bench_cmd->add_option("--channels", bench.channels, "Channels in and out")->capture_default_str();
  bench_cmd->add_option("--kh", bench_kh, "Kernel height (odd)")->capture_default_str();
  bench_cmd->add_option("--kw", bench_kw, "Kernel width (odd)")->capture_default_str();
  bench_cmd->add_option("--trials", bench.trials, "Timed trials per measurement")->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup, "Discarded warm-up runs")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Seed for data and shuffle")->capture_default_str();
  bench_cmd->add_option("--threads", bench.threads, "OpenMP threads (0 = runtime default)")->capture_default_str();
  bench_cmd->add_option("--out", out, "CSV output (default stdout)");

  int ico_order = 0;
  std::string ico_sub = "midpoint";
  auto* ico_cmd = app.add_subcommand("icosphere", "Build an icosphere and write it as OBJ");
  ico_cmd->add_option("--order", ico_order, "Subdivision order")->required();
  ico_cmd->add_option("--subdivision", ico_sub, "Subdivision rule")
      ->check(CLI::IsMember({"midpoint", "loop"}))
      ->capture_default_str();
  ico_cmd->add_option("--out", out, "Output .obj file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*genmap) return cmd_genmap(map_flags, out);
    if (*conv_cmd) return cmd_conv(conv, conv_grid);
    if (*grad_cmd) return cmd_gradcheck(grad, grad_map);
    if (*rs_cmd) return cmd_resample(rs);
    if (*bench_cmd) return cmd_bench(bench, sizes, bench_kh, bench_kw, out);
    if (*ico_cmd) return cmd_icosphere(ico_order, ico_sub, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
