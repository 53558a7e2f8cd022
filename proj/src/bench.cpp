#include "mapconv/bench.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>

#include <omp.h>

#include "mapconv/grid_conv.hpp"
#include "mapconv/mapped_conv.hpp"

namespace mapconv {

const char* to_string(BenchPass p) {
  switch (p) {
    case BenchPass::forward: return "forward";
    case BenchPass::backward: return "backward";
    case BenchPass::fwd_bwd: return "fwd+bwd";
  }
  return "?";
}

const char* to_string(BenchVariant v) {
  switch (v) {
    case BenchVariant::grid: return "grid";
    case BenchVariant::mapped_nearest: return "mapped-nearest";
    case BenchVariant::mapped_bilinear: return "mapped-bilinear";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

// Trials run round-robin across all bodies so slow spells on a shared
// machine land on every variant rather than on whichever ran at the time.
std::vector<double> interleaved_means(int warmup, int trials, const std::vector<std::function<void()>>& bodies) {
  for (int i = 0; i < warmup; ++i)
    for (const auto& body : bodies) body();
  std::vector<double> total(bodies.size(), 0.0);
  for (int i = 0; i < trials; ++i) {
    for (std::size_t b = 0; b < bodies.size(); ++b) {
      const auto start = Clock::now();
      bodies[b]();
      total[b] += std::chrono::duration<double>(Clock::now() - start).count();
    }
  }
  for (auto& t : total) t /= trials;
  return total;
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchConfig& config, const std::function<void(const std::string&)>& progress) {
  config.kernel.validate();
  if (config.kernel.height % 2 == 0 || config.kernel.width % 2 == 0) {
    throw ParameterError("benchmark kernels must have odd dimensions");
  }
  if (config.channels < 1 || config.trials < 1 || config.warmup < 0) {
    throw ParameterError("benchmark needs positive channels and trials");
  }
  if (config.threads > 0) omp_set_num_threads(config.threads);

  std::vector<BenchRecord> records;
  for (const auto& size : config.sizes) {
    if (size.height < 1 || size.width < 1) throw ParameterError("benchmark sizes must be positive");
    const GridGeometry geom{size.height, size.width, config.kernel.height, config.kernel.width, {1, 1},
                            {(config.kernel.height - 1) / 2, (config.kernel.width - 1) / 2}, {1, 1}};
    const int k = config.kernel.size();
    const auto c = static_cast<std::size_t>(config.channels);
    const auto n = static_cast<std::size_t>(size.height) * size.width;

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor input({c, static_cast<std::size_t>(size.height), static_cast<std::size_t>(size.width)});
    for (auto& v : input.values()) v = normal(rng);
    Tensor grad_out({c, n});
    for (auto& v : grad_out.values()) v = normal(rng);
    const auto params = ConvParams<double>::random(config.channels, config.channels, k, rng());

    auto record = [&](BenchPass pass, BenchVariant variant, double seconds) {
      records.push_back({pass, variant, config.channels, size.height, size.width, config.trials, seconds, std::nullopt});
      if (progress) {
        char line[160];
        std::snprintf(line, sizeof line, "%s %s %dx%dx%d: %.6g s", to_string(pass), to_string(variant),
                      config.channels, size.height, size.width, seconds);
        progress(line);
      }
    };

    const SampleMap nearest = make_shuffle_map(size.height, size.width, config.kernel, config.seed, Interpolation::nearest);
    const SampleMap bilinear =
        make_shuffle_map(size.height, size.width, config.kernel, config.seed, Interpolation::bilinear);
    const AdjointIndex nearest_adj(nearest), bilinear_adj(bilinear);

    auto grid_fwd = [&] { (void)grid_conv_reference(input, params, geom); };
    auto grid_bwd = [&] {
      (void)grid_conv_backward_input(grad_out, params, geom);
      (void)grid_conv_backward_params(grad_out, input, geom);
    };
    auto mapped_fwd = [&](const SampleMap& map) { (void)mapped_conv_forward(input, map, params); };
    auto mapped_bwd = [&](const SampleMap& map, const AdjointIndex& adjoint) {
      (void)mapped_conv_backward_input(grad_out, map, adjoint, params);
      (void)mapped_conv_backward_params(grad_out, input, map);
    };

    const std::vector<std::pair<BenchPass, BenchVariant>> labels = {
        {BenchPass::forward, BenchVariant::grid},
        {BenchPass::backward, BenchVariant::grid},
        {BenchPass::fwd_bwd, BenchVariant::grid},
        {BenchPass::forward, BenchVariant::mapped_nearest},
        {BenchPass::backward, BenchVariant::mapped_nearest},
        {BenchPass::fwd_bwd, BenchVariant::mapped_nearest},
        {BenchPass::forward, BenchVariant::mapped_bilinear},
        {BenchPass::backward, BenchVariant::mapped_bilinear},
        {BenchPass::fwd_bwd, BenchVariant::mapped_bilinear},
    };
    const std::vector<std::function<void()>> bodies = {
        grid_fwd,
        grid_bwd,
        [&] { grid_fwd(); grid_bwd(); },
        [&] { mapped_fwd(nearest); },
        [&] { mapped_bwd(nearest, nearest_adj); },
        [&] { mapped_fwd(nearest); mapped_bwd(nearest, nearest_adj); },
        [&] { mapped_fwd(bilinear); },
        [&] { mapped_bwd(bilinear, bilinear_adj); },
        [&] { mapped_fwd(bilinear); mapped_bwd(bilinear, bilinear_adj); },
    };
    const auto means = interleaved_means(config.warmup, config.trials, bodies);
    for (std::size_t i = 0; i < labels.size(); ++i) record(labels[i].first, labels[i].second, means[i]);
  }

  // Slowdown relative to the grid row with the same size and pass.
  for (auto& r : records) {
    if (r.variant == BenchVariant::grid) continue;
    for (const auto& g : records) {
      if (g.variant == BenchVariant::grid && g.pass == r.pass && g.height == r.height && g.width == r.width) {
        r.slowdown_vs_grid = r.mean_seconds / g.mean_seconds;
      }
    }
  }
  return records;
}

void write_bench_csv(std::ostream& out, const BenchConfig& config, const std::vector<BenchRecord>& records) {
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
  out << "# mapconv bench threads=" << threads << " kernel=" << config.kernel.height << "x" << config.kernel.width
      << " warmup=" << config.warmup << " seed=" << config.seed << " precision=double\n";
  out << kBenchCsvHeader << '\n';
  char buf[64];
  for (const auto& r : records) {
    out << to_string(r.pass) << ',' << to_string(r.variant) << ',' << r.channels << ',' << r.height << ',' << r.width
        << ',' << r.trials << ',';
    std::snprintf(buf, sizeof buf, "%.9g", r.mean_seconds);
    out << buf << ',';
    if (r.slowdown_vs_grid) {
      std::snprintf(buf, sizeof buf, "%.6g", *r.slowdown_vs_grid);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace mapconv
