#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mapconv/sample_map.hpp"

namespace mapconv {

enum class BenchPass { forward, backward, fwd_bwd };
enum class BenchVariant { grid, mapped_nearest, mapped_bilinear };

const char* to_string(BenchPass p);
const char* to_string(BenchVariant v);

struct BenchRecord {
  BenchPass pass = BenchPass::forward;
  BenchVariant variant = BenchVariant::grid;
  int channels = 0;
  int height = 0;
  int width = 0;
  int trials = 0;
  double mean_seconds = 0.0;
  // Empty for grid rows.
  std::optional<double> slowdown_vs_grid;
};

struct BenchSize {
  int height = 0;
  int width = 0;
};

struct BenchConfig {
  std::vector<BenchSize> sizes;
  int channels = 10;
  KernelSpec kernel{3, 3, std::nullopt};
  int trials = 100;
  int warmup = 5;
  std::uint64_t seed = 0;
  // OpenMP threads; 0 keeps the runtime default.
  int threads = 0;
};

// Times grid convolution against mapped convolution over a uniformly shuffled
// map (nearest and bilinear) for every size. Map construction and I/O are
// outside the timed region; each trial times one kernel call.
std::vector<BenchRecord> run_bench(const BenchConfig& config,
                                   const std::function<void(const std::string&)>& progress = {});

inline constexpr const char* kBenchCsvHeader =
    "pass,variant,channels,height,width,trials,mean_seconds,slowdown_vs_grid";

// One "# ..." descriptor line, the header, then one row per record.
void write_bench_csv(std::ostream& out, const BenchConfig& config, const std::vector<BenchRecord>& records);

}  // namespace mapconv
