#pragma once

#include <cstdint>

#include "mapconv/mapped_conv.hpp"

namespace mapconv {

struct GradCheckOptions {
  double step = 1e-6;
  // Perturbs the analytic weight gradient to exercise the failure path.
  bool corrupt_weight_grad = false;
};

// Worst error per parameter group, each measured as
//   max_i |analytic_i - numeric_i| / max_i max(|analytic_i|, |numeric_i|).
struct GradCheckReport {
  double input_error = 0.0;
  double weight_error = 0.0;
  double bias_error = 0.0;

  double worst() const;
  bool passed(double tolerance = 1e-6) const { return worst() < tolerance; }
};

// Central finite differences of L = <r, forward(x)> for a random instance
// (input x, weights, bias, projection r all drawn from `seed`).
GradCheckReport gradient_check(const SampleMap& map, int c_in, int c_out, std::uint64_t seed,
                               const GradCheckOptions& options = {});

// Same for an arbitrary instance.
GradCheckReport gradient_check(const SampleMap& map, const Tensor& input, const ConvParams<double>& params,
                               const Tensor& projection, const GradCheckOptions& options = {});

// max_i |a_i - b_i| / max_i max(|a_i|, |b_i|); 0 when both are all zero.
double group_relative_error(std::span<const double> analytic, std::span<const double> numeric);

}  // namespace mapconv
