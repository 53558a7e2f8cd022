#include "mapconv/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mapconv {

double GradCheckReport::worst() const { return std::max({input_error, weight_error, bias_error}); }

double group_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw DimensionError("gradient groups differ in size");
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale > 0.0 ? diff / scale : diff;
}

namespace {

// <r, y+ - y-> / (2h); differencing the outputs before the reduction keeps
// the rounding error proportional to the perturbation, not to |L|.
double central_difference(const Tensor& projection, const Tensor& plus, const Tensor& minus, double step) {
  double acc = 0.0;
  for (std::size_t i = 0; i < projection.size(); ++i) acc += projection[i] * (plus[i] - minus[i]);
  return acc / (2.0 * step);
}

}  // namespace

GradCheckReport gradient_check(const SampleMap& map, const Tensor& input, const ConvParams<double>& params,
                               const Tensor& projection, const GradCheckOptions& options) {
  const double h = options.step;
  const Tensor grad_input = mapped_conv_backward_input(projection, map, params);
  ParamGrads<double> grads = mapped_conv_backward_params(projection, input, map);
  if (options.corrupt_weight_grad && !grads.weights.empty()) {
    double scale = 1.0;
    for (const double g : grads.weights) scale = std::max(scale, std::abs(g));
    grads.weights[grads.weights.size() / 2] += 0.01 * scale;
  }

  std::vector<double> numeric_input(input.size());
  Tensor probe = input;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const Tensor plus = mapped_conv_forward(probe, map, params);
    probe[i] = saved - h;
    const Tensor minus = mapped_conv_forward(probe, map, params);
    probe[i] = saved;
    numeric_input[i] = central_difference(projection, plus, minus, h);
  }

  ConvParams<double> p = params;
  std::vector<double> numeric_weights(p.weights.size());
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    const double saved = p.weights[i];
    p.weights[i] = saved + h;
    const Tensor plus = mapped_conv_forward(input, map, p);
    p.weights[i] = saved - h;
    const Tensor minus = mapped_conv_forward(input, map, p);
    p.weights[i] = saved;
    numeric_weights[i] = central_difference(projection, plus, minus, h);
  }

  std::vector<double> numeric_bias(p.bias.size());
  for (std::size_t i = 0; i < p.bias.size(); ++i) {
    const double saved = p.bias[i];
    p.bias[i] = saved + h;
    const Tensor plus = mapped_conv_forward(input, map, p);
    p.bias[i] = saved - h;
    const Tensor minus = mapped_conv_forward(input, map, p);
    p.bias[i] = saved;
    numeric_bias[i] = central_difference(projection, plus, minus, h);
  }

  return {group_relative_error(grad_input.values(), numeric_input),
          group_relative_error(grads.weights, numeric_weights), group_relative_error(grads.bias, numeric_bias)};
}

GradCheckReport gradient_check(const SampleMap& map, int c_in, int c_out, std::uint64_t seed,
                               const GradCheckOptions& options) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor input({static_cast<std::size_t>(c_in), static_cast<std::size_t>(map.n_in())});
  for (auto& v : input.values()) v = normal(rng);
  Tensor projection({static_cast<std::size_t>(c_out), static_cast<std::size_t>(map.n_out())});
  for (auto& v : projection.values()) v = normal(rng);
  const auto params = ConvParams<double>::random(c_in, c_out, map.k(), rng());
  return gradient_check(map, input, params, projection, options);
}

}  // namespace mapconv
