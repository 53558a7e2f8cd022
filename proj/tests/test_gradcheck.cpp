#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mapconv/gradcheck.hpp"
#include "mapconv/icosphere.hpp"
#include "mapconv/sphere_maps.hpp"
#include "oracles.hpp"

namespace mapconv {
namespace {

const KernelSpec k3{3, 3, {}};

TEST(GroupError, Definition) {
  std::vector<double> a{1.0, -2.0, 0.5}, b{1.0, -2.1, 0.5};
  EXPECT_NEAR(group_relative_error(a, b), 0.1 / 2.1, 1e-15);
  std::vector<double> z{0.0, 0.0};
  EXPECT_EQ(group_relative_error(z, z), 0.0);
}

TEST(GradCheck, EveryMapFamily) {
  auto ico2 = make_icosphere(2), ico1 = make_icosphere(1);
  const SampleMap maps[] = {
      make_grid_map(6, 7, k3, {2, 1}, {1, 1}, {1, 2}),
      make_shuffle_map(6, 6, k3, 3),
      make_shuffle_map(6, 6, k3, 3, Interpolation::bilinear),
      make_equirect_map({6, 12}, k3, Projection::gnomonic, Interpolation::bilinear),
      make_equirect_map({6, 12}, k3, Projection::equirect, Interpolation::bilinear),
      make_cubemap_map(3, k3, Interpolation::bilinear),
      make_isea_map(ico2, ico2, k3),
      make_isea_map(ico2, ico1, k3),
  };
  std::uint64_t seed = 0;
  for (const auto& map : maps) {
    auto report = gradient_check(map, 2, 3, ++seed);
    EXPECT_LT(report.input_error, 1e-6) << map.descriptor();
    EXPECT_LT(report.weight_error, 1e-6) << map.descriptor();
    EXPECT_LT(report.bias_error, 1e-6) << map.descriptor();
    EXPECT_TRUE(report.passed());
  }
}

TEST(GradCheck, CorruptedGradientFails) {
  auto map = make_grid_map(5, 5, k3, {1, 1}, {1, 1});
  GradCheckOptions opt;
  opt.corrupt_weight_grad = true;
  auto report = gradient_check(map, 1, 2, 7, opt);
  EXPECT_GT(report.weight_error, 1e-3);
  EXPECT_FALSE(report.passed());
}

// Image -> icosphere -> coarser icosphere, checked end to end by hand.
TEST(GradCheck, StackedLayersCompose) {
  auto fine = make_icosphere(2), coarse = make_icosphere(1);
  const EquirectGeometry g{8, 16};
  std::vector<Sample> to_mesh;
  for (const auto& v : fine.vertices()) to_mesh.push_back(equirect_sample(g, from_unit_vector(v), Interpolation::bilinear));
  // 1x1 "kernel" that lifts the image onto the mesh vertices.
  SampleMap lift(g.pixels(), fine.vertex_count(), 1, to_mesh);
  SampleMap down = make_isea_map(fine, coarse, k3);

  std::mt19937_64 rng(5);
  auto p1 = ConvParams<double>::random(2, 3, 1, 1);
  auto p2 = ConvParams<double>::random(3, 2, 9, 2);
  Tensor x = oracle::random_tensor({2, std::size_t(g.pixels())}, rng);
  Tensor r = oracle::random_tensor({2, std::size_t(coarse.vertex_count())}, rng);

  auto loss = [&](const Tensor& in, const ConvParams<double>& a, const ConvParams<double>& b) {
    return oracle::dot(r, mapped_conv_forward(mapped_conv_forward(in, lift, a), down, b));
  };

  const Tensor h = mapped_conv_forward(x, lift, p1);
  const Tensor gh = mapped_conv_backward_input(r, down, p2);
  const Tensor gx = mapped_conv_backward_input(gh, lift, p1);
  const auto g1 = mapped_conv_backward_params(gh, x, lift);
  const auto g2 = mapped_conv_backward_params(r, h, down);

  const double step = 1e-6;
  std::vector<double> nx(x.size()), n1(p1.weights.size()), n2(p2.weights.size());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = loss(probe, p1, p2);
    probe[i] = x[i] - step;
    nx[i] = (up - loss(probe, p1, p2)) / (2 * step);
    probe[i] = x[i];
  }
  auto q1 = p1;
  for (std::size_t i = 0; i < q1.weights.size(); ++i) {
    q1.weights[i] = p1.weights[i] + step;
    const double up = loss(x, q1, p2);
    q1.weights[i] = p1.weights[i] - step;
    n1[i] = (up - loss(x, q1, p2)) / (2 * step);
    q1.weights[i] = p1.weights[i];
  }
  auto q2 = p2;
  for (std::size_t i = 0; i < q2.weights.size(); ++i) {
    q2.weights[i] = p2.weights[i] + step;
    const double up = loss(x, p1, q2);
    q2.weights[i] = p2.weights[i] - step;
    n2[i] = (up - loss(x, p1, q2)) / (2 * step);
    q2.weights[i] = p2.weights[i];
  }
  EXPECT_LT(group_relative_error(gx.values(), nx), 1e-6);
  EXPECT_LT(group_relative_error(g1.weights, n1), 1e-6);
  EXPECT_LT(group_relative_error(g2.weights, n2), 1e-6);
}

}  // namespace
}  // namespace mapconv
