#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mapconv/errors.hpp"
#include "mapconv/grid_conv.hpp"
#include "mapconv/icosphere.hpp"
#include "mapconv/mapped_conv.hpp"
#include "mapconv/sphere_maps.hpp"
#include "oracles.hpp"

namespace mapconv {
namespace {

Tensor ones(std::size_t c, std::size_t n) { return Tensor({c, n}, 1.0); }

TEST(Im2col, IdentityMapReshapes) {
  auto map = make_grid_map(3, 4, KernelSpec{1, 1, {}});
  std::mt19937_64 rng(1);
  Tensor x = oracle::random_tensor({2, 12}, rng);
  Tensor cols = mapped_im2col(x, map);
  ASSERT_EQ(cols.shape(), (std::vector<std::size_t>{2, 12}));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(cols[i], x[i]);
}

TEST(Im2col, PaddedNeighbourhoods) {
  auto map = make_grid_map(3, 3, KernelSpec{3, 3, {}}, {1, 1}, {1, 1});
  Tensor cols = mapped_im2col(ones(1, 9), map);
  double centre = 0.0, corner = 0.0;
  for (int m = 0; m < 9; ++m) {
    centre += cols.at(m, 4);
    corner += cols.at(m, 0);
  }
  EXPECT_EQ(centre, 9.0);
  EXPECT_EQ(corner, 4.0);
}

TEST(Im2col, BilinearConstant) {
  std::vector<Sample> s{bilinear_taps({0.5, 0.5}, 2, 2)};
  SampleMap map(4, 1, 1, s);
  Tensor x({1, 4}, 3.25);
  EXPECT_EQ(mapped_im2col(x, map)[0], 3.25);
}

TEST(Im2col, SizeMismatch) {
  auto map = make_grid_map(3, 3, KernelSpec{1, 1, {}});
  EXPECT_THROW(mapped_im2col(ones(1, 8), map), DimensionError);
}

TEST(Forward, IdentityConvolution) {
  auto map = make_grid_map(4, 4, KernelSpec{1, 1, {}});
  ConvParams<double> p(1, 1, 1, {1.0}, {0.0});
  std::mt19937_64 rng(2);
  Tensor x = oracle::random_tensor({1, 16}, rng);
  Tensor y = mapped_conv_forward(x, map, p);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Forward, OnesKernelCounts) {
  auto map = make_grid_map(3, 3, KernelSpec{3, 3, {}}, {1, 1}, {1, 1});
  ConvParams<double> p(1, 1, 9, std::vector<double>(9, 1.0), {0.0});
  Tensor y = mapped_conv_forward(ones(1, 9), map, p);
  const double expect[] = {4, 6, 4, 6, 9, 6, 4, 6, 4};
  for (int i = 0; i < 9; ++i) EXPECT_EQ(y[i], expect[i]);
}

TEST(Forward, ShuffleIsPermutationGather) {
  auto map = make_shuffle_map(5, 5, KernelSpec{1, 1, {}}, 9);
  ConvParams<double> p(1, 1, 1, {1.0}, {0.0});
  std::mt19937_64 rng(3);
  Tensor x = oracle::random_tensor({1, 25}, rng);
  Tensor y = mapped_conv_forward(x, map, p);
  for (std::int64_t n = 0; n < 25; ++n) EXPECT_EQ(y[n], x[map.sample(n, 0)[0].index]);
}

TEST(Forward, RejectsNaNAndShapeErrors) {
  auto map = make_grid_map(2, 2, KernelSpec{1, 1, {}});
  ConvParams<double> p(1, 1, 1, {1.0}, {0.0});
  Tensor x = ones(1, 4);
  x[2] = std::nan("");
  EXPECT_THROW(mapped_conv_forward(x, map, p), InvalidCoordinate);
  EXPECT_THROW(mapped_conv_forward(ones(2, 4), map, p), DimensionError);
  ConvParams<double> wrong_k(1, 1, 9);
  EXPECT_THROW(mapped_conv_forward(ones(1, 4), map, wrong_k), DimensionError);
}

TEST(Forward, MatchesDirectDefinition) {
  std::mt19937_64 rng(4);
  const SampleMap maps[] = {
      make_shuffle_map(6, 7, KernelSpec{3, 3, {}}, 1, Interpolation::bilinear),
      make_equirect_map({6, 12}, KernelSpec{3, 3, {}}, Projection::gnomonic, Interpolation::bilinear),
      make_cubemap_map(3, KernelSpec{3, 3, {}}, Interpolation::bilinear),
      make_isea_map(make_icosphere(2), make_icosphere(1), KernelSpec{3, 3, {}}),
  };
  for (const auto& map : maps) {
    auto p = ConvParams<double>::random(3, 4, map.k(), 5);
    Tensor x = oracle::random_tensor({3, static_cast<std::size_t>(map.n_in())}, rng);
    Tensor y = mapped_conv_forward(x, map, p);
    Tensor ref = oracle::direct_mapped_conv(x, map, p);
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(GridReference, ImpulseResponseIsKernelStamp) {
  GridGeometry g{5, 5, 3, 3, {1, 1}, {1, 1}, {1, 1}};
  ConvParams<double> p(1, 1, 9);
  for (int m = 0; m < 9; ++m) p.weights[m] = m + 1.0;
  Tensor x({1, 5, 5});
  x[12] = 1.0;
  Tensor y = grid_conv_reference(x, p, g);
  // Cross-correlation: output at (2 + 1 - i, 2 + 1 - j) picks weight (i, j).
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(y[(3 - i) * 5 + (3 - j)], p.weights[i * 3 + j]);
}

TEST(GridReference, ZeroInputGivesBias) {
  GridGeometry g{4, 6, 3, 3, {2, 1}, {1, 1}, {1, 1}};
  auto p = ConvParams<double>::random(2, 3, 9, 1);
  Tensor y = grid_conv_reference(Tensor({2, 4, 6}), p, g);
  for (int co = 0; co < 3; ++co)
    for (std::size_t s = 0; s < y.spatial_size(); ++s) EXPECT_EQ(y.at(co, s), p.bias[co]);
}

TEST(GridReference, MatchesDirectLoops) {
  std::mt19937_64 rng(5);
  GridGeometry g{7, 9, 3, 2, {2, 1}, {1, 0}, {1, 2}};
  auto p = ConvParams<double>::random(2, 3, 6, 8);
  Tensor x = oracle::random_tensor({2, 7, 9}, rng);
  Tensor y = grid_conv_reference(x, p, g);
  Tensor ref = oracle::direct_conv(x, 7, 9, p, 3, 2, g.stride, g.padding, g.dilation);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
}

// Grid maps reproduce the dense reference across strides, padding and dilation.
TEST(GridEquivalence, Fuzz) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> dim(4, 20), ch(1, 3);
  const std::pair<int, int> kernels[] = {{1, 1}, {3, 3}, {1, 5}, {2, 3}};
  int checked = 0;
  for (const auto& [kh, kw] : kernels) {
    for (int s : {1, 2})
      for (int pd : {0, 1, 2})
        for (int d : {1, 2}) {
          const int h = dim(rng), w = dim(rng);
          GridGeometry g{h, w, kh, kw, {s, s}, {pd, pd}, {d, d}};
          if (g.out_h() < 1 || g.out_w() < 1) continue;
          const int ci = ch(rng), co = ch(rng);
          auto p = ConvParams<double>::random(ci, co, kh * kw, rng());
          Tensor x = oracle::random_tensor({std::size_t(ci), std::size_t(h), std::size_t(w)}, rng);
          auto map = make_grid_map(h, w, KernelSpec{kh, kw, {}}, g.stride, g.padding, g.dilation);
          Tensor a = mapped_conv_forward(x, map, p);
          Tensor b = grid_conv_reference(x, p, g);
          ASSERT_EQ(a.size(), b.size());
          for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12);
          ++checked;
        }
  }
  EXPECT_GT(checked, 40);
}

TEST(Backward, ScalarChainRule) {
  auto map = make_grid_map(3, 3, KernelSpec{1, 1, {}});
  ConvParams<double> p(1, 1, 1, {2.5}, {0.0});
  std::mt19937_64 rng(7);
  Tensor g = oracle::random_tensor({1, 9}, rng);
  Tensor gi = mapped_conv_backward_input(g, map, p);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(gi[i], 2.5 * g[i]);
}

TEST(Backward, OneHotSupport) {
  auto map = make_shuffle_map(6, 6, KernelSpec{3, 3, {}}, 3, Interpolation::bilinear);
  auto p = ConvParams<double>::random(1, 1, 9, 2);
  for (std::int64_t n : {0, 7, 35}) {
    Tensor g({1, 36});
    g[n] = 1.0;
    Tensor gi = mapped_conv_backward_input(g, map, p);
    std::vector<bool> support(36, false);
    for (int m = 0; m < 9; ++m)
      for (const auto& t : map.sample(n, m)) support[t.index] = true;
    for (int i = 0; i < 36; ++i) {
      if (!support[i]) EXPECT_EQ(gi[i], 0.0) << i;
    }
  }
}

TEST(Backward, ZeroGradOutGivesZeroParams) {
  auto map = make_grid_map(4, 4, KernelSpec{3, 3, {}}, {1, 1}, {1, 1});
  std::mt19937_64 rng(8);
  Tensor x = oracle::random_tensor({2, 16}, rng);
  auto g = mapped_conv_backward_params(Tensor({3, 16}), x, map);
  for (double v : g.weights) EXPECT_EQ(v, 0.0);
  for (double v : g.bias) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g.weights.size(), 3u * 2u * 9u);
}

TEST(Backward, SingleOutputProductRule) {
  std::vector<Sample> s{Sample{{2, 1.0}}};
  SampleMap map(4, 1, 1, s);
  Tensor x({1, 4}, std::vector<double>{0.5, -1.0, 3.0, 7.0});
  Tensor g({1, 1}, std::vector<double>{-2.0});
  auto pg = mapped_conv_backward_params(g, x, map);
  EXPECT_EQ(pg.weights[0], -6.0);
  EXPECT_EQ(pg.bias[0], -2.0);
}

TEST(Adjoint, InnerProductIdentity) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    auto map = make_shuffle_map(5 + t % 3, 6, KernelSpec{3, 3, {}}, t, t % 2 ? Interpolation::bilinear
                                                                               : Interpolation::nearest);
    auto p = ConvParams<double>::random(2, 3, 9, t);
    std::fill(p.bias.begin(), p.bias.end(), 0.0);
    Tensor x = oracle::random_tensor({2, std::size_t(map.n_in())}, rng);
    Tensor y = oracle::random_tensor({3, std::size_t(map.n_out())}, rng);
    const double lhs = oracle::dot(mapped_conv_forward(x, map, p), y);
    const double rhs = oracle::dot(x, mapped_conv_backward_input(y, map, p));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(std::abs(lhs), 1.0));
  }
}

TEST(Linearity, AffineCombination) {
  std::mt19937_64 rng(10);
  auto map = make_equirect_map({6, 12}, KernelSpec{3, 3, {}}, Projection::equirect, Interpolation::bilinear);
  auto p = ConvParams<double>::random(2, 2, 9, 3);
  Tensor x = oracle::random_tensor({2, 72}, rng), y = oracle::random_tensor({2, 72}, rng);
  const double a = 0.3, b = -1.7;
  Tensor mix({2, 72});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
  Tensor fx = mapped_conv_forward(x, map, p), fy = mapped_conv_forward(y, map, p);
  Tensor fm = mapped_conv_forward(mix, map, p);
  for (std::size_t i = 0; i < fm.size(); ++i) {
    const double bias = p.bias[i / 72];
    EXPECT_NEAR(fm[i], a * fx[i] + b * fy[i] + (1 - a - b) * bias, 1e-12);
  }
}

TEST(Serial, ParallelKernelsMatch) {
  std::mt19937_64 rng(11);
  auto map = make_shuffle_map(16, 16, KernelSpec{3, 3, {}}, 2, Interpolation::bilinear);
  AdjointIndex adj(map);
  auto p = ConvParams<double>::random(3, 4, 9, 1);
  Tensor x = oracle::random_tensor({3, 256}, rng);
  Tensor g = oracle::random_tensor({4, 256}, rng);

  Tensor c1 = mapped_im2col(x, map), c2 = serial::mapped_im2col(x, map);
  for (std::size_t i = 0; i < c1.size(); ++i) ASSERT_EQ(c1[i], c2[i]);

  Tensor cols = oracle::random_tensor({27, 256}, rng);
  Tensor a1 = mapped_col2im(cols, map, adj), a2 = serial::mapped_col2im(cols, map);
  for (std::size_t i = 0; i < a1.size(); ++i) ASSERT_EQ(a1[i], a2[i]);

  Tensor f1 = mapped_conv_forward(x, map, p), f2 = serial::mapped_conv_forward(x, map, p);
  for (std::size_t i = 0; i < f1.size(); ++i) ASSERT_NEAR(f1[i], f2[i], 1e-12);

  Tensor b1 = mapped_conv_backward_input(g, map, adj, p), b2 = serial::mapped_conv_backward_input(g, map, p);
  for (std::size_t i = 0; i < b1.size(); ++i) ASSERT_NEAR(b1[i], b2[i], 1e-10 * (1 + std::abs(b2[i])));

  auto w1 = mapped_conv_backward_params(g, x, map), w2 = serial::mapped_conv_backward_params(g, x, map);
  for (std::size_t i = 0; i < w1.weights.size(); ++i)
    ASSERT_NEAR(w1.weights[i], w2.weights[i], 1e-10 * (1 + std::abs(w2.weights[i])));
  for (std::size_t i = 0; i < w1.bias.size(); ++i) ASSERT_NEAR(w1.bias[i], w2.bias[i], 1e-12);
}

TEST(AdjointIndex, BucketsInSampleOrder) {
  auto map = make_shuffle_map(5, 5, KernelSpec{3, 3, {}}, 4, Interpolation::bilinear);
  AdjointIndex adj(map);
  EXPECT_EQ(adj.n_in(), 25);
  std::size_t total = 0;
  for (std::int64_t i = 0; i < 25; ++i) {
    auto b = adj.bucket(i);
    total += b.size();
    for (std::size_t e = 1; e < b.size(); ++e) {
      const auto prev = b[e - 1].n * 9 + b[e - 1].m, cur = b[e].n * 9 + b[e].m;
      EXPECT_LE(prev, cur);
    }
  }
  EXPECT_EQ(total, map.taps().size());
}

TEST(Float, SinglePrecisionPath) {
  auto map = make_grid_map(5, 5, KernelSpec{3, 3, {}}, {1, 1}, {1, 1});
  auto pd = ConvParams<double>::random(1, 2, 9, 3);
  ConvParams<float> pf(1, 2, 9, std::vector<float>(pd.weights.begin(), pd.weights.end()),
                       std::vector<float>(pd.bias.begin(), pd.bias.end()));
  TensorF xf({1, 25});
  Tensor xd({1, 25});
  for (int i = 0; i < 25; ++i) xd[i] = xf[i] = static_cast<float>(std::sin(i));
  TensorF yf = mapped_conv_forward(xf, map, pf);
  Tensor yd = mapped_conv_forward(xd, map, pd);
  for (std::size_t i = 0; i < yd.size(); ++i) EXPECT_NEAR(yf[i], yd[i], 1e-5);
}

}  // namespace
}  // namespace mapconv
