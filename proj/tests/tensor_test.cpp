// Copyright 2026 The Hydra Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>

#include "doctest.h"
#include "hydra/core/grad_check.hpp"
#include "hydra/core/tensor.hpp"
#include "test_util.hpp"

using namespace hydra;
using hydra::testing::random_array;
using hydra::testing::random_leaf;

namespace {
constexpr double kGradTol = 1e-4;
}

TEST_CASE("conv2d of ones is the kernel sum") {
  auto x = Tensor::constant(Array::constant({1, 1, 3, 3}, 1.0));
  auto w = Tensor::constant(Array::constant({1, 1, 3, 3}, 1.0));
  auto b = Tensor::constant(Array({1}));
  auto y = conv2d(x, w, b, 2, 2);
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.item() == 9.0);
}

TEST_CASE("conv2d output extents follow valid-convolution arithmetic") {
  auto x = Tensor::constant(Array({1, 1, 100, 4}));
  auto w = Tensor::constant(Array({2, 1, 3, 3}));
  auto b = Tensor::constant(Array({2}));
  CHECK(conv2d(x, w, b, 2, 1).dim(2) == 49);

  for (Index k = 1; k <= 3; ++k)
    for (Index s = 1; s <= 3; ++s)
      for (Index h = k; h <= 16; ++h)
        for (Index wd = k; wd <= 16; ++wd) {
          auto in = Tensor::constant(Array({1, 1, h, wd}));
          auto kern = Tensor::constant(Array({1, 1, k, k}));
          auto y = conv2d(in, kern, Tensor::constant(Array({1})), s, s);
          REQUIRE(y.dim(2) == (h - k) / s + 1);
          REQUIRE(y.dim(3) == (wd - k) / s + 1);
        }
}

TEST_CASE("conv2d rejects inputs smaller than the kernel") {
  auto x = Tensor::constant(Array({1, 1, 2, 5}));
  auto w = Tensor::constant(Array({1, 1, 3, 3}));
  CHECK_THROWS_AS(conv2d(x, w, Tensor::constant(Array({1})), 1, 1), DimensionError);
}

TEST_CASE("conv2d gradients match central differences") {
  std::mt19937_64 rng(3);
  SUBCASE("single channel 5x5") {
    std::vector<Tensor> params{random_leaf({1, 1, 5, 5}, rng), random_leaf({1, 1, 3, 3}, rng),
                               random_leaf({1}, rng)};
    auto f = [&] { return sum(conv2d(params[0], params[1], params[2], 2, 2) *
                              conv2d(params[0], params[1], params[2], 2, 2)); };
    CHECK(grad_check(f, params) < 1e-6);
  }
  SUBCASE("multi channel, asymmetric stride") {
    std::vector<Tensor> params{random_leaf({2, 3, 7, 6}, rng), random_leaf({4, 3, 3, 2}, rng),
                               random_leaf({4}, rng)};
    const Array w = random_array({2, 4, 3, 3}, rng);
    auto f = [&] { return weighted_sum(conv2d(params[0], params[1], params[2], 2, 2), w); };
    CHECK(grad_check(f, params) < 1e-6);
  }
}

TEST_CASE("relu, layer_norm, softmax basics") {
  CHECK(relu(Tensor::constant(Array::scalar(-2.0))).item() == 0.0);

  auto x = Tensor::constant(Array::constant({1, 6}, 3.5));
  auto gain = Tensor::constant(Array::constant({6}, 1.0));
  auto offset = Tensor::constant(Array({6}));
  const Array y = layer_norm(x, gain, offset).value();
  CHECK(y.values().cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto logits = Tensor::constant(random_array({4, 7}, rng, -30.0, 30.0));
    const Array p = softmax(logits).value();
    for (Index r = 0; r < 4; ++r) {
      CHECK(p.rows().row(r).minCoeff() >= 0.0);
      CHECK(std::abs(p.rows().row(r).sum() - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("attention mask selecting one key returns that value row") {
  std::mt19937_64 rng(11);
  auto q = Tensor::constant(random_array({1, 3, 4}, rng));
  auto k = Tensor::constant(random_array({1, 5, 4}, rng));
  auto v = Tensor::constant(random_array({1, 5, 4}, rng));
  const Index j = 2;
  AttentionMask mask = Array::constant({1, 3, 5}, -std::numeric_limits<double>::infinity());
  for (Index i = 0; i < 3; ++i) mask.at(0, i, j) = 0.0;
  const Array out = scaled_dot_attention(q, k, v, 2, &mask).value();
  for (Index i = 0; i < 3; ++i)
    for (Index d = 0; d < 4; ++d) CHECK(out.at(0, i, d) == doctest::Approx(v.value().at(0, j, d)).epsilon(1e-12));
}

TEST_CASE("every op's gradient matches finite differences") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 4; ++trial) {
    const Index b = 1 + trial % 2, t = 2 + trial, d = 4;
    const Array probe = random_array({b, t, d}, rng);

    SUBCASE("elementwise") {
      std::vector<Tensor> p{random_leaf({b, t, d}, rng), random_leaf({b, t, d}, rng)};
      auto f = [&] {
        return weighted_sum(silu(p[0]) * p[1] - relu(p[1]) + scale(p[0], 0.5), probe);
      };
      CHECK(grad_check(f, p) < kGradTol);
    }
    SUBCASE("glu") {
      std::vector<Tensor> p{random_leaf({b, t, 2 * d}, rng)};
      auto f = [&] { return weighted_sum(glu(p[0]), probe); };
      CHECK(grad_check(f, p) < kGradTol);
    }
    SUBCASE("linear") {
      std::vector<Tensor> p{random_leaf({b, t, 3}, rng), random_leaf({d, 3}, rng),
                            random_leaf({d}, rng)};
      auto f = [&] { return weighted_sum(linear(p[0], p[1], p[2]), probe); };
      CHECK(grad_check(f, p) < kGradTol);
    }
    SUBCASE("layer_norm") {
      std::vector<Tensor> p{random_leaf({b, t, d}, rng), random_leaf({d}, rng),
                            random_leaf({d}, rng)};
      auto f = [&] { return weighted_sum(layer_norm(p[0], p[1], p[2]), probe); };
      CHECK(grad_check(f, p) < kGradTol);
    }
    SUBCASE("softmax and log_softmax") {
      std::vector<Tensor> p{random_leaf({b, t, d}, rng)};
      auto f = [&] { return weighted_sum(softmax(p[0]) + log_softmax(p[0]), probe); };
      CHECK(grad_check(f, p) < kGradTol);
    }
    SUBCASE("embedding") {
      std::vector<Tensor> p{random_leaf({5, d}, rng)};
      std::vector<int> ids;
      for (Index i = 0; i < b * t; ++i) ids.push_back(static_cast<int>(i % 5));
      auto f = [&] { return weighted_sum(embedding(ids, {b, t}, p[0]), probe); };
      CHECK(grad_check(f, p) < kGradTol);
    }
    SUBCASE("depthwise conv1d") {
      std::vector<Tensor> p{random_leaf({b, t, d}, rng), random_leaf({d, 3}, rng),
                            random_leaf({d}, rng)};
      auto f = [&] { return weighted_sum(depthwise_conv1d(p[0], p[1], p[2]), probe); };
      CHECK(grad_check(f, p) < kGradTol);
    }
    SUBCASE("attention with causal mask") {
      std::vector<Tensor> p{random_leaf({b, t, d}, rng), random_leaf({b, t, d}, rng),
                            random_leaf({b, t, d}, rng)};
      const AttentionMask mask = causal_mask(b, t);
      auto f = [&] { return weighted_sum(scaled_dot_attention(p[0], p[1], p[2], 2, &mask), probe); };
      CHECK(grad_check(f, p) < kGradTol);
    }
    SUBCASE("flatten and reshape") {
      std::vector<Tensor> p{random_leaf({b, 2, t, 2}, rng)};
      auto f = [&] { return weighted_sum(reshape(flatten_channels(p[0]), {b, t, d}), probe); };
      CHECK(grad_check(f, p) < kGradTol);
    }
  }
}

TEST_CASE("grad_check reference functions") {
  std::mt19937_64 rng(23);
  std::vector<Tensor> x{random_leaf({3, 4}, rng)};
  CHECK(grad_check([&] { return sum(x[0] * x[0]); }, x) < 1e-8);
  for (Index i = 0; i < x[0].size(); ++i) {
    CHECK(x[0].grad()[i] == doctest::Approx(2.0 * x[0].value()[i]));
  }

  auto c = Tensor::constant(Array::scalar(4.0));
  CHECK(grad_check([&] { return scale(c, 2.0); }, x) == 0.0);

  CHECK_THROWS_AS(grad_check([&] { return x[0]; }, x), UsageError);
}

TEST_CASE("shape mismatches raise DimensionError") {
  auto a = Tensor::constant(Array({2, 3}));
  auto b = Tensor::constant(Array({3, 2}));
  CHECK_THROWS_AS(a + b, DimensionError);
  CHECK_THROWS_AS(linear(a, Tensor::constant(Array({4, 2}))), DimensionError);
  CHECK_THROWS_AS(scaled_dot_attention(Tensor::constant(Array({1, 2, 6})),
                                       Tensor::constant(Array({1, 2, 6})),
                                       Tensor::constant(Array({1, 2, 6})), 4),
                  DimensionError);
}

TEST_CASE("no-grad mode records nothing") {
  auto w = Tensor::leaf(Array::constant({2}, 1.0));
  NoGradGuard guard;
  auto y = sum(w * w);
  CHECK_FALSE(y.requires_grad());
}
