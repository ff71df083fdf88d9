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
#include <random>
#include <set>

#include "doctest.h"
#include "hydra/core/grad_check.hpp"
#include "hydra/frontend.hpp"
#include "test_util.hpp"

using namespace hydra;
using hydra::testing::random_array;

namespace {

FeatureBatch random_batch(Index batch, Index frames, Index width, std::mt19937_64& rng) {
  FeatureBatch b{random_array({batch, frames, width}, rng), {}};
  for (Index i = 0; i < batch; ++i) b.lengths.push_back(static_cast<int>(frames));
  return b;
}

std::vector<Index> time_strides(const BranchSpec& s) {
  std::vector<Index> out;
  for (const auto& l : s.layers) out.push_back(l.stride_t);
  return out;
}

}  // namespace

TEST_CASE("branch topologies") {
  const BranchSpec b4 = build_branch(4, 64, 80);
  const BranchSpec b6 = build_branch(6, 64, 80);
  const BranchSpec b8 = build_branch(8, 64, 80);
  CHECK(time_strides(b4) == std::vector<Index>{2, 2});
  CHECK(time_strides(b6) == std::vector<Index>{2, 3});
  CHECK(time_strides(b8) == std::vector<Index>{2, 2, 2});
  for (const auto* b : {&b4, &b6, &b8}) {
    for (const auto& l : b->layers) {
      CHECK(l.stride_f == l.stride_t);
      CHECK(l.kernel_t == 2 * l.stride_t - 1);
      CHECK(l.kernel_f == l.kernel_t);
      CHECK(l.out_channels == 64);
    }
  }
  CHECK(b4.final_freq() == 19);
  CHECK(b6.final_freq() == 12);
  CHECK(b8.final_freq() == 9);
  CHECK(b4.linear_in() == 64 * 19);
  CHECK_THROWS_AS(build_branch(5, 64, 80), ConfigError);
  CHECK_THROWS_AS(build_branch(2, 64, 80), ConfigError);
  CHECK(make_frontend_config({8, 4}, 64, 80).factors() == std::vector<int>{4, 8});
  FrontendConfig unsorted = make_frontend_config({4, 8}, 64, 80);
  std::swap(unsorted.branches[0], unsorted.branches[1]);
  CHECK_THROWS_AS(unsorted.validate(), ConfigError);
  CHECK_THROWS_AS(make_frontend_config({4, 4}, 64, 80), ConfigError);
  CHECK_THROWS_AS(make_frontend_config({}, 64, 80), ConfigError);
}

TEST_CASE("subsampled lengths for T = 100") {
  CHECK(subsampled_length(100, build_branch(4, 64, 80)) == 24);
  CHECK(subsampled_length(100, build_branch(6, 64, 80)) == 15);
  CHECK(subsampled_length(100, build_branch(8, 64, 80)) == 11);
}

TEST_CASE("subsampled length stays within three frames of floor(T / n)") {
  for (int n : {4, 6, 8}) {
    const BranchSpec spec = build_branch(n, 64, 80);
    for (Index t = 20; t <= 2000; ++t) {
      const Index len = subsampled_length(t, spec);
      REQUIRE(len <= t / n);
      REQUIRE(len >= t / n - 3);
    }
  }
}

TEST_CASE("short inputs raise TooShortError at the branch minimum") {
  for (int n : {4, 6, 8}) {
    const BranchSpec spec = build_branch(n, 64, 80);
    const Index min = spec.min_frames();
    CHECK(subsampled_length(min, spec) == 1);
    CHECK_THROWS_AS(subsampled_length(min - 1, spec), TooShortError);
  }
  CHECK_THROWS_AS(subsampled_length(0, build_branch(4, 64, 80)), TooShortError);
}

TEST_CASE("frontend output shapes") {
  std::mt19937_64 rng(1);
  const FrontendConfig config = make_frontend_config({4, 6, 8}, 64, 80);
  ParameterMap params;
  for (const auto& b : config.branches) init_branch(params, b, 7);
  const FeatureBatch batch = random_batch(2, 100, 80, rng);
  const FrontendOutput o4 = frontend_forward(batch, config.branch(4), false, params);
  const FrontendOutput o8 = frontend_forward(batch, config.branch(8), false, params);
  CHECK(o4.embedding.shape() == Shape{2, 24, 64});
  CHECK(o8.embedding.shape() == Shape{2, 11, 64});
  CHECK(o4.lengths == std::vector<int>{24, 24});
  CHECK(o8.lengths == std::vector<int>{11, 11});
}

TEST_CASE("frontend without positional encoding is LayerNorm(Linear(conv stack))") {
  std::mt19937_64 rng(2);
  const BranchSpec spec = build_branch(6, 16, 24);
  ParameterMap params;
  init_branch(params, spec, 3);
  const FeatureBatch batch = random_batch(2, 40, 24, rng);
  const Tensor got = frontend_forward(batch, spec, false, params).embedding;

  Tensor x = Tensor::constant(batch.features.reshaped({2, 1, 40, 24}));
  x = relu(conv2d(x, params["frontend.sub6.conv0.weight"], params["frontend.sub6.conv0.bias"], 2, 2));
  x = relu(conv2d(x, params["frontend.sub6.conv1.weight"], params["frontend.sub6.conv1.bias"], 3, 3));
  x = linear(flatten_channels(x), params["frontend.sub6.out.weight"], params["frontend.sub6.out.bias"]);
  x = layer_norm(x, params["frontend.sub6.norm.gain"], params["frontend.sub6.norm.offset"]);
  CHECK(got.value() == x.value());

  const Tensor with_pe = frontend_forward(batch, spec, true, params).embedding;
  CHECK_FALSE(with_pe.value() == got.value());
}

TEST_CASE("zero input with zero biases stays finite") {
  const BranchSpec spec = build_branch(4, 64, 80);
  ParameterMap params;
  init_branch(params, spec, 5);
  FeatureBatch batch{Array({1, 50, 80}), {50}};
  const Tensor plain = frontend_forward(batch, spec, false, params).embedding;
  CHECK(plain.value().all_finite());
  CHECK(plain.value().values().cwiseAbs().maxCoeff() == 0.0);
  const Tensor pe = frontend_forward(batch, spec, true, params).embedding;
  CHECK(pe.value().all_finite());
  const Tensor expected =
      layer_norm(Tensor::constant(sinusoidal_table(pe.dim(1), 64).reshaped({1, pe.dim(1), 64})),
                 params["frontend.sub4.norm.gain"], params["frontend.sub4.norm.offset"]);
  CHECK((pe.value().values() - expected.value().values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("padding frames do not reach valid output rows") {
  std::mt19937_64 rng(3);
  for (int n : {4, 6, 8}) {
    const BranchSpec spec = build_branch(n, 16, 32);
    ParameterMap params;
    init_branch(params, spec, 11);
    FeatureBatch a = random_batch(2, 90, 32, rng);
    a.lengths = {60, 90};
    for (Index t = 60; t < 90; ++t)
      for (Index f = 0; f < 32; ++f) a.features.at(0, t, f) = 0.0;
    FeatureBatch b = a;
    for (Index t = 60; t < 90; ++t)
      for (Index f = 0; f < 32; ++f) b.features.at(0, t, f) = 5.0;
    const FrontendOutput oa = frontend_forward(a, spec, false, params);
    const FrontendOutput ob = frontend_forward(b, spec, false, params);
    const Index valid = oa.lengths[0];
    CHECK(valid == subsampled_length(60, spec));
    const Index steps = oa.embedding.dim(1);
    const auto ra = oa.embedding.value().matrix(2 * steps, 16).topRows(valid);
    const auto rb = ob.embedding.value().matrix(2 * steps, 16).topRows(valid);
    CHECK(ra == rb);
  }
}

TEST_CASE("sinusoidal positional encoding") {
  const Array table = sinusoidal_table(10001, 64);
  for (Index i = 0; i < 64; i += 2) {
    CHECK(table.at(0, i) == 0.0);
    CHECK(table.at(0, i + 1) == 1.0);
  }
  CHECK(table.values().cwiseAbs().maxCoeff() <= 1.0);
  CHECK(table.at(3, 2) == doctest::Approx(std::sin(3.0 / std::pow(10000.0, 2.0 / 64.0))));

  std::mt19937_64 rng(4);
  const Array z = random_array({2, 5, 8}, rng);
  const Tensor out = pos_enc(Tensor::constant(z));
  for (Index b = 0; b < 2; ++b)
    for (Index t = 0; t < 5; ++t)
      for (Index d = 0; d < 8; ++d)
        CHECK(out.value().at(b, t, d) ==
              doctest::Approx(z.at(b, t, d) * std::sqrt(8.0) + sinusoidal_table(5, 8).at(t, d)));
}

TEST_CASE("branch parameter sets are disjoint") {
  const FrontendConfig config = make_frontend_config({4, 6, 8}, 16, 32);
  std::set<std::string> seen;
  for (const auto& b : config.branches) {
    ParameterMap params;
    init_branch(params, b, 1);
    for (const auto& [name, p] : params) {
      CHECK(name.rfind(branch_prefix(b.factor) + ".", 0) == 0);
      CHECK(seen.insert(name).second);
    }
  }
}

TEST_CASE("frontend gradients match finite differences") {
  std::mt19937_64 rng(5);
  for (int n : {4, 6, 8}) {
    const BranchSpec spec = build_branch(n, 8, 16);
    ParameterMap params;
    init_branch(params, spec, 9);
    FeatureBatch batch = random_batch(2, 40, 16, rng);
    batch.lengths = {40, 34};
    const Array weights = random_array({2, subsampled_length(40, spec), 8}, rng);
    std::vector<Tensor> leaves;
    for (auto& [name, p] : params) leaves.push_back(p.tensor);
    const double err = grad_check(
        [&] { return weighted_sum(frontend_forward(batch, spec, true, params).embedding, weights); },
        leaves);
    CHECK(err < 1e-4);
  }
}
