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

#include "doctest.h"
#include "hydra/core/grad_check.hpp"
#include "hydra/decoding.hpp"
#include "hydra/objectives.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hydra;
using namespace hydra::testing;

TEST_CASE("ctc loss of a single uniform frame") {
  RowMatrix<double> lp = RowMatrix<double>::Constant(1, 2, std::log(0.5));
  const TokenSeq a{1};
  CHECK(ctc_loss(lp, a) == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(ctc_loss(lp, a) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("ctc loss matches exhaustive path enumeration") {
  std::mt19937_64 rng(11);
  const RowMatrix<double> lp = random_log_simplex(3, 3, rng);
  const TokenSeq ab{1, 2};
  CHECK(std::abs(ctc_loss(lp, ab) + std::log(brute_force_ctc(lp, ab))) < 1e-9);

  int checked = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const Index vocab = 2 + static_cast<Index>(rng() % 3);
    const Index frames = 1 + static_cast<Index>(rng() % 8);
    TokenSeq target(rng() % 4);
    for (int& id : target) id = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(vocab - 1));
    if (frames < ctc_min_frames(target)) continue;
    const RowMatrix<double> p = random_log_simplex(frames, vocab, rng);
    REQUIRE(std::abs(ctc_loss(p, target) + std::log(brute_force_ctc(p, target))) < 1e-9);
    ++checked;
  }
  CHECK(checked >= 200);
}

TEST_CASE("ctc feasibility") {
  std::mt19937_64 rng(12);
  const TokenSeq abc{1, 2, 3};
  const TokenSeq aa{1, 1};
  CHECK(ctc_min_frames(abc) == 3);
  CHECK(ctc_min_frames(aa) == 3);
  CHECK_THROWS_AS(ctc_loss(random_log_simplex(2, 4, rng), abc), InfeasibleTargetError);
  CHECK_THROWS_AS(ctc_loss(random_log_simplex(2, 4, rng), aa), InfeasibleTargetError);
  CHECK(std::isfinite(ctc_loss(random_log_simplex(3, 4, rng), aa)));
  const TokenSeq blank{0};
  CHECK_THROWS_AS(ctc_loss(random_log_simplex(3, 4, rng), blank), VocabError);
  const TokenSeq empty;
  const RowMatrix<double> lp = random_log_simplex(4, 3, rng);
  CHECK(ctc_loss(lp, empty) == doctest::Approx(-lp.col(0).sum()));
}

TEST_CASE("ctc gradient matches finite differences") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    RowMatrix<double> lp = random_log_simplex(6, 4, rng);
    const TokenSeq target{1, 3, 3};
    const auto result = ctc_forward_backward(lp, target);
    const double h = 1e-6;
    for (Index t = 0; t < 6; ++t)
      for (Index v = 0; v < 4; ++v) {
        RowMatrix<double> up = lp, down = lp;
        up(t, v) += h;
        down(t, v) -= h;
        const double numeric = (ctc_loss(up, target) - ctc_loss(down, target)) / (2 * h);
        REQUIRE(std::abs(numeric - result.grad(t, v)) / std::max(1.0, std::abs(numeric)) < 1e-4);
      }
  }
}

TEST_CASE("batched ctc loss averages utterances and backpropagates to logits") {
  std::mt19937_64 rng(14);
  const Tensor logits = Tensor::leaf(random_array({2, 5, 4}, rng, -2.0, 2.0));
  const std::vector<int> lengths{5, 3};
  const std::vector<TokenSeq> targets{{1, 2}, {3}};
  const Tensor loss = ctc_loss(log_softmax(logits), lengths, targets);
  const Array lp = log_softmax(logits).value();
  const RowMatrix<double> first = lp.matrix(10, 4).topRows(5);
  const RowMatrix<double> second = lp.matrix(10, 4).middleRows(5, 3);
  CHECK(loss.item() == doctest::Approx(0.5 * (ctc_loss(first, targets[0]) + ctc_loss(second, targets[1]))));
  std::vector<Tensor> leaves{logits};
  CHECK(grad_check([&] { return ctc_loss(log_softmax(logits), lengths, targets); }, leaves) < 1e-4);
}

TEST_CASE("label-smoothed KL") {
  const double eps = 0.1;
  // q on V = 3 with true token 1: (0.05, 0.9, 0.05).
  Array q_logits({1, 1, 3});
  q_logits[0] = std::log(0.05);
  q_logits[1] = std::log(0.9);
  q_logits[2] = std::log(0.05);
  CHECK(std::abs(kl_attention_loss(Tensor::constant(q_logits), {{1}}, eps).item()) < 1e-12);

  Array logits({1, 1, 3});
  logits[0] = 0.3;
  logits[1] = -0.4;
  logits[2] = 1.1;
  const double z = std::exp(0.3) + std::exp(-0.4) + std::exp(1.1);
  const double p[3] = {std::exp(0.3) / z, std::exp(-0.4) / z, std::exp(1.1) / z};
  const double q[3] = {0.05, 0.9, 0.05};
  double direct = 0.0;
  for (int i = 0; i < 3; ++i) direct += q[i] * std::log(q[i] / p[i]);
  CHECK(kl_attention_loss(Tensor::constant(logits), {{1}}, eps).item() == doctest::Approx(direct));
  CHECK(kl_attention_loss(Tensor::constant(logits), {{1}}, 0.0).item() == doctest::Approx(-std::log(p[1])));
}

TEST_CASE("KL averages valid positions and ignores padding") {
  std::mt19937_64 rng(15);
  const Array logits = random_array({2, 3, 5}, rng);
  const double both = kl_attention_loss(Tensor::constant(logits), {{1, 2, 4}, {3}}, 0.1).item();
  Array shuffled = logits;
  for (Index u = 1; u < 3; ++u)
    for (Index v = 0; v < 5; ++v) shuffled.at(1, u, v) = 9.0;
  CHECK(kl_attention_loss(Tensor::constant(shuffled), {{1, 2, 4}, {3}}, 0.1).item() == both);
  double manual = 0.0;
  for (Index b = 0; b < 2; ++b) {
    const std::vector<TokenSeq> t = b == 0 ? std::vector<TokenSeq>{{1, 2, 4}} : std::vector<TokenSeq>{{3}};
    Array one({1, 3, 5});
    one.rows() = logits.matrix(6, 5).middleRows(3 * b, 3);
    manual += kl_attention_loss(Tensor::constant(one), t, 0.1).item() * static_cast<double>(t[0].size());
  }
  CHECK(both == doctest::Approx(manual / 4.0));
  const Tensor leaf = Tensor::leaf(logits);
  std::vector<Tensor> leaves{leaf};
  CHECK(grad_check([&] { return kl_attention_loss(leaf, {{1, 2, 4}, {3}}, 0.1); }, leaves) < 1e-4);
}

TEST_CASE("combined loss weights") {
  const LossWeights w{0.3, 0.3, 0.1};
  CHECK(total_loss(2.0, 1.0, 3.0, w) == doctest::Approx(1.72));
  CHECK(total_loss(2.0, 1.0, 3.0, {1.0, 0.3, 0.1}) == 2.0);
  CHECK(total_loss(2.0, 1.0, 3.0, {0.0, 0.0, 0.1}) == 1.0);
  CHECK_THROWS_AS((LossWeights{1.5, 0.3, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((LossWeights{0.3, 0.3, 1.0}.validate()), ConfigError);

  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const LossWeights r{u(rng), u(rng), 0.1};
    const double c = 5 * u(rng), l = 5 * u(rng), rr = 5 * u(rng);
    const double att = (1 - r.beta) * l + r.beta * rr;
    const double t = total_loss(c, l, rr, r);
    REQUIRE(t >= std::min(c, att) - 1e-12);
    REQUIRE(t <= std::max(c, att) + 1e-12);
  }
}

TEST_CASE("tensor total loss agrees with the scalar combination") {
  std::mt19937_64 rng(17);
  const Tensor ctc_logits = Tensor::leaf(random_array({1, 6, 6}, rng));
  const Tensor l2r = Tensor::leaf(random_array({1, 3, 6}, rng));
  const Tensor r2l = Tensor::leaf(random_array({1, 3, 6}, rng));
  const std::vector<int> lengths{6};
  const std::vector<TokenSeq> targets{{1, 2}};
  const LossWeights w{0.3, 0.3, 0.1};
  const LossTerms terms = total_loss(log_softmax(ctc_logits), lengths, l2r, r2l, targets, 5, w);
  CHECK(terms.total.item() == doctest::Approx(total_loss(terms.ctc, terms.kl_l2r, terms.kl_r2l, w)));
  CHECK(terms.kl_l2r == doctest::Approx(kl_attention_loss(l2r, {{1, 2, 5}}, 0.1).item()));
  CHECK(terms.kl_r2l == doctest::Approx(kl_attention_loss(r2l, {{2, 1, 5}}, 0.1).item()));
  const LossTerms no_r2l = total_loss(log_softmax(ctc_logits), lengths, l2r, Tensor(), targets, 5, w);
  CHECK(no_r2l.total.item() == doctest::Approx(0.3 * terms.ctc + 0.7 * terms.kl_l2r));
  std::vector<Tensor> leaves{ctc_logits, l2r, r2l};
  CHECK(grad_check([&] { return total_loss(log_softmax(ctc_logits), lengths, l2r, r2l, targets, 5, w).total; },
                   leaves) < 1e-4);
}
