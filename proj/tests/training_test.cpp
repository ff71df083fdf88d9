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
#include <cstring>
#include <limits>
#include <random>

#include "doctest.h"
#include "hydra/harness/dataset.hpp"
#include "hydra/training.hpp"
#include "test_util.hpp"

using namespace hydra;
using hydra::testing::random_array;

namespace {

ModelConfig tiny_config(Index vocab, const std::vector<int>& factors = {4, 6, 8}) {
  ModelConfig c;
  c.frontend = make_frontend_config(factors, 16, 24);
  c.encoder = EncoderConfig{1, 16, 2, 32, 3, 0.0};
  c.decoder = DecoderConfig{1, 1, 16, 2, 32, vocab, 0.0};
  c.validate();
  return c;
}

SyntheticDataset tiny_data(Index utts = 8, std::uint64_t seed = 3) {
  SyntheticOptions o;
  o.num_utts = utts;
  o.vocab_size = 6;
  o.feature_dim = 24;
  o.seed = seed;
  return gen_synthetic(o);
}

std::vector<const Utterance*> pointers(const std::vector<Utterance>& data) {
  std::vector<const Utterance*> out;
  for (const auto& u : data) out.push_back(&u);
  return out;
}

bool bitwise_equal(const Array& a, const Array& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool same_params(const ParameterMap& a, const ParameterMap& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, p] : a) {
    if (!bitwise_equal(p.tensor.value(), b[name].value())) return false;
    if (p.step_count != b.at(name).step_count) return false;
  }
  return true;
}

bool in_branch(const std::string& name, int factor) {
  return name.rfind(branch_prefix(factor) + ".", 0) == 0;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  const LrSchedule s{2e-3, 25};
  CHECK(s.at(1) == doctest::Approx(2e-3 / 25.0));
  CHECK(s.at(25) == doctest::Approx(2e-3));
  CHECK(s.at(100) == doctest::Approx(1e-3));
  CHECK(s.at(10) < s.at(20));
  CHECK(s.at(400) < s.at(100));
  TrainConfig config;
  config.lr.warmup = 0;
  CHECK_THROWS_AS(config.validate(make_frontend_config({4, 6, 8}, 16, 24)), ConfigError);
  config = TrainConfig{};
  config.branches = {4, 5};
  CHECK_THROWS_AS(config.validate(make_frontend_config({4, 6, 8}, 16, 24)), ConfigError);
  config.branches = {};
  CHECK(config.resolved_branches(make_frontend_config({4, 8}, 16, 24)) == std::vector<int>{4, 8});
}

TEST_CASE("branch selection is uniform and seeded") {
  const std::vector<int> one{6};
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) REQUIRE(select_branch(one, rng) == 6);
  CHECK_THROWS_AS(select_branch(std::vector<int>{}, rng), ConfigError);

  const std::vector<int> three{4, 6, 8};
  std::mt19937_64 a(77), b(77);
  std::map<int, int> counts;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    const int pick = select_branch(three, a);
    REQUIRE(pick == select_branch(three, b));
    ++counts[pick];
  }
  const double bound = 3.0 * std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0));
  for (int f : three) CHECK(std::abs(counts[f] - n / 3.0) <= bound);
}

TEST_CASE("lazy Adam matches a hand-computed update and skips untouched parameters") {
  ParameterMap params;
  Array one({1});
  one[0] = 1.0;
  params.add("a", one);
  params.add("b", one);
  params.at("a").tensor.mutable_grad()[0] = 0.5;
  Adam adam;
  adam.step(params, 0.1);
  // m = 0.05, v = 0.005; bias-corrected m = 0.5, v = 0.25.
  CHECK(params["a"].value()[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-9)).epsilon(1e-14));
  CHECK(params["b"].value()[0] == 1.0);
  CHECK(params.at("a").step_count == 1);
  CHECK(params.at("b").step_count == 0);
  CHECK(adam.moments().count("b") == 0);
  CHECK(adam.moments().at("a").first[0] == doctest::Approx(0.05));
  CHECK(adam.moments().at("a").second[0] == doctest::Approx(0.005));

  params.zero_grad();
  params.at("b").tensor.mutable_grad()[0] = -2.0;
  const double a_before = params["a"].value()[0];
  adam.step(params, 0.1);
  CHECK(params["a"].value()[0] == a_before);
  CHECK(params.at("a").step_count == 1);
  CHECK(params.at("b").step_count == 1);
  // First update of b uses its own bias correction: a step of lr * |g| / (|g| + eps).
  CHECK(params["b"].value()[0] == doctest::Approx(1.0 + 0.1 * 2.0 / (2.0 + 1e-9)).epsilon(1e-14));

  params.zero_grad();
  params.at("a").tensor.mutable_grad()[0] = 0.5;
  adam.step(params, 0.1);
  const double m = 0.9 * 0.05 + 0.1 * 0.5, v = 0.98 * 0.005 + 0.02 * 0.25;
  const double expected = a_before - 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.98 * 0.98)) + 1e-9);
  CHECK(params["a"].value()[0] == doctest::Approx(expected).epsilon(1e-14));
  CHECK(params.at("a").step_count == 2);
}

TEST_CASE("global gradient norm and clipping") {
  ParameterMap params;
  params.add("x", Array({2}));
  params.add("y", Array({1}));
  params.add("z", Array({3}));
  params.at("x").tensor.mutable_grad()[0] = 3.0;
  params.at("y").tensor.mutable_grad()[0] = 4.0;
  CHECK(grad_norm(params) == doctest::Approx(5.0));

  const SyntheticDataset data = tiny_data(4);
  const auto batch = pointers(data.utterances);
  for (double clip : {1e-3, 0.0}) {
    ModelState model = init_scratch(tiny_config(9), 2);
    Adam adam;
    StepContext ctx;
    ctx.grad_clip = clip;
    const StepRecord r = train_step(model, adam, batch, 4, ctx);
    REQUIRE(r.applied);
    REQUIRE(r.grad_norm > 1e-3);
    double first_sq = 0.0;
    for (const auto& [name, mom] : adam.moments()) first_sq += mom.first.values().squaredNorm();
    // First moment after one step is (1 - beta1) times the applied gradient.
    const double applied = std::sqrt(first_sq) / 0.1;
    CHECK(applied == doctest::Approx(clip > 0 ? clip : r.grad_norm).epsilon(1e-9));
  }
}

TEST_CASE("train_step updates only the selected branch and always the shared stack") {
  const SyntheticDataset data = tiny_data(8);
  const auto batch = pointers(data.utterances);
  ModelState model = init_scratch(tiny_config(9), 4);
  Adam adam;
  StepContext ctx;
  ctx.lr = 1e-3;
  std::mt19937_64 rng(5);
  const std::vector<int> branches{4, 6, 8};
  for (int step = 0; step < 12; ++step) {
    const int factor = select_branch(branches, rng);
    const ModelState before = model.clone();
    const auto moments_before = adam.moments();
    const StepRecord r = train_step(model, adam, batch, factor, ctx);
    REQUIRE(r.applied);
    REQUIRE(r.branch == factor);
    REQUIRE(std::isfinite(r.total));
    for (const auto& [name, p] : model.params) {
      const bool changed = !bitwise_equal(p.tensor.value(), before.params[name].value());
      bool other_branch = false;
      for (int f : branches) other_branch |= f != factor && in_branch(name, f);
      if (other_branch) {
        REQUIRE_MESSAGE(!changed, name);
        REQUIRE(p.step_count == before.params.at(name).step_count);
        const auto it = moments_before.find(name);
        if (it == moments_before.end()) {
          REQUIRE(adam.moments().count(name) == 0);
        } else {
          REQUIRE(bitwise_equal(adam.moments().at(name).first, it->second.first));
          REQUIRE(bitwise_equal(adam.moments().at(name).second, it->second.second));
        }
      } else if (name.rfind("encoder.", 0) == 0) {
        REQUIRE_MESSAGE(changed, name);
      }
    }
  }
}

TEST_CASE("repeated steps on a fixed batch reduce the loss") {
  const SyntheticDataset data = tiny_data(4);
  const auto batch = pointers(data.utterances);
  ModelState model = init_scratch(tiny_config(9), 6);
  Adam adam;
  StepContext ctx;
  ctx.lr = 1e-3;
  const double start = evaluate_loss(model, batch, 4, ctx.weights);
  for (int i = 0; i < 50; ++i) REQUIRE(train_step(model, adam, batch, 4, ctx).applied);
  CHECK(evaluate_loss(model, batch, 4, ctx.weights) < 0.8 * start);
}

TEST_CASE("short utterances are dropped and empty steps change nothing") {
  SyntheticDataset data = tiny_data(3);
  Utterance tiny = data.utterances[0];
  tiny.features = Array({20, 24});
  tiny.tokens = {1, 2};
  std::vector<const Utterance*> batch{&data.utterances[1], &tiny, &data.utterances[2]};
  ModelState model = init_scratch(tiny_config(9), 7);
  Adam adam;
  const StepRecord r = train_step(model, adam, batch, 8, {});
  CHECK(r.applied);
  CHECK(r.dropped == 1);

  const ModelState before = model.clone();
  std::vector<const Utterance*> only_short{&tiny};
  const StepRecord empty = train_step(model, adam, only_short, 8, {});
  CHECK_FALSE(empty.applied);
  CHECK(empty.dropped == 1);
  CHECK(same_params(model.params, before.params));
}

TEST_CASE("non-finite features abort the step and repeated failures halt training") {
  SyntheticDataset data = tiny_data(4);
  for (auto& u : data.utterances) u.features[5] = std::numeric_limits<double>::quiet_NaN();
  ModelState model = init_scratch(tiny_config(9), 8);
  const ModelState before = model.clone();
  Adam adam;
  const auto batch = pointers(data.utterances);
  const StepRecord r = train_step(model, adam, batch, 4, {});
  CHECK_FALSE(r.applied);
  CHECK(same_params(model.params, before.params));
  CHECK(adam.moments().empty());

  TrainConfig config;
  config.steps = 10;
  config.batch_size = 2;
  Index seen = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord&) { ++seen; };
  CHECK_THROWS_AS(train(model.clone(), data.utterances, config, hooks), TrainingHalted);
  CHECK(seen == 4);
}

TEST_CASE("training is deterministic and zero steps leave the model unchanged") {
  const SyntheticDataset data = tiny_data(8);
  const ModelState init = init_scratch(tiny_config(9), 9);
  TrainConfig config;
  config.seed = 4;
  config.steps = 0;
  CHECK(same_params(train(init.clone(), data.utterances, config).model.params, init.params));
  CHECK_THROWS_AS(train(init.clone(), {}, config), UsageError);

  config.steps = 8;
  config.batch_size = 3;
  const TrainResult a = train(init.clone(), data.utterances, config);
  const TrainResult b = train(init.clone(), data.utterances, config);
  CHECK(same_params(a.model.params, b.model.params));
  REQUIRE(a.records.size() == 8);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].step == static_cast<Index>(i + 1));
    CHECK(a.records[i].branch == b.records[i].branch);
    CHECK(a.records[i].total == b.records[i].total);
    CHECK(a.records[i].lr == config.lr.at(static_cast<Index>(i + 1)));
  }
  config.seed = 5;
  CHECK_FALSE(same_params(train(init.clone(), data.utterances, config).model.params, a.model.params));
}

TEST_CASE("initialization plans for every standard strategy") {
  const std::map<int, std::string> baselines{{4, "b4"}, {6, "b6"}, {8, "b8"}};
  const std::vector<int> factors{4, 6, 8};
  const char* labels[] = {"s_s_s", "s_s_s", "4_s_s", "4_s_s", "4_6_8", "4_6_8"};
  const bool shared[] = {false, true, true, false, true, false};
  for (int row = 1; row <= 6; ++row) {
    const InitPlan plan = InitPlan::strategy(row, baselines);
    CHECK(plan.branch_label(factors) == labels[row - 1]);
    CHECK(plan.encoder_decoder_source.has_value() == shared[row - 1]);
    if (plan.encoder_decoder_source) CHECK(*plan.encoder_decoder_source == "b4");
    for (const auto& [f, path] : plan.branch_sources) CHECK(path == baselines.at(f));
  }
  CHECK_THROWS_AS(InitPlan::strategy(7, baselines), ConfigError);
  CHECK_THROWS_AS(InitPlan::strategy(2, {}), ConfigError);
}

TEST_CASE("transfer copies sources and reproduces rate-4 outputs") {
  const ModelState b4 = init_scratch(tiny_config(9, {4}), 21);
  const ModelState b6 = init_scratch(tiny_config(9, {6}), 22);
  const ModelState b8 = init_scratch(tiny_config(9, {8}), 23);
  const ModelConfig target = tiny_config(9);

  const ModelState s1 = init_model(target, {}, 30);
  CHECK(same_params(s1.params, init_model(target, {}, 30).params));
  CHECK(same_params(s1.params, init_scratch(target, 30).params));

  InitSources row3;
  row3.branches[4] = &b4;
  row3.encoder_decoder = &b4;
  const ModelState m3 = init_model(target, row3, 30);
  std::mt19937_64 rng(31);
  FeatureBatch batch{random_array({2, 50, 24}, rng), {50, 37}};
  const Array src = forward_encoder(b4, batch, 4).ctc_log_probs.value();
  const Array dst = forward_encoder(m3, batch, 4).ctc_log_probs.value();
  REQUIRE(src.shape() == dst.shape());
  CHECK((src.values() - dst.values()).cwiseAbs().maxCoeff() < 1e-9);
  for (const auto& [name, p] : m3.params) {
    if (in_branch(name, 6) || in_branch(name, 8)) {
      CHECK(bitwise_equal(p.tensor.value(), s1.params[name].value()));
    }
  }

  InitSources row6;
  row6.branches = {{4, &b4}, {6, &b6}, {8, &b8}};
  const ModelState m6 = init_model(target, row6, 30);
  for (const auto& [name, p] : m6.params) {
    const ModelState* source = in_branch(name, 4) ? &b4 : in_branch(name, 6) ? &b6
                               : in_branch(name, 8) ? &b8 : &s1;
    CHECK(bitwise_equal(p.tensor.value(), source->params[name].value()));
  }

  ModelConfig wide = tiny_config(9, {4});
  wide.encoder.ffn_dim = 48;
  const ModelState mismatched = init_scratch(wide, 1);
  InitSources bad;
  bad.encoder_decoder = &mismatched;
  try {
    init_model(target, bad, 30);
    FAIL("expected TransferError");
  } catch (const TransferError& e) {
    CHECK(std::string(e.what()).find("encoder.") != std::string::npos);
  }
  InitSources wrong_branch;
  wrong_branch.branches[6] = &b4;
  CHECK_THROWS_AS(init_model(target, wrong_branch, 30), TransferError);
}
