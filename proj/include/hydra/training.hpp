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

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hydra/data.hpp"
#include "hydra/model.hpp"
#include "hydra/objectives.hpp"

namespace hydra {

/// peak * min(step^-0.5, step * warmup^-1.5) * warmup^0.5, step counted from 1.
struct LrSchedule {
  double peak_lr = 1e-3;
  Index warmup = 100;

  double at(Index step) const;
};

struct TrainConfig {
  std::uint64_t seed = 1;
  Index steps = 0;
  Index batch_size = 8;
  LrSchedule lr;
  LossWeights weights;
  std::vector<int> branches;  // empty: every configured branch
  double grad_clip = 5.0;     // global-norm clip; <= 0 disables
  Index checkpoint_every = 0;
  Index eval_every = 0;       // held-out evaluation period; 0 disables

  /// Resolves an empty branch set and checks it against the frontend.
  std::vector<int> resolved_branches(const FrontendConfig& frontend) const;
  void validate(const FrontendConfig& frontend) const;
};

struct StepRecord {
  Index step = 0;
  int branch = 0;
  double total = 0.0;
  double ctc = 0.0;
  double kl = 0.0;  // (1 - beta) * l2r + beta * r2l
  double kl_l2r = 0.0;
  double kl_r2l = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
  Index dropped = 0;   // utterances too short for the branch
  bool applied = true; // false when the step was aborted
};

/// Uniform draw from `branches`; advances only `rng`.
int select_branch(std::span<const int> branches, std::mt19937_64& rng);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

struct AdamMoments {
  Array first;
  Array second;
};

/// Adam with lazy updates: parameters without a gradient buffer this step
/// keep their values, moments and step counts untouched.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(ParameterMap& params, double lr);
  const std::map<std::string, AdamMoments>& moments() const { return moments_; }

 private:
  AdamConfig config_;
  std::map<std::string, AdamMoments> moments_;
};

/// Global L2 norm over parameters that currently hold a gradient.
double grad_norm(const ParameterMap& params);

struct StepContext {
  LossWeights weights;
  double lr = 1e-3;
  double grad_clip = 5.0;
  ForwardOptions forward;
};

/// One forward/backward/update through branch `factor`. Utterances the
/// branch cannot handle are dropped; a step with nothing left, or with a
/// non-finite loss, is reported with applied = false and changes nothing.
StepRecord train_step(ModelState& model, Adam& optimizer,
                      std::span<const Utterance* const> batch, int factor,
                      const StepContext& context);

/// Weighted loss of the batch through branch `factor` without updating.
double evaluate_loss(const ModelState& model, std::span<const Utterance* const> batch, int factor,
                     const LossWeights& weights);

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  /// Called after every step with the updated model and optimizer.
  std::function<void(const ModelState&, const Adam&, const StepRecord&)> on_update;
  std::function<void(const ModelState&, Index step)> on_checkpoint;
  std::function<void(const ModelState&, Index step, double heldout_loss)> on_best;
};

struct TrainResult {
  ModelState model;
  Adam optimizer;
  std::vector<StepRecord> records;
  std::optional<double> best_heldout_loss;
};

/// Dynamic-subsample training: each step draws one branch uniformly and
/// updates that branch plus the shared encoder, decoder and heads.
TrainResult train(ModelState model, const std::vector<Utterance>& data, const TrainConfig& config,
                  const TrainHooks& hooks = {}, const std::vector<Utterance>* heldout = nullptr,
                  Adam optimizer = Adam());

// ---- initialization / transfer --------------------------------------------

/// Per-component initialization sources; nullopt means from scratch.
struct InitPlan {
  std::map<int, std::string> branch_sources;  // factor -> checkpoint path
  std::optional<std::string> encoder_decoder_source;

  /// Standard initialization strategies: 1 all scratch; 2 shared from the
  /// rate-4 baseline; 3 branch 4 and shared from it; 4 branch 4 only;
  /// 5 every branch from its own baseline plus shared from rate-4;
  /// 6 every branch from its own baseline, shared from scratch.
  static InitPlan strategy(int row, const std::map<int, std::string>& baselines);
  /// "s_s_s" / "4_s_s" / "4_6_8" style branch labels for factors in order.
  std::string branch_label(const std::vector<int>& factors) const;
};

struct InitSources {
  std::map<int, const ModelState*> branches;
  const ModelState* encoder_decoder = nullptr;
};

/// Scratch init from `seed`, then copies from the given source models.
/// TransferError names the first missing or mis-shaped parameter.
ModelState init_model(const ModelConfig& config, const InitSources& sources, std::uint64_t seed);

/// As above, reading each source checkpoint from disk.
ModelState init_model(const InitPlan& plan, const ModelConfig& config, std::uint64_t seed);

}  // namespace hydra
