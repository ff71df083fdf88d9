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

#include "hydra/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hydra/harness/checkpoint.hpp"

namespace hydra {

double LrSchedule::at(Index step) const {
  const double s = static_cast<double>(std::max<Index>(step, 1));
  const double w = static_cast<double>(std::max<Index>(warmup, 1));
  return peak_lr * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5)) * std::sqrt(w);
}

std::vector<int> TrainConfig::resolved_branches(const FrontendConfig& frontend) const {
  return branches.empty() ? frontend.factors() : branches;
}

void TrainConfig::validate(const FrontendConfig& frontend) const {
  if (lr.warmup < 1) throw ConfigError("warmup must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  weights.validate();
  for (int b : resolved_branches(frontend)) frontend.branch(b);
}

int select_branch(std::span<const int> branches, std::mt19937_64& rng) {
  if (branches.empty()) throw ConfigError("no branches to select from");
  std::uniform_int_distribution<std::size_t> pick(0, branches.size() - 1);
  return branches[pick(rng)];
}

void Adam::step(ParameterMap& params, double lr) {
  for (auto& [name, p] : params) {
    if (!p.tensor.has_grad()) continue;
    auto [it, fresh] = moments_.try_emplace(name);
    AdamMoments& m = it->second;
    if (fresh) {
      m.first = Array(p.tensor.shape());
      m.second = Array(p.tensor.shape());
    }
    const auto g = p.tensor.grad().values().array();
    m.first.values().array() = config_.beta1 * m.first.values().array() + (1.0 - config_.beta1) * g;
    m.second.values().array() =
        config_.beta2 * m.second.values().array() + (1.0 - config_.beta2) * g.square();
    ++p.step_count;
    const double t = static_cast<double>(p.step_count);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    p.tensor.mutable_value().values().array() -=
        lr * (m.first.values().array() / c1) /
        ((m.second.values().array() / c2).sqrt() + config_.eps);
  }
}

double grad_norm(const ParameterMap& params) {
  double sq = 0.0;
  for (const auto& [name, p] : params) {
    if (p.tensor.has_grad()) sq += p.tensor.grad().values().squaredNorm();
  }
  return std::sqrt(sq);
}

namespace {

std::vector<const Utterance*> usable_for_branch(std::span<const Utterance* const> batch,
                                                const BranchSpec& spec) {
  std::vector<const Utterance*> kept;
  for (const auto* u : batch) {
    if (u->frames() < spec.min_frames()) continue;
    if (subsampled_length(u->frames(), spec) < ctc_min_frames(u->tokens)) continue;
    kept.push_back(u);
  }
  return kept;
}

LossTerms batch_loss(const ModelState& model, std::span<const Utterance* const> batch, int factor,
                     const LossWeights& weights, const ForwardOptions& forward) {
  const FeatureBatch features = collate(batch);
  const std::vector<TokenSeq> targets = targets_of(batch);
  const ModelOutputs out = forward_encoder(model, features, factor, forward);
  Tensor l2r, r2l;
  if (weights.alpha < 1.0) {
    l2r = decode_step(model, out.encoded, out.frontend.lengths, targets,
                      Direction::kLeftToRight, forward);
    if (model.config.decoder.has_r2l() && weights.beta > 0.0) {
      r2l = decode_step(model, out.encoded, out.frontend.lengths, targets,
                        Direction::kRightToLeft, forward);
    }
  }
  return total_loss(out.ctc_log_probs, out.frontend.lengths, l2r, r2l, targets,
                    model.config.decoder.eos(), weights);
}

}  // namespace

StepRecord train_step(ModelState& model, Adam& optimizer,
                      std::span<const Utterance* const> batch, int factor,
                      const StepContext& context) {
  const auto start = std::chrono::steady_clock::now();
  StepRecord record;
  record.branch = factor;
  record.lr = context.lr;
  const BranchSpec& spec = model.config.frontend.branch(factor);
  const std::vector<const Utterance*> kept = usable_for_branch(batch, spec);
  record.dropped = static_cast<Index>(batch.size() - kept.size());
  model.params.zero_grad();
  if (kept.empty()) {
    record.applied = false;
    return record;
  }

  try {
    const LossTerms terms = batch_loss(model, kept, factor, context.weights, context.forward);
    record.total = terms.total.item();
    record.ctc = terms.ctc;
    record.kl_l2r = terms.kl_l2r;
    record.kl_r2l = terms.kl_r2l;
    const double beta = model.config.decoder.has_r2l() ? context.weights.beta : 0.0;
    record.kl = (1.0 - beta) * terms.kl_l2r + beta * terms.kl_r2l;
    if (!std::isfinite(record.total)) throw NumericError("non-finite loss");
    terms.total.backward();
  } catch (const NumericError&) {
    model.params.zero_grad();
    record.applied = false;
    record.total = std::numeric_limits<double>::quiet_NaN();
    return record;
  }

  record.grad_norm = grad_norm(model.params);
  if (!std::isfinite(record.grad_norm)) {
    model.params.zero_grad();
    record.applied = false;
    return record;
  }
  if (context.grad_clip > 0.0 && record.grad_norm > context.grad_clip) {
    const double shrink = context.grad_clip / record.grad_norm;
    for (auto& [name, p] : model.params) {
      if (p.tensor.has_grad()) p.tensor.mutable_grad().values() *= shrink;
    }
  }
  optimizer.step(model.params, context.lr);
  model.params.zero_grad();
  record.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return record;
}

double evaluate_loss(const ModelState& model, std::span<const Utterance* const> batch, int factor,
                     const LossWeights& weights) {
  NoGradGuard no_grad;
  const auto kept = usable_for_branch(batch, model.config.frontend.branch(factor));
  if (kept.empty()) throw TooShortError("no utterance fits branch " + std::to_string(factor));
  return batch_loss(model, kept, factor, weights, {}).total.item();
}

TrainResult train(ModelState model, const std::vector<Utterance>& data, const TrainConfig& config,
                  const TrainHooks& hooks, const std::vector<Utterance>* heldout,
                  Adam optimizer) {
  config.validate(model.config.frontend);
  if (data.empty()) throw UsageError("training set is empty");
  const std::vector<int> branches = config.resolved_branches(model.config.frontend);

  std::mt19937_64 branch_rng(derive_seed(config.seed, "branches"));
  std::mt19937_64 batch_rng(derive_seed(config.seed, "batches"));
  std::mt19937_64 dropout_rng(derive_seed(config.seed, "dropout"));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  StepContext context;
  context.weights = config.weights;
  context.grad_clip = config.grad_clip;
  context.forward.dropout = model.config.encoder.dropout_rate;
  context.forward.rng = &dropout_rng;

  TrainResult result{std::move(model), std::move(optimizer), {}, std::nullopt};
  int consecutive_failures = 0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (Index step = 1; step <= config.steps; ++step) {
    if (cursor + batch_size > order.size()) {
      std::shuffle(order.begin(), order.end(), batch_rng);
      cursor = 0;
    }
    std::vector<const Utterance*> batch;
    for (std::size_t i = 0; i < std::min(batch_size, order.size()); ++i) {
      batch.push_back(&data[order[cursor + i]]);
    }
    cursor += batch_size;

    const int factor = select_branch(branches, branch_rng);
    context.lr = config.lr.at(step);
    StepRecord record = train_step(result.model, result.optimizer, batch, factor, context);
    record.step = step;
    if (!record.applied && record.dropped < static_cast<Index>(batch.size())) {
      if (++consecutive_failures >= 5) {
        throw TrainingHalted("5 consecutive steps with non-finite loss (last at step " +
                             std::to_string(step) + ")");
      }
    } else {
      consecutive_failures = 0;
    }
    if (hooks.on_step) hooks.on_step(record);
    if (hooks.on_update) hooks.on_update(result.model, result.optimizer, record);
    result.records.push_back(record);

    if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0 &&
        hooks.on_checkpoint) {
      hooks.on_checkpoint(result.model, step);
    }
    if (heldout && !heldout->empty() && config.eval_every > 0 && step % config.eval_every == 0) {
      std::vector<const Utterance*> held;
      for (const auto& u : *heldout) held.push_back(&u);
      double loss = 0.0;
      for (int b : branches) loss += evaluate_loss(result.model, held, b, config.weights);
      loss /= static_cast<double>(branches.size());
      if (!result.best_heldout_loss || loss < *result.best_heldout_loss) {
        result.best_heldout_loss = loss;
        if (hooks.on_best) hooks.on_best(result.model, step, loss);
      }
    }
  }
  return result;
}

InitPlan InitPlan::strategy(int row, const std::map<int, std::string>& baselines) {
  auto source = [&](int factor) {
    auto it = baselines.find(factor);
    if (it == baselines.end()) {
      throw ConfigError("initialization row " + std::to_string(row) + " needs a rate-" +
                        std::to_string(factor) + " baseline");
    }
    return it->second;
  };
  InitPlan plan;
  switch (row) {
    case 1:
      break;
    case 2:
      plan.encoder_decoder_source = source(4);
      break;
    case 3:
      plan.branch_sources[4] = source(4);
      plan.encoder_decoder_source = source(4);
      break;
    case 4:
      plan.branch_sources[4] = source(4);
      break;
    case 5:
    case 6:
      for (const auto& [factor, path] : baselines) plan.branch_sources[factor] = path;
      if (row == 5) plan.encoder_decoder_source = source(4);
      break;
    default:
      throw ConfigError("initialization rows are numbered 1 to 6");
  }
  return plan;
}

std::string InitPlan::branch_label(const std::vector<int>& factors) const {
  std::string label;
  for (int f : factors) {
    if (!label.empty()) label += '_';
    label += branch_sources.count(f) ? std::to_string(f) : "s";
  }
  return label;
}

namespace {

void copy_matching(ParameterMap& target, const ParameterMap& source, const std::string& prefix) {
  for (auto& [name, p] : target) {
    if (name.rfind(prefix, 0) != 0) continue;
    if (!source.contains(name)) {
      throw TransferError("source checkpoint lacks parameter " + name);
    }
    const Array& value = source[name].value();
    if (value.shape() != p.tensor.shape()) {
      throw TransferError("shape mismatch for " + name + ": source " + to_string(value.shape()) +
                          ", target " + to_string(p.tensor.shape()));
    }
    p.tensor.mutable_value() = value;
  }
}

}  // namespace

ModelState init_model(const ModelConfig& config, const InitSources& sources, std::uint64_t seed) {
  ModelState model = init_scratch(config, seed);
  for (const auto& [factor, source] : sources.branches) {
    config.frontend.branch(factor);
    copy_matching(model.params, source->params, branch_prefix(factor) + ".");
  }
  if (sources.encoder_decoder) {
    for (const char* prefix : {"encoder.", "decoder.", "heads."}) {
      copy_matching(model.params, sources.encoder_decoder->params, prefix);
    }
  }
  return model;
}

ModelState init_model(const InitPlan& plan, const ModelConfig& config, std::uint64_t seed) {
  std::map<std::string, ModelState> loaded;
  auto load = [&](const std::string& path) -> const ModelState* {
    auto it = loaded.find(path);
    if (it == loaded.end()) it = loaded.emplace(path, load_checkpoint(path).model).first;
    return &it->second;
  };
  InitSources sources;
  for (const auto& [factor, path] : plan.branch_sources) sources.branches[factor] = load(path);
  if (plan.encoder_decoder_source) sources.encoder_decoder = load(*plan.encoder_decoder_source);
  return init_model(config, sources, seed);
}

}  // namespace hydra
