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

#include "hydra/objectives.hpp"

namespace hydra {

void LossWeights::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0, 1]");
  if (beta < 0.0 || beta > 1.0) throw ConfigError("beta must lie in [0, 1]");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw ConfigError("label_smoothing must lie in [0, 1)");
  }
}

Index ctc_min_frames(std::span<const int> target) {
  Index frames = static_cast<Index>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++frames;
  }
  return frames;
}

Tensor ctc_loss(const Tensor& log_probs, std::span<const int> lengths,
                const std::vector<TokenSeq>& targets, int blank) {
  if (log_probs.value().rank() != 3) {
    throw DimensionError("ctc_loss expects (B, T, V), got " + to_string(log_probs.shape()));
  }
  const Index batch = log_probs.dim(0), steps = log_probs.dim(1), vocab = log_probs.dim(2);
  if (static_cast<Index>(lengths.size()) != batch || static_cast<Index>(targets.size()) != batch) {
    throw DimensionError("ctc_loss: lengths/targets do not match batch");
  }
  const auto all = log_probs.value().matrix(batch * steps, vocab);
  auto grad = std::make_shared<Array>(log_probs.shape());
  auto grad_rows = grad->matrix(batch * steps, vocab);
  double total = 0.0;
  for (Index b = 0; b < batch; ++b) {
    const auto& target = targets[static_cast<std::size_t>(b)];
    const auto result = ctc_forward_backward(all.middleRows(b * steps, lengths[b]),
                                             std::span<const int>(target), blank);
    total += result.loss;
    grad_rows.middleRows(b * steps, lengths[b]) = result.grad / static_cast<double>(batch);
  }
  return Tensor::from_op(Array::scalar(total / static_cast<double>(batch)), {log_probs},
                         [grad](detail::Node& self) {
                           self.inputs[0]->grad_buffer().values() += self.grad[0] * grad->values();
                         });
}

Tensor kl_attention_loss(const Tensor& logits, const std::vector<TokenSeq>& targets_with_eos,
                         double label_smoothing) {
  if (logits.value().rank() != 3) {
    throw DimensionError("kl_attention_loss expects (B, U + 1, V), got " +
                         to_string(logits.shape()));
  }
  const Index batch = logits.dim(0), steps = logits.dim(1), vocab = logits.dim(2);
  if (static_cast<Index>(targets_with_eos.size()) != batch) {
    throw DimensionError("kl_attention_loss: targets do not match batch");
  }
  const double eps = label_smoothing;
  const double on = 1.0 - eps;
  const double off = eps / static_cast<double>(vocab - 1);
  auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  const double neg_entropy = xlogx(on) + static_cast<double>(vocab - 1) * xlogx(off);

  Index positions = 0;
  for (const auto& t : targets_with_eos) positions += static_cast<Index>(t.size());
  if (positions == 0) throw UsageError("kl_attention_loss: no target positions");

  Array weights(logits.shape());
  auto w = weights.matrix(batch * steps, vocab);
  const double norm = 1.0 / static_cast<double>(positions);
  for (Index b = 0; b < batch; ++b) {
    const auto& t = targets_with_eos[static_cast<std::size_t>(b)];
    if (static_cast<Index>(t.size()) > steps) {
      throw DimensionError("kl_attention_loss: target longer than logits");
    }
    for (std::size_t u = 0; u < t.size(); ++u) {
      if (t[u] < 0 || t[u] >= vocab) throw VocabError("target id " + std::to_string(t[u]));
      auto row = w.row(b * steps + static_cast<Index>(u));
      row.setConstant(-off * norm);
      row[t[u]] = -on * norm;
    }
  }
  return add_constant(weighted_sum(log_softmax(logits), weights), Array::scalar(neg_entropy));
}

double total_loss(double ctc, double l2r, double r2l, const LossWeights& weights) {
  return weights.alpha * ctc +
         (1.0 - weights.alpha) * ((1.0 - weights.beta) * l2r + weights.beta * r2l);
}

LossTerms total_loss(const Tensor& ctc_log_probs, std::span<const int> lengths,
                     const Tensor& l2r_logits, const Tensor& r2l_logits,
                     const std::vector<TokenSeq>& targets, int eos, const LossWeights& weights) {
  weights.validate();
  LossTerms terms;
  const Tensor ctc = ctc_loss(ctc_log_probs, lengths, targets);
  terms.ctc = ctc.item();
  terms.total = scale(ctc, weights.alpha);
  if (weights.alpha >= 1.0) return terms;

  std::vector<TokenSeq> l2r_out, r2l_out;
  for (const auto& t : targets) {
    l2r_out.push_back(decoder_output_targets(t, Direction::kLeftToRight, eos));
    r2l_out.push_back(decoder_output_targets(t, Direction::kRightToLeft, eos));
  }
  const double beta = r2l_logits.defined() ? weights.beta : 0.0;
  const Tensor l2r = kl_attention_loss(l2r_logits, l2r_out, weights.label_smoothing);
  terms.kl_l2r = l2r.item();
  Tensor attention = scale(l2r, 1.0 - beta);
  if (r2l_logits.defined()) {
    const Tensor r2l = kl_attention_loss(r2l_logits, r2l_out, weights.label_smoothing);
    terms.kl_r2l = r2l.item();
    attention = attention + scale(r2l, beta);
  }
  terms.total = terms.total + scale(attention, 1.0 - weights.alpha);
  return terms;
}

}  // namespace hydra
