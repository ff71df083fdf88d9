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

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "hydra/core/tensor.hpp"
#include "hydra/model.hpp"

namespace hydra {

struct LossWeights {
  double alpha = 0.3;            // CTC weight
  double beta = 0.3;             // right-to-left share of the attention term
  double label_smoothing = 0.1;  // eps

  void validate() const;
};

template <typename Scalar>
Scalar log_add(Scalar a, Scalar b) {
  constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// Fewest frames that can emit `target`: one per label plus one blank
/// between each pair of equal neighbours.
Index ctc_min_frames(std::span<const int> target);

template <typename Scalar>
struct CtcResult {
  Scalar loss;               // -log p(target | x)
  RowMatrix<Scalar> grad;    // d loss / d log_probs, (T, V)
};

/// Log-space forward-backward over the blank-interleaved target.
/// log_probs is (T, V) with one row per frame.
template <typename Derived>
CtcResult<typename Derived::Scalar> ctc_forward_backward(
    const Eigen::MatrixBase<Derived>& log_probs, std::span<const int> target, int blank = 0) {
  using Scalar = typename Derived::Scalar;
  constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();
  const Index frames = log_probs.rows();
  const Index vocab = log_probs.cols();
  for (int id : target) {
    if (id < 0 || id >= vocab || id == blank) {
      throw VocabError("invalid CTC target id " + std::to_string(id));
    }
  }
  if (frames < ctc_min_frames(target)) {
    throw InfeasibleTargetError("target of length " + std::to_string(target.size()) +
                                " cannot be aligned to " + std::to_string(frames) + " frames");
  }
  const Index states = 2 * static_cast<Index>(target.size()) + 1;
  auto label = [&](Index s) { return s % 2 == 0 ? blank : target[static_cast<std::size_t>(s / 2)]; };
  auto can_skip = [&](Index s) { return s >= 2 && label(s) != blank && label(s) != label(s - 2); };

  RowMatrix<Scalar> alpha = RowMatrix<Scalar>::Constant(frames, states, kNegInf);
  RowMatrix<Scalar> beta = RowMatrix<Scalar>::Constant(frames, states, kNegInf);
  alpha(0, 0) = log_probs(0, blank);
  if (states > 1) alpha(0, 1) = log_probs(0, label(1));
  for (Index t = 1; t < frames; ++t) {
    for (Index s = 0; s < states; ++s) {
      Scalar a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + log_probs(t, label(s));
    }
  }
  // beta(t, s): log-prob of emitting frames t+1.. given state s at frame t.
  beta(frames - 1, states - 1) = 0;
  if (states > 1) beta(frames - 1, states - 2) = 0;
  for (Index t = frames - 2; t >= 0; --t) {
    for (Index s = 0; s < states; ++s) {
      Scalar b = beta(t + 1, s) + log_probs(t + 1, label(s));
      if (s + 1 < states) b = log_add(b, beta(t + 1, s + 1) + log_probs(t + 1, label(s + 1)));
      if (s + 2 < states && can_skip(s + 2)) {
        b = log_add(b, beta(t + 1, s + 2) + log_probs(t + 1, label(s + 2)));
      }
      beta(t, s) = b;
    }
  }
  Scalar log_likelihood = alpha(frames - 1, states - 1);
  if (states > 1) log_likelihood = log_add(log_likelihood, alpha(frames - 1, states - 2));

  CtcResult<Scalar> result{-log_likelihood, RowMatrix<Scalar>::Zero(frames, vocab)};
  for (Index t = 0; t < frames; ++t) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> occupancy =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(vocab, kNegInf);
    for (Index s = 0; s < states; ++s) {
      occupancy[label(s)] = log_add(occupancy[label(s)], alpha(t, s) + beta(t, s));
    }
    for (Index v = 0; v < vocab; ++v) {
      if (occupancy[v] != kNegInf) result.grad(t, v) = -std::exp(occupancy[v] - log_likelihood);
    }
  }
  return result;
}

/// -log p(target | log_probs) for a single (T, V) utterance.
template <typename Derived>
typename Derived::Scalar ctc_loss(const Eigen::MatrixBase<Derived>& log_probs,
                                  std::span<const int> target, int blank = 0) {
  return ctc_forward_backward(log_probs, target, blank).loss;
}

/// Batch CTC: log_probs (B, T', V) with per-utterance frame counts; mean of
/// the per-utterance losses.
Tensor ctc_loss(const Tensor& log_probs, std::span<const int> lengths,
                const std::vector<TokenSeq>& targets, int blank = 0);

/// Per-position label-smoothed KL(q || softmax(logits)) averaged over all
/// non-padding positions. logits (B, U_max + 1, V); each target already
/// ends with eos and has at most U_max + 1 entries.
Tensor kl_attention_loss(const Tensor& logits, const std::vector<TokenSeq>& targets_with_eos,
                         double label_smoothing);

/// alpha * ctc + (1 - alpha) * ((1 - beta) * l2r + beta * r2l).
double total_loss(double ctc, double l2r, double r2l, const LossWeights& weights);

struct LossTerms {
  Tensor total;
  double ctc = 0.0;
  double kl_l2r = 0.0;
  double kl_r2l = 0.0;
};

/// Differentiable combination. Pass an undefined r2l_logits to drop the
/// right-to-left term (equivalent to beta = 0).
LossTerms total_loss(const Tensor& ctc_log_probs, std::span<const int> lengths,
                     const Tensor& l2r_logits, const Tensor& r2l_logits,
                     const std::vector<TokenSeq>& targets, int eos, const LossWeights& weights);

}  // namespace hydra
