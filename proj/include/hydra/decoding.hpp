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

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hydra/model.hpp"
#include "hydra/objectives.hpp"

namespace hydra {

/// Merges repeats, then drops blanks.
TokenSeq ctc_collapse(std::span<const int> path, int blank = 0);

/// Per-frame argmax (ties toward the lower id), collapsed.
template <typename Derived>
TokenSeq ctc_greedy(const Eigen::MatrixBase<Derived>& log_probs, int blank = 0) {
  std::vector<int> path(static_cast<std::size_t>(log_probs.rows()));
  for (Index t = 0; t < log_probs.rows(); ++t) {
    Index best = 0;
    log_probs.row(t).maxCoeff(&best);  // first maximum wins
    path[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return ctc_collapse(path, blank);
}

struct Hypothesis {
  TokenSeq tokens;
  double ctc_score = 0.0;           // log p(tokens | x)
  std::optional<double> rescored;   // attention-rescored score when set
};

using NBestList = std::vector<Hypothesis>;

namespace detail {

struct PrefixMass {
  double blank = -std::numeric_limits<double>::infinity();
  double label = -std::numeric_limits<double>::infinity();

  double total() const { return log_add(blank, label); }
};

}  // namespace detail

/// Prefix beam search tracking blank- and label-ending mass per prefix.
/// Returns up to `beam` hypotheses sorted by descending ctc_score (ties to
/// the lexicographically smaller prefix).
template <typename Derived>
NBestList ctc_prefix_beam(const Eigen::MatrixBase<Derived>& log_probs, Index beam,
                          int blank = 0) {
  using Scalar = typename Derived::Scalar;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (beam < 1) throw UsageError("beam must be >= 1");
  using Mass = detail::PrefixMass;
  using Beams = std::map<TokenSeq, Mass>;
  Beams beams{{TokenSeq{}, Mass{0.0, kNegInf}}};

  auto prune = [beam](Beams& candidates) {
    if (static_cast<Index>(candidates.size()) <= beam) return;
    std::vector<std::pair<double, const TokenSeq*>> order;
    for (const auto& [prefix, mass] : candidates) order.emplace_back(mass.total(), &prefix);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    Beams kept;
    for (Index i = 0; i < beam; ++i) kept.emplace(*order[i].second, candidates.at(*order[i].second));
    candidates = std::move(kept);
  };

  for (Index t = 0; t < log_probs.rows(); ++t) {
    Beams next;
    for (const auto& [prefix, mass] : beams) {
      const double lp_blank = static_cast<double>(static_cast<Scalar>(log_probs(t, blank)));
      Mass& same = next[prefix];
      same.blank = log_add(same.blank, mass.total() + lp_blank);
      for (Index v = 0; v < log_probs.cols(); ++v) {
        if (v == blank) continue;
        const double lp = static_cast<double>(log_probs(t, v));
        TokenSeq extended = prefix;
        extended.push_back(static_cast<int>(v));
        Mass& grown = next[extended];
        if (!prefix.empty() && prefix.back() == v) {
          grown.label = log_add(grown.label, mass.blank + lp);
          Mass& stay = next[prefix];
          stay.label = log_add(stay.label, mass.label + lp);
        } else {
          grown.label = log_add(grown.label, mass.total() + lp);
        }
      }
    }
    prune(next);
    beams = std::move(next);
  }

  NBestList out;
  for (const auto& [prefix, mass] : beams) {
    if (mass.total() == kNegInf) continue;
    out.push_back({prefix, mass.total(), std::nullopt});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.ctc_score > b.ctc_score; });
  if (static_cast<Index>(out.size()) > beam) out.resize(static_cast<std::size_t>(beam));
  return out;
}

/// Index of the best candidate under att + ctc_weight * ctc; ties go to the
/// higher ctc score, then the lexicographically smaller token sequence.
std::size_t select_rescored(std::span<const double> attention_scores,
                            std::span<const double> ctc_scores, double ctc_weight,
                            const NBestList& candidates);

struct RescoreOptions {
  double beta = 0.3;          // r2l share of the attention score
  double ctc_weight = 0.3;
  bool length_normalize = false;
};

/// Teacher-forced decoder scores for every candidate against one utterance's
/// encoder output (1, T', D); fills each hypothesis' `rescored`, re-sorts
/// the list by it and returns the winner.
TokenSeq attention_rescore(const ModelState& model, NBestList& nbest, const Tensor& encoded,
                           int length, const RescoreOptions& options);

enum class DecodeMode { kGreedy, kRescore };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  Index beam = 10;
  RescoreOptions rescore;
};

/// Decodes every utterance of the batch through branch `factor`.
std::vector<TokenSeq> decode_batch(const ModelState& model, const FeatureBatch& batch, int factor,
                                   const DecodeOptions& options);

/// 1 - edit_distance / |reference|, floored at 0, aggregated over a corpus.
double token_accuracy(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<TokenSeq>& references);
Index edit_distance(std::span<const int> a, std::span<const int> b);

}  // namespace hydra
