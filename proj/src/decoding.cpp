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

#include "hydra/decoding.hpp"

#include <algorithm>

namespace hydra {

TokenSeq ctc_collapse(std::span<const int> path, int blank) {
  TokenSeq out;
  int previous = -1;
  for (int id : path) {
    if (id != previous && id != blank) out.push_back(id);
    previous = id;
  }
  return out;
}

std::size_t select_rescored(std::span<const double> attention_scores,
                            std::span<const double> ctc_scores, double ctc_weight,
                            const NBestList& candidates) {
  if (candidates.empty()) throw UsageError("cannot rescore an empty n-best list");
  if (attention_scores.size() != candidates.size() || ctc_scores.size() != candidates.size()) {
    throw DimensionError("rescoring: score lists do not match candidates");
  }
  std::size_t best = 0;
  auto final_score = [&](std::size_t i) { return attention_scores[i] + ctc_weight * ctc_scores[i]; };
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double a = final_score(i), b = final_score(best);
    if (a > b || (a == b && (ctc_scores[i] > ctc_scores[best] ||
                             (ctc_scores[i] == ctc_scores[best] &&
                              candidates[i].tokens < candidates[best].tokens)))) {
      best = i;
    }
  }
  return best;
}

namespace {

std::vector<double> teacher_forced_scores(const ModelState& model, const Tensor& memory,
                                          std::span<const int> lengths,
                                          const std::vector<TokenSeq>& candidates,
                                          Direction direction, bool length_normalize) {
  const int eos = model.config.decoder.eos();
  const Tensor logits = decode_step(model, memory, lengths, candidates, direction);
  const Array log_p = log_softmax(logits).value();
  std::vector<double> scores;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const TokenSeq expected = decoder_output_targets(candidates[i], direction, eos);
    double s = 0.0;
    for (std::size_t u = 0; u < expected.size(); ++u) {
      s += log_p.at(static_cast<Index>(i), static_cast<Index>(u), expected[u]);
    }
    if (length_normalize) s /= static_cast<double>(expected.size());
    scores.push_back(s);
  }
  return scores;
}

}  // namespace

TokenSeq attention_rescore(const ModelState& model, NBestList& nbest, const Tensor& encoded,
                           int length, const RescoreOptions& options) {
  if (nbest.empty()) throw UsageError("cannot rescore an empty n-best list");
  if (nbest.size() == 1) {
    nbest.front().rescored = nbest.front().ctc_score;
    return nbest.front().tokens;
  }
  NoGradGuard no_grad;
  const Index n = static_cast<Index>(nbest.size());
  const Index steps = encoded.dim(1), width = encoded.dim(2);
  Array tiled({n, steps, width});
  for (Index i = 0; i < n; ++i) {
    tiled.matrix(n * steps, width).middleRows(i * steps, steps) = encoded.value().rows();
  }
  const Tensor memory = Tensor::constant(std::move(tiled));
  const std::vector<int> lengths(static_cast<std::size_t>(n), length);
  std::vector<TokenSeq> candidates;
  std::vector<double> ctc;
  for (const auto& h : nbest) {
    candidates.push_back(h.tokens);
    ctc.push_back(h.ctc_score);
  }

  std::vector<double> att = teacher_forced_scores(model, memory, lengths, candidates,
                                                  Direction::kLeftToRight, options.length_normalize);
  if (model.config.decoder.has_r2l() && options.beta > 0.0) {
    const std::vector<double> r2l = teacher_forced_scores(
        model, memory, lengths, candidates, Direction::kRightToLeft, options.length_normalize);
    for (std::size_t i = 0; i < att.size(); ++i) {
      att[i] = (1.0 - options.beta) * att[i] + options.beta * r2l[i];
    }
  }
  for (std::size_t i = 0; i < nbest.size(); ++i) {
    nbest[i].rescored = att[i] + options.ctc_weight * ctc[i];
  }
  TokenSeq winner = nbest[select_rescored(att, ctc, options.ctc_weight, nbest)].tokens;
  std::stable_sort(nbest.begin(), nbest.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (*a.rescored != *b.rescored) return *a.rescored > *b.rescored;
    if (a.ctc_score != b.ctc_score) return a.ctc_score > b.ctc_score;
    return a.tokens < b.tokens;
  });
  return winner;
}

std::vector<TokenSeq> decode_batch(const ModelState& model, const FeatureBatch& batch, int factor,
                                   const DecodeOptions& options) {
  NoGradGuard no_grad;
  const ModelOutputs out = forward_encoder(model, batch, factor);
  const Array& log_probs = out.ctc_log_probs.value();
  const Index b = log_probs.dim(0), steps = log_probs.dim(1), vocab = log_probs.dim(2);
  const Index width = out.encoded.dim(2);
  std::vector<TokenSeq> results;
  for (Index i = 0; i < b; ++i) {
    const int len = out.frontend.lengths[static_cast<std::size_t>(i)];
    const auto rows = log_probs.matrix(b * steps, vocab).middleRows(i * steps, len);
    if (options.mode == DecodeMode::kGreedy) {
      results.push_back(ctc_greedy(rows));
      continue;
    }
    NBestList nbest = ctc_prefix_beam(rows, options.beam);
    Array single({1, len, width});
    single.rows() = out.encoded.value().matrix(b * steps, width).middleRows(i * steps, len);
    results.push_back(attention_rescore(model, nbest, Tensor::constant(std::move(single)), len,
                                        options.rescore));
  }
  return results;
}

Index edit_distance(std::span<const int> a, std::span<const int> b) {
  std::vector<Index> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<Index>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    Index diagonal = row[0];
    row[0] = static_cast<Index>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const Index up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = up;
    }
  }
  return row[b.size()];
}

double token_accuracy(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<TokenSeq>& references) {
  if (hypotheses.size() != references.size()) {
    throw DimensionError("token_accuracy: hypothesis/reference count mismatch");
  }
  Index errors = 0, total = 0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    errors += edit_distance(hypotheses[i], references[i]);
    total += static_cast<Index>(references[i].size());
  }
  if (total == 0) return errors == 0 ? 1.0 : 0.0;
  return std::max(0.0, 1.0 - static_cast<double>(errors) / static_cast<double>(total));
}

}  // namespace hydra
