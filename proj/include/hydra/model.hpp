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
#include <random>
#include <span>
#include <vector>

#include "hydra/core/parameter.hpp"
#include "hydra/core/tensor.hpp"
#include "hydra/frontend.hpp"

namespace hydra {

/// Target token ids. Reserved ids: blank = 0, sos = V - 2, eos = V - 1.
using TokenSeq = std::vector<int>;

struct EncoderConfig {
  Index num_blocks = 4;
  Index model_dim = 64;
  Index heads = 4;
  Index ffn_dim = 128;
  Index depthwise_kernel = 7;
  double dropout_rate = 0.0;

  void validate() const;
};

struct DecoderConfig {
  Index num_blocks_l2r = 2;
  Index num_blocks_r2l = 2;  // 0 disables the right-to-left stack
  Index model_dim = 64;
  Index heads = 4;
  Index ffn_dim = 128;
  Index vocab_size = 0;
  double dropout_rate = 0.0;

  int blank() const { return 0; }
  int sos() const { return static_cast<int>(vocab_size) - 2; }
  int eos() const { return static_cast<int>(vocab_size) - 1; }
  bool has_r2l() const { return num_blocks_r2l > 0; }
  void validate() const;
};

struct ModelConfig {
  FrontendConfig frontend;
  EncoderConfig encoder;
  DecoderConfig decoder;

  void validate() const;
};

/// Small model that overfits synthetic data in minutes.
ModelConfig desk_config(Index vocab_size, const std::vector<int>& factors = {4, 6, 8});
/// Full-size layout (12 conformer blocks, D = 256, 3 + 3 decoder blocks).
ModelConfig large_config(Index vocab_size, const std::vector<int>& factors = {4, 6, 8});
/// Full-size block layout at desk width: 12 conformer blocks with an 8 * D
/// feed-forward, so encoder cost dominates as in the full-size model.
ModelConfig narrow_config(Index vocab_size, const std::vector<int>& factors = {4, 6, 8});

/// Parameters plus the configuration that shaped them. Parameter names
/// partition into frontend.sub{n}.*, encoder.*, decoder.* and heads.*.
struct ModelState {
  ModelConfig config;
  ParameterMap params;

  ModelState clone() const { return {config, params.clone()}; }
};

/// Fresh model with every parameter drawn from derive_seed(seed, name).
ModelState init_scratch(const ModelConfig& config, std::uint64_t seed);

enum class Direction { kLeftToRight, kRightToLeft };

struct ForwardOptions {
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;  // required when dropout > 0
};

/// Conformer stack. O (B, T', D) -> C (B, T', D); padding frames never
/// influence valid ones.
Tensor encode(const ModelState& model, const Tensor& embedding, std::span<const int> lengths,
              const ForwardOptions& options = {});

/// Linear D -> V followed by log-softmax.
Tensor ctc_head(const ModelState& model, const Tensor& encoded);

/// Teacher-forced decoder pass. Each target is fed as [sos, y...] (l2r) or
/// [sos, reverse(y)...] (r2l), padded with eos; returns logits (B, U_max + 1, V).
Tensor decode_step(const ModelState& model, const Tensor& encoded, std::span<const int> lengths,
                   const std::vector<TokenSeq>& targets, Direction direction,
                   const ForwardOptions& options = {});

/// Expected next tokens for decode_step: y + [eos] (or reversed y + [eos]).
TokenSeq decoder_output_targets(const TokenSeq& target, Direction direction, int eos);

struct ModelOutputs {
  FrontendOutput frontend;
  Tensor encoded;
  Tensor ctc_log_probs;
};

ModelOutputs forward_encoder(const ModelState& model, const FeatureBatch& batch, int factor,
                             const ForwardOptions& options = {});

}  // namespace hydra
