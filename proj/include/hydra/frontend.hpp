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
#include <string>
#include <vector>

#include "hydra/core/parameter.hpp"
#include "hydra/core/tensor.hpp"

namespace hydra {

struct ConvLayerSpec {
  Index kernel_t = 3;
  Index kernel_f = 3;
  Index stride_t = 2;
  Index stride_f = 2;
  Index out_channels = 0;
};

/// One subsampling branch: a stack of valid Conv2d+ReLU layers over
/// (time, frequency), then a Linear to model_dim.
struct BranchSpec {
  int factor = 4;
  std::vector<ConvLayerSpec> layers;
  Index model_dim = 64;
  Index input_dim = 80;

  /// Frequency extent after the conv stack (>= 1 for a valid spec).
  Index final_freq() const;
  /// Width of the Linear input: out_channels(last) * final_freq().
  Index linear_in() const;
  /// Smallest input length this branch accepts.
  Index min_frames() const;
  void validate() const;
};

struct FrontendConfig {
  std::vector<BranchSpec> branches;
  bool use_pos_enc = false;
  Index input_dim = 80;
  Index model_dim = 64;

  const BranchSpec& branch(int factor) const;
  std::vector<int> factors() const;
  void validate() const;
};

/// Padded feature batch (B, T, I) plus true frame counts.
struct FeatureBatch {
  Array features;
  std::vector<int> lengths;

  Index batch() const { return features.dim(0); }
  Index frames() const { return features.dim(1); }
  void validate() const;
};

struct FrontendOutput {
  Tensor embedding;  // (B, T', D)
  std::vector<int> lengths;
};

/// Supported factors are 4 (strides 2,2), 6 (2,3) and 8 (2,2,2); kernel is
/// 2 * stride - 1 on both axes.
BranchSpec build_branch(int factor, Index model_dim, Index input_dim);
FrontendConfig make_frontend_config(const std::vector<int>& factors, Index model_dim,
                                    Index input_dim, bool use_pos_enc = false);

/// Output length of the branch's conv stack; TooShortError if any layer
/// would produce fewer than one frame.
Index subsampled_length(Index frames, const BranchSpec& spec);

std::string branch_prefix(int factor);

/// Registers the branch's parameters under branch_prefix(factor).
void init_branch(ParameterMap& params, const BranchSpec& spec, std::uint64_t seed);

/// Sinusoidal table (steps, width): even columns sin, odd columns cos.
Array sinusoidal_table(Index steps, Index width);

/// z * sqrt(D) + sinusoidal table, broadcast over the batch.
Tensor pos_enc(const Tensor& z);

FrontendOutput frontend_forward(const FeatureBatch& batch, const BranchSpec& spec,
                                bool use_pos_enc, const ParameterMap& params);

}  // namespace hydra
