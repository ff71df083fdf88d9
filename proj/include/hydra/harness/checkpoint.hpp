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

#include <string>
#include <vector>

#include "hydra/model.hpp"

namespace hydra {

enum class Dtype { kF32, kF64 };

struct CheckpointMeta {
  Index step = 0;
  std::vector<std::string> vocab;
};

struct Checkpoint {
  ModelState model;
  CheckpointMeta meta;
  Dtype dtype = Dtype::kF64;
};

/// Text header ("key = value" lines, then one "tensor <name> <dtype>
/// <offset> <shape> <step_count>" line per parameter, then "end_header")
/// followed by a little-endian tensor blob.
void save_checkpoint(const std::string& path, const ModelState& model,
                     const CheckpointMeta& meta = {}, Dtype dtype = Dtype::kF64);

/// Reconstructs the model from the header config and validates that the
/// tensor index covers every parameter with the expected shape.
Checkpoint load_checkpoint(const std::string& path);

/// Loads into an existing model whose configuration must match; `target`
/// is untouched when loading fails.
void load_checkpoint_into(const std::string& path, ModelState& target);

}  // namespace hydra
