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

#include <span>
#include <string>
#include <vector>

#include "hydra/frontend.hpp"
#include "hydra/model.hpp"

namespace hydra {

struct Utterance {
  std::string id;
  Array features;  // (T, I)
  TokenSeq tokens;

  Index frames() const { return features.dim(0); }
};

/// Zero-padded batch over the given utterances.
FeatureBatch collate(std::span<const Utterance* const> utterances);

std::vector<TokenSeq> targets_of(std::span<const Utterance* const> utterances);

}  // namespace hydra
