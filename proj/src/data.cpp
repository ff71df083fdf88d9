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

#include "hydra/data.hpp"

#include <algorithm>

namespace hydra {

FeatureBatch collate(std::span<const Utterance* const> utterances) {
  if (utterances.empty()) throw UsageError("cannot collate an empty batch");
  const Index width = utterances.front()->features.dim(1);
  Index frames = 0;
  for (const auto* u : utterances) {
    if (u->features.dim(1) != width) throw DimensionError("feature widths differ within batch");
    frames = std::max(frames, u->frames());
  }
  const Index batch = static_cast<Index>(utterances.size());
  FeatureBatch out{Array({batch, frames, width}), {}};
  for (Index b = 0; b < batch; ++b) {
    const Utterance& u = *utterances[static_cast<std::size_t>(b)];
    out.features.matrix(batch * frames, width).middleRows(b * frames, u.frames()) =
        u.features.rows();
    out.lengths.push_back(static_cast<int>(u.frames()));
  }
  return out;
}

std::vector<TokenSeq> targets_of(std::span<const Utterance* const> utterances) {
  std::vector<TokenSeq> out;
  out.reserve(utterances.size());
  for (const auto* u : utterances) out.push_back(u->tokens);
  return out;
}

}  // namespace hydra
