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

#include <random>

#include "hydra/core/tensor.hpp"

namespace hydra::testing {

inline Array random_array(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                          double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Array out(std::move(shape));
  for (Index i = 0; i < out.size(); ++i) out[i] = dist(rng);
  return out;
}

inline Tensor random_leaf(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                          double hi = 1.0) {
  return Tensor::leaf(random_array(std::move(shape), rng, lo, hi));
}

}  // namespace hydra::testing
