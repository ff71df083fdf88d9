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
#include <functional>
#include <span>

#include "hydra/core/tensor.hpp"

namespace hydra {

struct GradCheckOptions {
  double step = 1e-5;
  Index samples_per_param = 24;  // all coordinates when the tensor is smaller
  std::uint64_t seed = 17;
};

/// Compares reverse-mode gradients of the scalar graph built by `f` against
/// central differences. Returns max |analytic - numeric| / max(1, |analytic|)
/// over the sampled coordinates.
double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                  const GradCheckOptions& options = {});

}  // namespace hydra
