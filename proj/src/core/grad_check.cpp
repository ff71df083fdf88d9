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

#include "hydra/core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hydra {

double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                  const GradCheckOptions& options) {
  for (auto& p : params) p.zero_grad();
  const Tensor out = f();
  if (out.size() != 1) {
    throw UsageError("grad_check needs a scalar-valued function, got " +
                     to_string(out.shape()));
  }
  out.backward();

  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  for (auto& p : params) {
    const Array analytic = p.has_grad() ? p.grad() : Array(p.shape());
    std::vector<Index> coords(static_cast<std::size_t>(p.size()));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (p.size() > options.samples_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(options.samples_per_param));
    }
    NoGradGuard no_grad;
    for (Index i : coords) {
      double& x = p.mutable_value()[i];
      const double saved = x;
      x = saved + options.step;
      const double up = f().item();
      x = saved - options.step;
      const double down = f().item();
      x = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

}  // namespace hydra
