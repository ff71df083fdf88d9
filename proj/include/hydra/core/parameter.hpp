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
#include <map>
#include <string>
#include <string_view>

#include "hydra/core/tensor.hpp"

namespace hydra {

struct Parameter {
  std::string name;
  Tensor tensor;
  std::int64_t step_count = 0;
};

/// Name-ordered parameter table. Iteration order is lexicographic, which
/// keeps every sweep over parameters deterministic.
class ParameterMap {
 public:
  using Storage = std::map<std::string, Parameter, std::less<>>;

  Parameter& add(const std::string& name, Array value);
  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }
  const Tensor& operator[](std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  Storage::iterator begin() { return params_.begin(); }
  Storage::iterator end() { return params_.end(); }
  Storage::const_iterator begin() const { return params_.begin(); }
  Storage::const_iterator end() const { return params_.end(); }

  /// Deep copy: new leaves with copied values and step counts.
  ParameterMap clone() const;
  void zero_grad();
  Index total_size() const;

 private:
  Storage params_;
};

/// Stable 64-bit seed derived from a run seed and a parameter name, so a
/// parameter's initial value does not depend on which others exist.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

/// Uniform(-bound, bound) values drawn from derive_seed(seed, name).
Array uniform_init(Shape shape, double bound, std::uint64_t seed, std::string_view name);

}  // namespace hydra
