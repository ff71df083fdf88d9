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

#include "hydra/core/parameter.hpp"

#include <random>

namespace hydra {

Parameter& ParameterMap::add(const std::string& name, Array value) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) throw ConfigError("duplicate parameter name " + name);
  it->second.name = name;
  it->second.tensor = Tensor::leaf(std::move(value), true);
  return it->second;
}

const Tensor& ParameterMap::operator[](std::string_view name) const {
  return at(name).tensor;
}

Parameter& ParameterMap::at(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + std::string(name));
  return it->second;
}

const Parameter& ParameterMap::at(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + std::string(name));
  return it->second;
}

ParameterMap ParameterMap::clone() const {
  ParameterMap out;
  for (const auto& [name, p] : params_) {
    out.add(name, p.tensor.value()).step_count = p.step_count;
  }
  return out;
}

void ParameterMap::zero_grad() {
  for (auto& [name, p] : params_) p.tensor.zero_grad();
}

Index ParameterMap::total_size() const {
  Index n = 0;
  for (const auto& [name, p] : params_) n += p.tensor.size();
  return n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  // FNV-1a over the name, mixed with the run seed.
  std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Array uniform_init(Shape shape, double bound, std::uint64_t seed, std::string_view name) {
  std::mt19937_64 rng(derive_seed(seed, name));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Array out(std::move(shape));
  for (Index i = 0; i < out.size(); ++i) out[i] = dist(rng);
  return out;
}

}  // namespace hydra
