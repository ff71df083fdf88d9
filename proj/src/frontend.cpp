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

#include "hydra/frontend.hpp"

#include <algorithm>
#include <cmath>

namespace hydra {

namespace {

Index conv_out(Index extent, Index kernel, Index stride) {
  return extent < kernel ? 0 : (extent - kernel) / stride + 1;
}

ConvLayerSpec layer_for_stride(Index stride, Index channels) {
  const Index kernel = 2 * stride - 1;
  return {kernel, kernel, stride, stride, channels};
}

}  // namespace

Index BranchSpec::final_freq() const {
  Index f = input_dim;
  for (const auto& l : layers) f = conv_out(f, l.kernel_f, l.stride_f);
  return f;
}

Index BranchSpec::linear_in() const {
  return layers.empty() ? input_dim : layers.back().out_channels * final_freq();
}

Index BranchSpec::min_frames() const {
  Index needed = 1;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    needed = (needed - 1) * it->stride_t + it->kernel_t;
  }
  return needed;
}

void BranchSpec::validate() const {
  if (layers.empty()) throw ConfigError("branch has no conv layers");
  Index product = 1;
  for (const auto& l : layers) {
    if (l.stride_t < 1 || l.stride_f < 1) throw ConfigError("conv strides must be >= 1");
    if (l.kernel_t != 2 * l.stride_t - 1 || l.kernel_f != 2 * l.stride_f - 1) {
      throw ConfigError("conv kernel must be 2 * stride - 1 per axis");
    }
    if (l.out_channels < 1) throw ConfigError("conv layer needs output channels");
    product *= l.stride_t;
  }
  if (product != factor) {
    throw ConfigError("time strides multiply to " + std::to_string(product) +
                      ", expected factor " + std::to_string(factor));
  }
  if (final_freq() < 1) {
    throw ConfigError("input_dim " + std::to_string(input_dim) +
                      " too narrow for branch " + std::to_string(factor));
  }
}

BranchSpec build_branch(int factor, Index model_dim, Index input_dim) {
  BranchSpec spec;
  spec.factor = factor;
  spec.model_dim = model_dim;
  spec.input_dim = input_dim;
  switch (factor) {
    case 4:
      spec.layers = {layer_for_stride(2, model_dim), layer_for_stride(2, model_dim)};
      break;
    case 6:
      spec.layers = {layer_for_stride(2, model_dim), layer_for_stride(3, model_dim)};
      break;
    case 8:
      spec.layers = {layer_for_stride(2, model_dim), layer_for_stride(2, model_dim),
                     layer_for_stride(2, model_dim)};
      break;
    default:
      throw ConfigError("unsupported subsampling factor " + std::to_string(factor) +
                        " (supported: 4, 6, 8)");
  }
  spec.validate();
  return spec;
}

const BranchSpec& FrontendConfig::branch(int factor) const {
  for (const auto& b : branches) {
    if (b.factor == factor) return b;
  }
  throw ConfigError("branch " + std::to_string(factor) + " is not configured");
}

std::vector<int> FrontendConfig::factors() const {
  std::vector<int> out;
  for (const auto& b : branches) out.push_back(b.factor);
  return out;
}

void FrontendConfig::validate() const {
  if (branches.empty()) throw ConfigError("frontend needs at least one branch");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    branches[i].validate();
    if (i > 0 && branches[i].factor <= branches[i - 1].factor) {
      throw ConfigError("branch factors must be unique and ascending");
    }
    if (branches[i].model_dim != model_dim || branches[i].input_dim != input_dim) {
      throw ConfigError("branch dims disagree with frontend dims");
    }
  }
}

FrontendConfig make_frontend_config(const std::vector<int>& factors, Index model_dim,
                                    Index input_dim, bool use_pos_enc) {
  FrontendConfig config;
  config.model_dim = model_dim;
  config.input_dim = input_dim;
  config.use_pos_enc = use_pos_enc;
  std::vector<int> sorted = factors;
  std::sort(sorted.begin(), sorted.end());
  for (int f : sorted) config.branches.push_back(build_branch(f, model_dim, input_dim));
  config.validate();
  return config;
}

void FeatureBatch::validate() const {
  if (features.rank() != 3) {
    throw DimensionError("features must be (B, T, I), got " + to_string(features.shape()));
  }
  if (static_cast<Index>(lengths.size()) != batch()) {
    throw DimensionError("lengths do not match batch size");
  }
  for (int len : lengths) {
    if (len < 1 || len > frames()) {
      throw DimensionError("utterance length " + std::to_string(len) +
                           " outside [1, " + std::to_string(frames()) + "]");
    }
  }
}

Index subsampled_length(Index frames, const BranchSpec& spec) {
  if (frames < 1) throw TooShortError("utterance has no frames");
  Index len = frames;
  for (const auto& l : spec.layers) {
    len = conv_out(len, l.kernel_t, l.stride_t);
    if (len < 1) {
      throw TooShortError(std::to_string(frames) + " frames too short for branch " +
                          std::to_string(spec.factor) + " (needs " +
                          std::to_string(spec.min_frames()) + ")");
    }
  }
  return len;
}

std::string branch_prefix(int factor) { return "frontend.sub" + std::to_string(factor); }

void init_branch(ParameterMap& params, const BranchSpec& spec, std::uint64_t seed) {
  const std::string prefix = branch_prefix(spec.factor);
  Index in_channels = 1;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const std::string name = prefix + ".conv" + std::to_string(i);
    const Index fan_in = in_channels * l.kernel_t * l.kernel_f;
    params.add(name + ".weight",
               uniform_init({l.out_channels, in_channels, l.kernel_t, l.kernel_f},
                            std::sqrt(6.0 / static_cast<double>(fan_in)), seed,
                            name + ".weight"));
    params.add(name + ".bias", Array({l.out_channels}));
    in_channels = l.out_channels;
  }
  const Index fan_in = spec.linear_in();
  params.add(prefix + ".out.weight",
             uniform_init({spec.model_dim, fan_in}, std::sqrt(3.0 / static_cast<double>(fan_in)),
                          seed, prefix + ".out.weight"));
  params.add(prefix + ".out.bias", Array({spec.model_dim}));
  params.add(prefix + ".norm.gain", Array::constant({spec.model_dim}, 1.0));
  params.add(prefix + ".norm.offset", Array({spec.model_dim}));
}

Array sinusoidal_table(Index steps, Index width) {
  Array table({steps, width});
  for (Index t = 0; t < steps; ++t) {
    for (Index i = 0; i < width; i += 2) {
      const double rate = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
      table.at(t, i) = std::sin(static_cast<double>(t) * rate);
      if (i + 1 < width) table.at(t, i + 1) = std::cos(static_cast<double>(t) * rate);
    }
  }
  return table;
}

Tensor pos_enc(const Tensor& z) {
  const Index batch = z.dim(0), steps = z.dim(1), width = z.dim(2);
  const Array table = sinusoidal_table(steps, width);
  Array tiled({batch, steps, width});
  for (Index b = 0; b < batch; ++b) {
    tiled.matrix(batch * steps, width).middleRows(b * steps, steps) = table.rows();
  }
  return add_constant(scale(z, std::sqrt(static_cast<double>(width))), tiled);
}

FrontendOutput frontend_forward(const FeatureBatch& batch, const BranchSpec& spec,
                                bool use_pos_enc, const ParameterMap& params) {
  batch.validate();
  if (batch.features.dim(2) != spec.input_dim) {
    throw DimensionError("feature width " + std::to_string(batch.features.dim(2)) +
                         " != branch input_dim " + std::to_string(spec.input_dim));
  }
  FrontendOutput out;
  for (int len : batch.lengths) {
    out.lengths.push_back(static_cast<int>(subsampled_length(len, spec)));
  }
  const std::string prefix = branch_prefix(spec.factor);
  Tensor x = Tensor::constant(
      batch.features.reshaped({batch.batch(), 1, batch.frames(), spec.input_dim}));
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const std::string name = prefix + ".conv" + std::to_string(i);
    x = relu(conv2d(x, params[name + ".weight"], params[name + ".bias"], l.stride_t, l.stride_f));
  }
  Tensor z = linear(flatten_channels(x), params[prefix + ".out.weight"],
                    params[prefix + ".out.bias"]);
  if (use_pos_enc) z = pos_enc(z);
  out.embedding = layer_norm(z, params[prefix + ".norm.gain"], params[prefix + ".norm.offset"]);
  return out;
}

}  // namespace hydra
