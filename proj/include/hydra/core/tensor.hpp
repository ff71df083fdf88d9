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

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hydra/core/dense_array.hpp"

namespace hydra {

namespace detail {

struct Node {
  Array value;
  Array grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  bool has_grad() const { return grad.size() > 0; }
  Array& grad_buffer() {
    if (!has_grad()) grad = Array(value.shape());
    return grad;
  }
};

}  // namespace detail

/// Handle to a node of the reverse-mode graph. Copies share the node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Array value);
  static Tensor leaf(Array value, bool requires_grad = true);

  const Array& value() const { return node_->value; }
  /// Mutable access for optimizers and finite differences; never call while
  /// a graph built from this tensor is still awaiting backward().
  Array& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  Index dim(Index axis) const { return node_->value.dim(axis); }
  Index size() const { return node_->value.size(); }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && node_->has_grad(); }
  const Array& grad() const { return node_->grad; }
  Array& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad = Array(); }

  /// Back-propagates from a single-element tensor.
  void backward() const;

  bool defined() const { return static_cast<bool>(node_); }
  detail::Node* node() const { return node_.get(); }

  static Tensor from_op(Array value, std::vector<Tensor> inputs,
                        std::function<void(detail::Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// Additive attention mask: 0 keeps a position, -inf forbids it.
// Shape (B, Tq, Tk).
using AttentionMask = Array;

// ---- elementwise ----------------------------------------------------------
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_constant(const Tensor& a, const Array& c);
Tensor mul_constant(const Tensor& a, const Array& c);
Tensor relu(const Tensor& x);
Tensor silu(const Tensor& x);
/// Gated linear unit over the last axis: first half * sigmoid(second half).
Tensor glu(const Tensor& x);
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

// ---- reductions -----------------------------------------------------------
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// sum(w * x) with a constant weight array of x's shape.
Tensor weighted_sum(const Tensor& x, const Array& weights);

// ---- shape ----------------------------------------------------------------
Tensor reshape(const Tensor& x, Shape shape);
/// (B, C, T, F) -> (B, T, C * F), channel-major within each frame.
Tensor flatten_channels(const Tensor& x);

// ---- layers ---------------------------------------------------------------
/// x (..., in) * weight(out, in)^T + bias(out).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor linear(const Tensor& x, const Tensor& weight);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& offset,
                  double eps = 1e-5);
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);
/// ids (row-major over `batch_shape`) gathered from table (V, D).
Tensor embedding(std::span<const int> ids, const Shape& batch_shape,
                 const Tensor& table);
/// Valid 2-D convolution. input (B, C, H, W), weight (Co, C, Kh, Kw).
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Index stride_h, Index stride_w);
/// Depthwise 1-D convolution over time with symmetric zero padding.
/// x (B, T, C), weight (C, K) with K odd, bias (C).
Tensor depthwise_conv1d(const Tensor& x, const Tensor& weight,
                        const Tensor& bias);
/// Multi-head scaled dot-product attention. q (B, Tq, D), k and v (B, Tk, D).
/// Rows whose mask forbids every key produce zeros.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            Index heads, const AttentionMask* mask = nullptr);

// ---- masks ----------------------------------------------------------------
/// (B, T, 1)-broadcast multiplicative mask: 1 for t < lengths[b], else 0.
Array time_mask(std::span<const int> lengths, Index max_len, Index width);
/// Key padding mask (B, Tq, Tk) from key lengths.
AttentionMask padding_mask(std::span<const int> key_lengths, Index tq, Index tk);
/// Causal mask (B, T, T).
AttentionMask causal_mask(Index batch, Index t);

}  // namespace hydra
