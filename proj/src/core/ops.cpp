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

#include <cmath>
#include <limits>

#include "hydra/core/tensor.hpp"

namespace hydra {

namespace {

using detail::Node;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + to_string(a.shape()) +
                         " and " + to_string(b.shape()) + " differ");
  }
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Array out(a.shape(), a.value().values() + b.value().values());
  return Tensor::from_op(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      Node& in = input(self, i);
      if (in.requires_grad) in.grad_buffer().values() += self.grad.values();
    }
  });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Array out(a.shape(), a.value().values() - b.value().values());
  return Tensor::from_op(std::move(out), {a, b}, [](Node& self) {
    Node& l = input(self, 0);
    Node& r = input(self, 1);
    if (l.requires_grad) l.grad_buffer().values() += self.grad.values();
    if (r.requires_grad) r.grad_buffer().values() -= self.grad.values();
  });
}

Tensor operator*(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Array out(a.shape(),
            a.value().values().cwiseProduct(b.value().values()));
  return Tensor::from_op(std::move(out), {a, b}, [](Node& self) {
    Node& l = input(self, 0);
    Node& r = input(self, 1);
    if (l.requires_grad) {
      l.grad_buffer().values() += self.grad.values().cwiseProduct(r.value.values());
    }
    if (r.requires_grad) {
      r.grad_buffer().values() += self.grad.values().cwiseProduct(l.value.values());
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  Array out(a.shape(), a.value().values() * factor);
  return Tensor::from_op(std::move(out), {a}, [factor](Node& self) {
    input(self, 0).grad_buffer().values() += factor * self.grad.values();
  });
}

Tensor add_constant(const Tensor& a, const Array& c) {
  if (a.shape() != c.shape()) {
    throw DimensionError("add_constant: shape mismatch " + to_string(a.shape()) +
                         " vs " + to_string(c.shape()));
  }
  Array out(a.shape(), a.value().values() + c.values());
  return Tensor::from_op(std::move(out), {a}, [](Node& self) {
    input(self, 0).grad_buffer().values() += self.grad.values();
  });
}

Tensor mul_constant(const Tensor& a, const Array& c) {
  if (a.shape() != c.shape()) {
    throw DimensionError("mul_constant: shape mismatch " + to_string(a.shape()) +
                         " vs " + to_string(c.shape()));
  }
  Array out(a.shape(), a.value().values().cwiseProduct(c.values()));
  return Tensor::from_op(std::move(out), {a}, [c](Node& self) {
    input(self, 0).grad_buffer().values() += self.grad.values().cwiseProduct(c.values());
  });
}

Tensor relu(const Tensor& x) {
  Array out(x.shape(), x.value().values().cwiseMax(0.0));
  return Tensor::from_op(std::move(out), {x}, [](Node& self) {
    Node& in = input(self, 0);
    in.grad_buffer().values().array() +=
        (in.value.values().array() > 0.0).cast<double>() * self.grad.values().array();
  });
}

Tensor silu(const Tensor& x) {
  Eigen::ArrayXd sig = (1.0 + (-x.value().values().array()).exp()).inverse();
  Array out(x.shape(), (x.value().values().array() * sig).matrix());
  return Tensor::from_op(std::move(out), {x}, [sig](Node& self) {
    Node& in = input(self, 0);
    const auto z = in.value.values().array();
    in.grad_buffer().values().array() +=
        self.grad.values().array() * (sig * (1.0 + z * (1.0 - sig)));
  });
}

Tensor glu(const Tensor& x) {
  const Index width = x.value().last();
  if (width % 2 != 0) throw DimensionError("glu: odd last axis");
  const Index half = width / 2;
  const auto in = x.value().rows();
  Shape shape = x.shape();
  shape.back() = half;
  RowMatrix<double> gate =
      (1.0 + (-in.rightCols(half).array()).exp()).inverse().matrix();
  Array out(shape);
  out.rows() = in.leftCols(half).cwiseProduct(gate);
  return Tensor::from_op(std::move(out), {x}, [gate, half](Node& self) {
    Node& src = input(self, 0);
    const auto value = src.value.rows();
    const auto g = self.grad.rows();
    auto dst = src.grad_buffer().rows();
    dst.leftCols(half) += g.cwiseProduct(gate);
    dst.rightCols(half).array() += g.array() * value.leftCols(half).array() *
                                   gate.array() * (1.0 - gate.array());
  });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw UsageError("dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Array mask(x.shape());
  for (Index i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return mul_constant(x, mask);
}

Tensor sum(const Tensor& x) {
  Array out = Array::scalar(x.value().values().sum());
  return Tensor::from_op(std::move(out), {x}, [](Node& self) {
    input(self, 0).grad_buffer().values().array() += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor weighted_sum(const Tensor& x, const Array& weights) {
  if (x.shape() != weights.shape()) {
    throw DimensionError("weighted_sum: shape mismatch " + to_string(x.shape()) +
                         " vs " + to_string(weights.shape()));
  }
  Array out = Array::scalar(x.value().values().dot(weights.values()));
  return Tensor::from_op(std::move(out), {x}, [weights](Node& self) {
    input(self, 0).grad_buffer().values() += self.grad[0] * weights.values();
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape " + to_string(x.shape()) + " to " +
                         to_string(shape));
  }
  Array out = x.value().reshaped(std::move(shape));
  return Tensor::from_op(std::move(out), {x}, [](Node& self) {
    input(self, 0).grad_buffer().values() += self.grad.values();
  });
}

Tensor flatten_channels(const Tensor& x) {
  if (x.value().rank() != 4) {
    throw DimensionError("flatten_channels expects (B, C, T, F), got " +
                         to_string(x.shape()));
  }
  const Index b = x.dim(0), c = x.dim(1), t = x.dim(2), f = x.dim(3);
  Array out({b, t, c * f});
  const Array& in = x.value();
  for (Index ib = 0; ib < b; ++ib)
    for (Index ic = 0; ic < c; ++ic)
      for (Index it = 0; it < t; ++it)
        for (Index jf = 0; jf < f; ++jf)
          out[(ib * t + it) * c * f + ic * f + jf] = in[((ib * c + ic) * t + it) * f + jf];
  return Tensor::from_op(std::move(out), {x}, [b, c, t, f](Node& self) {
    Array& dst = input(self, 0).grad_buffer();
    for (Index ib = 0; ib < b; ++ib)
      for (Index ic = 0; ic < c; ++ic)
        for (Index it = 0; it < t; ++it)
          for (Index jf = 0; jf < f; ++jf)
            dst[((ib * c + ic) * t + it) * f + jf] +=
                self.grad[(ib * t + it) * c * f + ic * f + jf];
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const Index in_dim = weight.dim(1);
  const Index out_dim = weight.dim(0);
  if (x.value().last() != in_dim) {
    throw DimensionError("linear: input " + to_string(x.shape()) +
                         " vs weight " + to_string(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{out_dim}) {
    throw DimensionError("linear: bias shape " + to_string(bias.shape()));
  }
  Shape shape = x.shape();
  shape.back() = out_dim;
  Array out(shape);
  const auto xm = x.value().rows();
  const auto wm = weight.value().rows();
  auto om = out.rows();
  om.noalias() = xm * wm.transpose();
  if (has_bias) om.rowwise() += bias.value().values().transpose();

  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return Tensor::from_op(std::move(out), std::move(inputs), [has_bias](Node& self) {
    Node& xn = input(self, 0);
    Node& wn = input(self, 1);
    const auto g = self.grad.rows();
    if (xn.requires_grad) xn.grad_buffer().rows().noalias() += g * wn.value.rows();
    if (wn.requires_grad) {
      wn.grad_buffer().rows().noalias() += g.transpose() * xn.value.rows();
    }
    if (has_bias && input(self, 2).requires_grad) {
      input(self, 2).grad_buffer().values() += g.colwise().sum().transpose();
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight) {
  return linear(x, weight, Tensor());
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& offset,
                  double eps) {
  const Index width = x.value().last();
  if (gain.shape() != Shape{width} || offset.shape() != Shape{width}) {
    throw DimensionError("layer_norm: parameter width mismatch for " +
                         to_string(x.shape()));
  }
  const auto in = x.value().rows();
  const Index n = in.rows();
  Eigen::VectorXd inv_std(n);
  RowMatrix<double> normed(n, width);
  for (Index r = 0; r < n; ++r) {
    const double mu = in.row(r).mean();
    const auto centered = in.row(r).array() - mu;
    const double var = centered.square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    normed.row(r) = (centered * inv_std[r]).matrix();
  }
  Array out(x.shape());
  auto om = out.rows();
  om = (normed.array().rowwise() * gain.value().values().transpose().array())
           .rowwise() +
       offset.value().values().transpose().array();
  return Tensor::from_op(
      std::move(out), {x, gain, offset}, [normed, inv_std, width](Node& self) {
        Node& xn = input(self, 0);
        Node& gn = input(self, 1);
        Node& on = input(self, 2);
        const auto g = self.grad.rows();
        if (gn.requires_grad) {
          gn.grad_buffer().values() +=
              g.cwiseProduct(normed).colwise().sum().transpose();
        }
        if (on.requires_grad) on.grad_buffer().values() += g.colwise().sum().transpose();
        if (xn.requires_grad) {
          auto dx = xn.grad_buffer().rows();
          const Eigen::RowVectorXd gamma = gn.value.values().transpose();
          for (Index r = 0; r < g.rows(); ++r) {
            const Eigen::RowVectorXd gh = g.row(r).cwiseProduct(gamma);
            const double mean_g = gh.mean();
            const double mean_gx = gh.dot(normed.row(r)) / static_cast<double>(width);
            dx.row(r).array() += inv_std[r] * (gh.array() - mean_g -
                                              normed.row(r).array() * mean_gx);
          }
        }
      });
}

Tensor softmax(const Tensor& x) {
  const auto in = x.value().rows();
  Array out(x.shape());
  auto om = out.rows();
  for (Index r = 0; r < in.rows(); ++r) {
    const double m = in.row(r).maxCoeff();
    om.row(r) = (in.row(r).array() - m).exp().matrix();
    om.row(r) /= om.row(r).sum();
  }
  return Tensor::from_op(std::move(out), {x}, [](Node& self) {
    const auto y = self.value.rows();
    const auto g = self.grad.rows();
    auto dx = input(self, 0).grad_buffer().rows();
    for (Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      dx.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Tensor log_softmax(const Tensor& x) {
  const auto in = x.value().rows();
  Array out(x.shape());
  auto om = out.rows();
  for (Index r = 0; r < in.rows(); ++r) {
    const double m = in.row(r).maxCoeff();
    const double lse = m + std::log((in.row(r).array() - m).exp().sum());
    om.row(r) = (in.row(r).array() - lse).matrix();
  }
  return Tensor::from_op(std::move(out), {x}, [](Node& self) {
    const auto y = self.value.rows();
    const auto g = self.grad.rows();
    auto dx = input(self, 0).grad_buffer().rows();
    for (Index r = 0; r < y.rows(); ++r) {
      const double total = g.row(r).sum();
      dx.row(r).array() += g.row(r).array() - y.row(r).array().exp() * total;
    }
  });
}

Tensor embedding(std::span<const int> ids, const Shape& batch_shape,
                 const Tensor& table) {
  if (static_cast<Index>(ids.size()) != numel(batch_shape)) {
    throw DimensionError("embedding: ids do not fill shape " + to_string(batch_shape));
  }
  const Index vocab = table.dim(0);
  const Index width = table.dim(1);
  Shape shape = batch_shape;
  shape.push_back(width);
  Array out(shape);
  auto om = out.rows();
  const auto tm = table.value().rows();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab) {
      throw VocabError("token id " + std::to_string(ids[i]) +
                       " outside vocabulary of size " + std::to_string(vocab));
    }
    om.row(static_cast<Index>(i)) = tm.row(ids[i]);
  }
  std::vector<int> kept(ids.begin(), ids.end());
  return Tensor::from_op(std::move(out), {table}, [kept](Node& self) {
    auto dt = input(self, 0).grad_buffer().rows();
    const auto g = self.grad.rows();
    for (std::size_t i = 0; i < kept.size(); ++i) dt.row(kept[i]) += g.row(static_cast<Index>(i));
  });
}

Array time_mask(std::span<const int> lengths, Index max_len, Index width) {
  const Index batch = static_cast<Index>(lengths.size());
  Array mask({batch, max_len, width});
  for (Index b = 0; b < batch; ++b) {
    for (Index t = 0; t < std::min<Index>(lengths[b], max_len); ++t) {
      for (Index d = 0; d < width; ++d) mask[(b * max_len + t) * width + d] = 1.0;
    }
  }
  return mask;
}

AttentionMask padding_mask(std::span<const int> key_lengths, Index tq, Index tk) {
  const Index batch = static_cast<Index>(key_lengths.size());
  AttentionMask mask({batch, tq, tk});
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (Index b = 0; b < batch; ++b)
    for (Index i = 0; i < tq; ++i)
      for (Index j = key_lengths[b]; j < tk; ++j) mask[(b * tq + i) * tk + j] = neg_inf;
  return mask;
}

AttentionMask causal_mask(Index batch, Index t) {
  AttentionMask mask({batch, t, t});
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (Index b = 0; b < batch; ++b)
    for (Index i = 0; i < t; ++i)
      for (Index j = i + 1; j < t; ++j) mask[(b * t + i) * t + j] = neg_inf;
  return mask;
}

}  // namespace hydra
