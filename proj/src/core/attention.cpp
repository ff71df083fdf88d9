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
Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }
}  // namespace

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            Index heads, const AttentionMask* mask) {
  if (q.value().rank() != 3 || k.value().rank() != 3 || v.shape() != k.shape()) {
    throw DimensionError("attention: q " + to_string(q.shape()) + ", k " +
                         to_string(k.shape()) + ", v " + to_string(v.shape()));
  }
  const Index batch = q.dim(0), tq = q.dim(1), width = q.dim(2), tk = k.dim(1);
  if (k.dim(0) != batch || k.dim(2) != width) {
    throw DimensionError("attention: q " + to_string(q.shape()) + " vs k " +
                         to_string(k.shape()));
  }
  if (heads < 1 || width % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(width) +
                         " not divisible by " + std::to_string(heads) + " heads");
  }
  if (mask && mask->shape() != Shape{batch, tq, tk}) {
    throw DimensionError("attention: mask shape " + to_string(mask->shape()));
  }
  const Index dk = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  const auto qm = q.value().matrix(batch * tq, width);
  const auto km = k.value().matrix(batch * tk, width);
  const auto vm = v.value().matrix(batch * tk, width);
  Array out({batch, tq, width});
  auto om = out.matrix(batch * tq, width);
  auto probs = std::make_shared<std::vector<RowMatrix<double>>>(batch * heads);

  for (Index b = 0; b < batch; ++b) {
    for (Index h = 0; h < heads; ++h) {
      RowMatrix<double>& p = (*probs)[b * heads + h];
      p.noalias() = qm.block(b * tq, h * dk, tq, dk) *
                    km.block(b * tk, h * dk, tk, dk).transpose();
      p *= scale;
      if (mask) p += mask->matrix(batch * tq, tk).middleRows(b * tq, tq);
      for (Index r = 0; r < tq; ++r) {
        const double m = p.row(r).maxCoeff();
        if (m == -std::numeric_limits<double>::infinity()) {
          p.row(r).setZero();
          continue;
        }
        p.row(r) = (p.row(r).array() - m).exp().matrix();
        p.row(r) /= p.row(r).sum();
      }
      om.block(b * tq, h * dk, tq, dk).noalias() = p * vm.block(b * tk, h * dk, tk, dk);
    }
  }

  return Tensor::from_op(
      std::move(out), {q, k, v},
      [probs, batch, heads, tq, tk, width, dk, scale](Node& self) {
        Node& qn = input(self, 0);
        Node& kn = input(self, 1);
        Node& vn = input(self, 2);
        const auto g = self.grad.matrix(batch * tq, width);
        const auto qv = qn.value.matrix(batch * tq, width);
        const auto kv = kn.value.matrix(batch * tk, width);
        const auto vv = vn.value.matrix(batch * tk, width);
        RowMatrix<double> dp, ds;
        for (Index b = 0; b < batch; ++b) {
          for (Index h = 0; h < heads; ++h) {
            const RowMatrix<double>& p = (*probs)[b * heads + h];
            const auto gh = g.block(b * tq, h * dk, tq, dk);
            if (vn.requires_grad) {
              vn.grad_buffer().matrix(batch * tk, width).block(b * tk, h * dk, tk, dk).noalias() +=
                  p.transpose() * gh;
            }
            if (!qn.requires_grad && !kn.requires_grad) continue;
            dp.noalias() = gh * vv.block(b * tk, h * dk, tk, dk).transpose();
            ds = p.cwiseProduct(dp);
            const Eigen::VectorXd row_dot = ds.rowwise().sum();
            ds.noalias() -= p.cwiseProduct(row_dot.replicate(1, tk));
            ds *= scale;
            if (qn.requires_grad) {
              qn.grad_buffer().matrix(batch * tq, width).block(b * tq, h * dk, tq, dk).noalias() +=
                  ds * kv.block(b * tk, h * dk, tk, dk);
            }
            if (kn.requires_grad) {
              kn.grad_buffer().matrix(batch * tk, width).block(b * tk, h * dk, tk, dk).noalias() +=
                  ds.transpose() * qv.block(b * tq, h * dk, tq, dk);
            }
          }
        }
      });
}

}  // namespace hydra
