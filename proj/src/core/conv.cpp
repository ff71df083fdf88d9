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

#include "hydra/core/tensor.hpp"

namespace hydra {

namespace {

using detail::Node;

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

struct ConvGeometry {
  Index channels, height, width, kh, kw, sh, sw, out_h, out_w;
  Index patch() const { return channels * kh * kw; }
  Index positions() const { return out_h * out_w; }
};

void im2col(const double* image, const ConvGeometry& g, RowMatrix<double>& cols) {
  cols.resize(g.patch(), g.positions());
  for (Index c = 0; c < g.channels; ++c) {
    const double* plane = image + c * g.height * g.width;
    for (Index i = 0; i < g.kh; ++i) {
      for (Index j = 0; j < g.kw; ++j) {
        double* row = cols.row((c * g.kh + i) * g.kw + j).data();
        for (Index oh = 0; oh < g.out_h; ++oh) {
          const double* src = plane + (oh * g.sh + i) * g.width + j;
          for (Index ow = 0; ow < g.out_w; ++ow) row[oh * g.out_w + ow] = src[ow * g.sw];
        }
      }
    }
  }
}

void col2im_add(const RowMatrix<double>& cols, const ConvGeometry& g, double* image) {
  for (Index c = 0; c < g.channels; ++c) {
    double* plane = image + c * g.height * g.width;
    for (Index i = 0; i < g.kh; ++i) {
      for (Index j = 0; j < g.kw; ++j) {
        const double* row = cols.row((c * g.kh + i) * g.kw + j).data();
        for (Index oh = 0; oh < g.out_h; ++oh) {
          double* dst = plane + (oh * g.sh + i) * g.width + j;
          for (Index ow = 0; ow < g.out_w; ++ow) dst[ow * g.sw] += row[oh * g.out_w + ow];
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& image, const Tensor& weight, const Tensor& bias,
              Index stride_h, Index stride_w) {
  if (image.value().rank() != 4 || weight.value().rank() != 4) {
    throw DimensionError("conv2d expects rank-4 input and weight, got " +
                         to_string(image.shape()) + " and " + to_string(weight.shape()));
  }
  if (stride_h < 1 || stride_w < 1) throw UsageError("conv2d: strides must be >= 1");
  const Index batch = image.dim(0);
  const Index out_channels = weight.dim(0);
  ConvGeometry g{image.dim(1), image.dim(2), image.dim(3), weight.dim(2), weight.dim(3),
                 stride_h, stride_w, 0, 0};
  if (weight.dim(1) != g.channels) {
    throw DimensionError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                         " input channels, input has " + std::to_string(g.channels));
  }
  if (g.height < g.kh || g.width < g.kw) {
    throw DimensionError("conv2d: spatial extent " + to_string(image.shape()) +
                         " smaller than kernel " + to_string(weight.shape()));
  }
  if (bias.shape() != Shape{out_channels}) {
    throw DimensionError("conv2d: bias shape " + to_string(bias.shape()));
  }
  g.out_h = (g.height - g.kh) / g.sh + 1;
  g.out_w = (g.width - g.kw) / g.sw + 1;

  Array out({batch, out_channels, g.out_h, g.out_w});
  const auto w = weight.value().matrix(out_channels, g.patch());
  const auto b = bias.value().values();
  auto cols = std::make_shared<std::vector<RowMatrix<double>>>(batch);
  const Index image_size = g.channels * g.height * g.width;
  for (Index n = 0; n < batch; ++n) {
    RowMatrix<double>& c = (*cols)[n];
    im2col(image.value().data() + n * image_size, g, c);
    Eigen::Map<RowMatrix<double>> o(out.data() + n * out_channels * g.positions(),
                                    out_channels, g.positions());
    o.noalias() = w * c;
    o.colwise() += b;
  }

  return Tensor::from_op(
      std::move(out), {image, weight, bias},
      [g, cols, batch, out_channels, image_size](Node& self) {
        Node& xn = input(self, 0);
        Node& wn = input(self, 1);
        Node& bn = input(self, 2);
        const auto wm = wn.value.matrix(out_channels, g.patch());
        RowMatrix<double> dcols;
        for (Index n = 0; n < batch; ++n) {
          Eigen::Map<const RowMatrix<double>> go(
              self.grad.data() + n * out_channels * g.positions(), out_channels,
              g.positions());
          if (wn.requires_grad) {
            wn.grad_buffer().matrix(out_channels, g.patch()).noalias() +=
                go * (*cols)[n].transpose();
          }
          if (bn.requires_grad) bn.grad_buffer().values() += go.rowwise().sum();
          if (xn.requires_grad) {
            dcols.noalias() = wm.transpose() * go;
            col2im_add(dcols, g, xn.grad_buffer().data() + n * image_size);
          }
        }
      });
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.value().rank() != 3) {
    throw DimensionError("depthwise_conv1d expects (B, T, C), got " + to_string(x.shape()));
  }
  const Index batch = x.dim(0), steps = x.dim(1), channels = x.dim(2);
  if (weight.value().rank() != 2 || weight.dim(0) != channels) {
    throw DimensionError("depthwise_conv1d: weight " + to_string(weight.shape()));
  }
  const Index kernel = weight.dim(1);
  if (kernel % 2 == 0) throw DimensionError("depthwise_conv1d: kernel must be odd");
  if (bias.shape() != Shape{channels}) {
    throw DimensionError("depthwise_conv1d: bias shape " + to_string(bias.shape()));
  }
  const Index pad = kernel / 2;
  const auto wm = weight.value().rows();  // (C, K)
  Array out(x.shape());
  for (Index b = 0; b < batch; ++b) {
    const auto in = x.value().matrix(batch * steps, channels).middleRows(b * steps, steps);
    auto o = out.matrix(batch * steps, channels).middleRows(b * steps, steps);
    o.rowwise() = bias.value().values().transpose();
    for (Index k = 0; k < kernel; ++k) {
      const Index shift = k - pad;
      const Index lo = std::max<Index>(0, -shift);
      const Index hi = std::min<Index>(steps, steps - shift);
      if (hi <= lo) continue;
      o.middleRows(lo, hi - lo).array() +=
          in.middleRows(lo + shift, hi - lo).array().rowwise() *
          wm.col(k).transpose().array();
    }
  }
  return Tensor::from_op(
      std::move(out), {x, weight, bias},
      [batch, steps, channels, kernel, pad](Node& self) {
        Node& xn = input(self, 0);
        Node& wn = input(self, 1);
        Node& bn = input(self, 2);
        const auto wv = wn.value.rows();
        for (Index b = 0; b < batch; ++b) {
          const auto g = self.grad.matrix(batch * steps, channels).middleRows(b * steps, steps);
          const auto in = xn.value.matrix(batch * steps, channels).middleRows(b * steps, steps);
          if (bn.requires_grad) bn.grad_buffer().values() += g.colwise().sum().transpose();
          for (Index k = 0; k < kernel; ++k) {
            const Index shift = k - pad;
            const Index lo = std::max<Index>(0, -shift);
            const Index hi = std::min<Index>(steps, steps - shift);
            if (hi <= lo) continue;
            if (wn.requires_grad) {
              wn.grad_buffer().rows().col(k) +=
                  (g.middleRows(lo, hi - lo).array() *
                   in.middleRows(lo + shift, hi - lo).array())
                      .colwise()
                      .sum()
                      .transpose()
                      .matrix();
            }
            if (xn.requires_grad) {
              auto dx = xn.grad_buffer()
                            .matrix(batch * steps, channels)
                            .middleRows(b * steps, steps);
              dx.middleRows(lo + shift, hi - lo).array() +=
                  g.middleRows(lo, hi - lo).array().rowwise() *
                  wv.col(k).transpose().array();
            }
          }
        }
      });
}

}  // namespace hydra
