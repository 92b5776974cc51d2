#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "flowgrad/nn/tensor.hpp"

namespace flowgrad::nn {

// Activation layout is [N, C, D, H, W] with W fastest; convolution weights
// are [F, C, 3, 3, 3] and pointwise (1x1x1) weights [F, C]. All ops build
// the output eagerly and record a backward closure on the tape; gradients
// propagate only toward tensors whose requires_grad is set (which ops
// forward from inputs to outputs, so interior nodes inherit it).

namespace detail {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using RowMat =
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

template <typename S>
void require_5d(const TensorPtr<S>& t, const char* op, const char* role) {
  require(t->shape.size() == 5, std::string(op) + ": " + role +
                                    " must be 5-D [N,C,D,H,W], got " +
                                    shape_string(t->shape));
}

inline std::int64_t spatial_of(const std::vector<int>& shape) {
  return static_cast<std::int64_t>(shape[2]) * shape[3] * shape[4];
}

// Grow-only per-thread backing store for the patch matrices, so repeated
// convolutions reuse warm pages instead of faulting fresh ones every call.
// Distinct slots may be live at the same time within one op.
template <typename S, int Slot>
S* patch_scratch(std::int64_t n) {
  thread_local std::vector<S> buf;
  if (static_cast<std::int64_t>(buf.size()) < n)
    buf.resize(static_cast<std::size_t>(n));
  return buf.data();
}

// Patch matrix for a 3x3x3 window with padding 1, stored voxel-major: one
// row per output voxel, K = C*27 columns, zero-filled outside the domain.
// Voxel-major keeps the fill, the adjoint scatter, and all three GEMMs of a
// convolution running along contiguous memory. Rebuilt on demand in the
// backward pass instead of being saved (trades a gather for ~80 MB per
// conv).
template <typename S>
void im2col3(const S* x, int C, int D, int H, int W, S* patch_data) {
  const std::int64_t spatial = static_cast<std::int64_t>(D) * H * W;
  Eigen::Map<Mat<S>> patch(patch_data, spatial,
                           static_cast<std::int64_t>(C) * 27);
  patch.setZero();
  for (int c = 0; c < C; ++c)
    for (int kd = 0; kd < 3; ++kd)
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw) {
          const std::int64_t k = ((c * 3 + kd) * 3 + kh) * 3 + kw;
          const int od0 = std::max(0, 1 - kd), od1 = std::min(D, D + 1 - kd);
          const int oh0 = std::max(0, 1 - kh), oh1 = std::min(H, H + 1 - kh);
          const int ow0 = std::max(0, 1 - kw), ow1 = std::min(W, W + 1 - kw);
          for (int od = od0; od < od1; ++od) {
            const int id = od + kd - 1;
            for (int oh = oh0; oh < oh1; ++oh) {
              const int ih = oh + kh - 1;
              const S* src =
                  x + (static_cast<std::int64_t>(c) * D + id) * H * W +
                  static_cast<std::int64_t>(ih) * W + (kw - 1);
              S* dst = patch_data + spatial * k +
                       (static_cast<std::int64_t>(od) * H + oh) * W;
              for (int ow = ow0; ow < ow1; ++ow) dst[ow] = src[ow];
            }
          }
        }
}

// Adjoint of im2col3: scatter-add patch-matrix cotangents back to the input.
template <typename S>
void col2im3_add(const S* patch_data, int C, int D, int H, int W, S* dx) {
  const std::int64_t spatial = static_cast<std::int64_t>(D) * H * W;
  for (int c = 0; c < C; ++c)
    for (int kd = 0; kd < 3; ++kd)
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw) {
          const std::int64_t k = ((c * 3 + kd) * 3 + kh) * 3 + kw;
          const int od0 = std::max(0, 1 - kd), od1 = std::min(D, D + 1 - kd);
          const int oh0 = std::max(0, 1 - kh), oh1 = std::min(H, H + 1 - kh);
          const int ow0 = std::max(0, 1 - kw), ow1 = std::min(W, W + 1 - kw);
          for (int od = od0; od < od1; ++od) {
            const int id = od + kd - 1;
            for (int oh = oh0; oh < oh1; ++oh) {
              const int ih = oh + kh - 1;
              S* dst = dx + (static_cast<std::int64_t>(c) * D + id) * H * W +
                       static_cast<std::int64_t>(ih) * W + (kw - 1);
              const S* src = patch_data + spatial * k +
                             (static_cast<std::int64_t>(od) * H + oh) * W;
              for (int ow = ow0; ow < ow1; ++ow) dst[ow] += src[ow];
            }
          }
        }
}

template <typename S>
S gauss_cdf(S x) {
  return S(0.5) * (S(1) + std::erf(x * S(0.70710678118654752440)));
}

template <typename S>
S gauss_pdf(S x) {
  return S(0.39894228040143267794) * std::exp(S(-0.5) * x * x);
}

}  // namespace detail

/// 3-D cross-correlation, 3x3x3 kernel, padding 1 (spatial dims preserved).
template <typename S>
TensorPtr<S> conv3d(Tape<S>& tape, const TensorPtr<S>& input,
                    const TensorPtr<S>& weight, const TensorPtr<S>& bias) {
  detail::require_5d(input, "conv3d", "input");
  detail::require_5d(weight, "conv3d", "weight");
  detail::require(weight->dim(2) == 3 && weight->dim(3) == 3 &&
                      weight->dim(4) == 3,
                  "conv3d: kernel must be 3x3x3, got " +
                      shape_string(weight->shape));
  detail::require(weight->dim(1) == input->dim(1),
                  "conv3d: weight channels " + shape_string(weight->shape) +
                      " do not match input " + shape_string(input->shape));
  const int N = input->dim(0), C = input->dim(1);
  const int D = input->dim(2), H = input->dim(3), W = input->dim(4);
  const int F = weight->dim(0);
  detail::require(bias->shape == std::vector<int>{F},
                  "conv3d: bias must be [" + std::to_string(F) + "], got " +
                      shape_string(bias->shape));
  const std::int64_t spatial = detail::spatial_of(input->shape);
  const std::int64_t K = static_cast<std::int64_t>(C) * 27;

  auto out = zeros<S>({N, F, D, H, W});
  out->requires_grad =
      input->requires_grad || weight->requires_grad || bias->requires_grad;

  Eigen::Map<const detail::RowMat<S>> wmat(weight->values.data(), F, K);
  Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> bvec(
      bias->values.data(), F);
  // The (F, spatial) row-major output block doubles as a (spatial, F)
  // column-major matrix, which is the fast tall-and-skinny GEMM shape.
  const detail::Mat<S> wT = wmat.transpose();
  for (int n = 0; n < N; ++n) {
    S* pbuf = detail::patch_scratch<S, 0>(K * spatial);
    detail::im2col3(input->values.data() + n * C * spatial, C, D, H, W, pbuf);
    Eigen::Map<const detail::Mat<S>> patch(pbuf, spatial, K);
    Eigen::Map<detail::Mat<S>> o_t(out->values.data() + n * F * spatial,
                                   spatial, F);
    o_t.noalias() = patch * wT;
    o_t.rowwise() += bvec.transpose();
  }

  if (out->requires_grad)
    tape.record([input, weight, bias, out, N, C, D, H, W, F, spatial, K]() {
      if (out->grad.size() == 0) return;
      Eigen::Map<const detail::RowMat<S>> w(weight->values.data(), F, K);
      for (int n = 0; n < N; ++n) {
        Eigen::Map<const detail::RowMat<S>> g(out->grad.data() + n * F * spatial,
                                              F, spatial);
        if (weight->requires_grad || bias->requires_grad) {
          S* pbuf = detail::patch_scratch<S, 0>(K * spatial);
          detail::im2col3(input->values.data() + n * C * spatial, C, D, H, W,
                          pbuf);
          Eigen::Map<const detail::Mat<S>> patch(pbuf, spatial, K);
          if (weight->requires_grad) {
            weight->ensure_grad();
            Eigen::Map<detail::RowMat<S>> dw(weight->grad.data(), F, K);
            dw.noalias() += g * patch;
          }
          if (bias->requires_grad) {
            bias->ensure_grad();
            Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> db(
                bias->grad.data(), F);
            db.noalias() += g.rowwise().sum();
          }
        }
        if (input->requires_grad) {
          input->ensure_grad();
          S* dbuf = detail::patch_scratch<S, 1>(K * spatial);
          Eigen::Map<detail::Mat<S>> dpatch(dbuf, spatial, K);
          dpatch.noalias() = g.transpose() * w;
          detail::col2im3_add(dbuf, C, D, H, W,
                              input->grad.data() + n * C * spatial);
        }
      }
    });
  return out;
}

/// 1x1x1 convolution: a per-voxel linear map over channels. `bias` may be
/// null for the bias-free branches of the attention gate.
template <typename S>
TensorPtr<S> pointwise_conv(Tape<S>& tape, const TensorPtr<S>& input,
                            const TensorPtr<S>& weight,
                            const TensorPtr<S>& bias) {
  detail::require_5d(input, "pointwise_conv", "input");
  detail::require(weight->shape.size() == 2 &&
                      weight->dim(1) == input->dim(1),
                  "pointwise_conv: weight " + shape_string(weight->shape) +
                      " does not match input channels " +
                      shape_string(input->shape));
  const int N = input->dim(0), C = input->dim(1);
  const int F = weight->dim(0);
  if (bias)
    detail::require(bias->shape == std::vector<int>{F},
                    "pointwise_conv: bias must be [" + std::to_string(F) +
                        "], got " + shape_string(bias->shape));
  const std::int64_t spatial = detail::spatial_of(input->shape);

  auto out = zeros<S>({N, F, input->dim(2), input->dim(3), input->dim(4)});
  out->requires_grad = input->requires_grad || weight->requires_grad ||
                       (bias && bias->requires_grad);

  Eigen::Map<const detail::RowMat<S>> wmat(weight->values.data(), F, C);
  for (int n = 0; n < N; ++n) {
    Eigen::Map<const detail::RowMat<S>> x(
        input->values.data() + n * C * spatial, C, spatial);
    Eigen::Map<detail::RowMat<S>> o(out->values.data() + n * F * spatial, F,
                                    spatial);
    o.noalias() = wmat * x;
    if (bias)
      o.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(
          bias->values.data(), F);
  }

  if (out->requires_grad)
    tape.record([input, weight, bias, out, N, C, F, spatial]() {
      if (out->grad.size() == 0) return;
      Eigen::Map<const detail::RowMat<S>> w(weight->values.data(), F, C);
      for (int n = 0; n < N; ++n) {
        Eigen::Map<const detail::RowMat<S>> g(out->grad.data() + n * F * spatial,
                                              F, spatial);
        Eigen::Map<const detail::RowMat<S>> x(
            input->values.data() + n * C * spatial, C, spatial);
        if (weight->requires_grad) {
          weight->ensure_grad();
          Eigen::Map<detail::RowMat<S>> dw(weight->grad.data(), F, C);
          dw.noalias() += g * x.transpose();
        }
        if (bias && bias->requires_grad) {
          bias->ensure_grad();
          Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> db(bias->grad.data(),
                                                             F);
          db.noalias() += g.rowwise().sum();
        }
        if (input->requires_grad) {
          input->ensure_grad();
          Eigen::Map<detail::RowMat<S>> dx(input->grad.data() + n * C * spatial,
                                           C, spatial);
          dx.noalias() += w.transpose() * g;
        }
      }
    });
  return out;
}

/// 2x2x2 max pooling with stride 2; gradient routes to the window argmax,
/// first element in layout order on ties.
template <typename S>
TensorPtr<S> maxpool3d(Tape<S>& tape, const TensorPtr<S>& input) {
  detail::require_5d(input, "maxpool3d", "input");
  const int N = input->dim(0), C = input->dim(1);
  const int D = input->dim(2), H = input->dim(3), W = input->dim(4);
  detail::require(D % 2 == 0 && H % 2 == 0 && W % 2 == 0,
                  "maxpool3d: spatial dims must be even, got " +
                      shape_string(input->shape));
  const int Do = D / 2, Ho = H / 2, Wo = W / 2;
  auto out = zeros<S>({N, C, Do, Ho, Wo});
  out->requires_grad = input->requires_grad;

  auto argmax = std::make_shared<std::vector<std::int64_t>>(out->numel());
  const S* x = input->values.data();
  std::int64_t oidx = 0;
  for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(N) * C; ++nc) {
    const std::int64_t base = nc * D * H * W;
    for (int od = 0; od < Do; ++od)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow, ++oidx) {
          S best{};
          std::int64_t best_at = -1;
          for (int kd = 0; kd < 2; ++kd)
            for (int kh = 0; kh < 2; ++kh)
              for (int kw = 0; kw < 2; ++kw) {
                const std::int64_t at =
                    base +
                    (static_cast<std::int64_t>(2 * od + kd) * H +
                     (2 * oh + kh)) *
                        W +
                    (2 * ow + kw);
                if (best_at < 0 || x[at] > best) {
                  best = x[at];
                  best_at = at;
                }
              }
          out->values[oidx] = best;
          (*argmax)[oidx] = best_at;
        }
  }

  if (out->requires_grad)
    tape.record([input, out, argmax]() {
      if (out->grad.size() == 0) return;
      input->ensure_grad();
      for (std::int64_t i = 0; i < out->numel(); ++i)
        input->grad[(*argmax)[i]] += out->grad[i];
    });
  return out;
}

/// Exact Gaussian-CDF GELU: x * Phi(x).
template <typename S>
TensorPtr<S> gelu(Tape<S>& tape, const TensorPtr<S>& input) {
  auto out = make_tensor<S>(
      input->shape, input->values.unaryExpr([](S x) {
        return x * detail::gauss_cdf(x);
      }));
  out->requires_grad = input->requires_grad;
  if (out->requires_grad)
    tape.record([input, out]() {
      if (out->grad.size() == 0) return;
      input->ensure_grad();
      input->grad += out->grad * input->values.unaryExpr([](S x) {
        return detail::gauss_cdf(x) + x * detail::gauss_pdf(x);
      });
    });
  return out;
}

template <typename S>
TensorPtr<S> sigmoid(Tape<S>& tape, const TensorPtr<S>& input) {
  auto out = make_tensor<S>(input->shape, input->values.unaryExpr([](S x) {
    return S(1) / (S(1) + std::exp(-x));
  }));
  out->requires_grad = input->requires_grad;
  if (out->requires_grad)
    tape.record([input, out]() {
      if (out->grad.size() == 0) return;
      input->ensure_grad();
      input->grad += out->grad * out->values * (S(1) - out->values);
    });
  return out;
}

template <typename S>
TensorPtr<S> add(Tape<S>& tape, const TensorPtr<S>& a, const TensorPtr<S>& b) {
  detail::require(a->shape == b->shape,
                  "add: shape mismatch " + shape_string(a->shape) + " vs " +
                      shape_string(b->shape));
  auto out = make_tensor<S>(a->shape, a->values + b->values);
  out->requires_grad = a->requires_grad || b->requires_grad;
  if (out->requires_grad)
    tape.record([a, b, out]() {
      if (out->grad.size() == 0) return;
      if (a->requires_grad) {
        a->ensure_grad();
        a->grad += out->grad;
      }
      if (b->requires_grad) {
        b->ensure_grad();
        b->grad += out->grad;
      }
    });
  return out;
}

/// Normalizes over the channel axis at every (sample, voxel) position, then
/// applies the per-channel learnable scale and shift.
template <typename S>
TensorPtr<S> layer_norm(Tape<S>& tape, const TensorPtr<S>& input,
                        const TensorPtr<S>& gamma, const TensorPtr<S>& beta) {
  detail::require_5d(input, "layer_norm", "input");
  const int N = input->dim(0), C = input->dim(1);
  detail::require(gamma->shape == std::vector<int>{C} &&
                      beta->shape == std::vector<int>{C},
                  "layer_norm: scale/shift must be [" + std::to_string(C) +
                      "], got " + shape_string(gamma->shape) + " and " +
                      shape_string(beta->shape));
  const std::int64_t spatial = detail::spatial_of(input->shape);
  constexpr S kEps = S(1e-5);

  auto out = zeros<S>(input->shape);
  out->requires_grad =
      input->requires_grad || gamma->requires_grad || beta->requires_grad;
  const S* x = input->values.data();
  S* y = out->values.data();
  for (int n = 0; n < N; ++n)
    for (std::int64_t s = 0; s < spatial; ++s) {
      const std::int64_t at0 = static_cast<std::int64_t>(n) * C * spatial + s;
      S mean = 0;
      for (int c = 0; c < C; ++c) mean += x[at0 + c * spatial];
      mean /= S(C);
      S var = 0;
      for (int c = 0; c < C; ++c) {
        const S d = x[at0 + c * spatial] - mean;
        var += d * d;
      }
      const S inv = S(1) / std::sqrt(var / S(C) + kEps);
      for (int c = 0; c < C; ++c)
        y[at0 + c * spatial] =
            (x[at0 + c * spatial] - mean) * inv * gamma->values[c] +
            beta->values[c];
    }

  if (out->requires_grad)
    tape.record([input, gamma, beta, out, N, C, spatial]() {
      if (out->grad.size() == 0) return;
      constexpr S eps = S(1e-5);
      if (input->requires_grad) input->ensure_grad();
      if (gamma->requires_grad) gamma->ensure_grad();
      if (beta->requires_grad) beta->ensure_grad();
      const S* x = input->values.data();
      const S* g = out->grad.data();
      std::vector<S> xh(C), gg(C);
      for (int n = 0; n < N; ++n)
        for (std::int64_t s = 0; s < spatial; ++s) {
          const std::int64_t at0 =
              static_cast<std::int64_t>(n) * C * spatial + s;
          S mean = 0;
          for (int c = 0; c < C; ++c) mean += x[at0 + c * spatial];
          mean /= S(C);
          S var = 0;
          for (int c = 0; c < C; ++c) {
            const S d = x[at0 + c * spatial] - mean;
            var += d * d;
          }
          const S inv = S(1) / std::sqrt(var / S(C) + eps);
          S gg_mean = 0, ggxh_mean = 0;
          for (int c = 0; c < C; ++c) {
            xh[c] = (x[at0 + c * spatial] - mean) * inv;
            gg[c] = gamma->values[c] * g[at0 + c * spatial];
            gg_mean += gg[c];
            ggxh_mean += gg[c] * xh[c];
          }
          gg_mean /= S(C);
          ggxh_mean /= S(C);
          for (int c = 0; c < C; ++c) {
            if (input->requires_grad)
              input->grad[at0 + c * spatial] +=
                  inv * (gg[c] - gg_mean - xh[c] * ggxh_mean);
            if (gamma->requires_grad)
              gamma->grad[c] += g[at0 + c * spatial] * xh[c];
            if (beta->requires_grad) beta->grad[c] += g[at0 + c * spatial];
          }
        }
    });
  return out;
}

/// Stacks two activations along the channel axis.
template <typename S>
TensorPtr<S> concat_channels(Tape<S>& tape, const TensorPtr<S>& a,
                             const TensorPtr<S>& b) {
  detail::require_5d(a, "concat_channels", "first input");
  detail::require_5d(b, "concat_channels", "second input");
  detail::require(a->dim(0) == b->dim(0) && a->dim(2) == b->dim(2) &&
                      a->dim(3) == b->dim(3) && a->dim(4) == b->dim(4),
                  "concat_channels: non-channel dims differ, " +
                      shape_string(a->shape) + " vs " + shape_string(b->shape));
  const int N = a->dim(0), Ca = a->dim(1), Cb = b->dim(1);
  const std::int64_t spatial = detail::spatial_of(a->shape);
  auto out = zeros<S>({N, Ca + Cb, a->dim(2), a->dim(3), a->dim(4)});
  out->requires_grad = a->requires_grad || b->requires_grad;
  for (int n = 0; n < N; ++n) {
    out->values.segment(static_cast<std::int64_t>(n) * (Ca + Cb) * spatial,
                        Ca * spatial) =
        a->values.segment(static_cast<std::int64_t>(n) * Ca * spatial,
                          Ca * spatial);
    out->values.segment(
        static_cast<std::int64_t>(n) * (Ca + Cb) * spatial + Ca * spatial,
        Cb * spatial) =
        b->values.segment(static_cast<std::int64_t>(n) * Cb * spatial,
                          Cb * spatial);
  }
  if (out->requires_grad)
    tape.record([a, b, out, N, Ca, Cb, spatial]() {
      if (out->grad.size() == 0) return;
      for (int n = 0; n < N; ++n) {
        if (a->requires_grad) {
          a->ensure_grad();
          a->grad.segment(static_cast<std::int64_t>(n) * Ca * spatial,
                          Ca * spatial) +=
              out->grad.segment(
                  static_cast<std::int64_t>(n) * (Ca + Cb) * spatial,
                  Ca * spatial);
        }
        if (b->requires_grad) {
          b->ensure_grad();
          b->grad.segment(static_cast<std::int64_t>(n) * Cb * spatial,
                          Cb * spatial) +=
              out->grad.segment(
                  static_cast<std::int64_t>(n) * (Ca + Cb) * spatial +
                      Ca * spatial,
                  Cb * spatial);
        }
      }
    });
  return out;
}

/// Nearest-neighbor upsampling by 2 along every spatial axis.
template <typename S>
TensorPtr<S> nearest_upsample2(Tape<S>& tape, const TensorPtr<S>& input) {
  detail::require_5d(input, "nearest_upsample2", "input");
  const int N = input->dim(0), C = input->dim(1);
  const int D = input->dim(2), H = input->dim(3), W = input->dim(4);
  auto out = zeros<S>({N, C, 2 * D, 2 * H, 2 * W});
  out->requires_grad = input->requires_grad;
  const S* x = input->values.data();
  S* y = out->values.data();
  for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(N) * C; ++nc) {
    const S* xi = x + nc * D * H * W;
    S* yo = y + nc * 8 * D * H * W;
    for (int d = 0; d < 2 * D; ++d)
      for (int h = 0; h < 2 * H; ++h) {
        const S* row = xi + (static_cast<std::int64_t>(d / 2) * H + h / 2) * W;
        S* orow = yo + (static_cast<std::int64_t>(d) * 2 * H + h) * 2 * W;
        for (int w = 0; w < 2 * W; ++w) orow[w] = row[w / 2];
      }
  }
  if (out->requires_grad)
    tape.record([input, out, N, C, D, H, W]() {
      if (out->grad.size() == 0) return;
      input->ensure_grad();
      const S* g = out->grad.data();
      S* dx = input->grad.data();
      for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(N) * C; ++nc) {
        const S* gi = g + nc * 8 * D * H * W;
        S* di = dx + nc * D * H * W;
        for (int d = 0; d < 2 * D; ++d)
          for (int h = 0; h < 2 * H; ++h) {
            const S* grow = gi + (static_cast<std::int64_t>(d) * 2 * H + h) *
                                     2 * W;
            S* drow = di + (static_cast<std::int64_t>(d / 2) * H + h / 2) * W;
            for (int w = 0; w < 2 * W; ++w) drow[w / 2] += grow[w];
          }
      }
    });
  return out;
}

/// Multiplies every channel of `input` by a one-channel attention map.
template <typename S>
TensorPtr<S> scale_channels(Tape<S>& tape, const TensorPtr<S>& input,
                            const TensorPtr<S>& alpha) {
  detail::require_5d(input, "scale_channels", "input");
  detail::require(alpha->shape.size() == 5 && alpha->dim(1) == 1 &&
                      alpha->dim(0) == input->dim(0) &&
                      alpha->dim(2) == input->dim(2) &&
                      alpha->dim(3) == input->dim(3) &&
                      alpha->dim(4) == input->dim(4),
                  "scale_channels: map must be [N,1,D,H,W] matching input, "
                  "got " +
                      shape_string(alpha->shape) + " for " +
                      shape_string(input->shape));
  const int N = input->dim(0), C = input->dim(1);
  const std::int64_t spatial = detail::spatial_of(input->shape);
  auto out = zeros<S>(input->shape);
  out->requires_grad = input->requires_grad || alpha->requires_grad;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      out->values.segment((static_cast<std::int64_t>(n) * C + c) * spatial,
                          spatial) =
          input->values.segment(
              (static_cast<std::int64_t>(n) * C + c) * spatial, spatial) *
          alpha->values.segment(static_cast<std::int64_t>(n) * spatial,
                                spatial);
  if (out->requires_grad)
    tape.record([input, alpha, out, N, C, spatial]() {
      if (out->grad.size() == 0) return;
      if (input->requires_grad) input->ensure_grad();
      if (alpha->requires_grad) alpha->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
          const auto at = (static_cast<std::int64_t>(n) * C + c) * spatial;
          const auto a_at = static_cast<std::int64_t>(n) * spatial;
          if (input->requires_grad)
            input->grad.segment(at, spatial) +=
                out->grad.segment(at, spatial) *
                alpha->values.segment(a_at, spatial);
          if (alpha->requires_grad)
            alpha->grad.segment(a_at, spatial) +=
                out->grad.segment(at, spatial) *
                input->values.segment(at, spatial);
        }
    });
  return out;
}

/// Mean squared error over all elements; the scalar anchor of every backward
/// pass during training.
template <typename S>
TensorPtr<S> mse(Tape<S>& tape, const TensorPtr<S>& pred,
                 const TensorPtr<S>& target) {
  detail::require(pred->shape == target->shape,
                  "mse: shape mismatch " + shape_string(pred->shape) + " vs " +
                      shape_string(target->shape));
  const S n = static_cast<S>(pred->numel());
  auto out = make_tensor<S>(
      {1}, Tensor<S>::Array::Constant(
               1, (pred->values - target->values).square().sum() / n));
  out->requires_grad = pred->requires_grad || target->requires_grad;
  if (out->requires_grad)
    tape.record([pred, target, out, n]() {
      if (out->grad.size() == 0) return;
      const S g = out->grad[0];
      if (pred->requires_grad) {
        pred->ensure_grad();
        pred->grad += g * S(2) / n * (pred->values - target->values);
      }
      if (target->requires_grad) {
        target->ensure_grad();
        target->grad -= g * S(2) / n * (pred->values - target->values);
      }
    });
  return out;
}

/// Parameters of one additive attention gate: 1x1x1 maps of the gating and
/// skip signals into `inter` channels, a shared bias, and the one-channel
/// scoring map psi.
template <typename S>
struct AttentionGate {
  TensorPtr<S> w_gate;  // [inter, C_gate]
  TensorPtr<S> w_skip;  // [inter, C_skip]
  TensorPtr<S> bias;    // [inter]
  TensorPtr<S> psi_w;   // [1, inter]
  TensorPtr<S> psi_b;   // [1]
};

/// alpha = sigma(psi(GELU(Wg.g + Wx.x + b))); output = alpha (.) skip. The
/// gating signal is repeatedly upsampled until it matches the skip's spatial
/// dims (it arrives one pooling level coarser in the U-Net decoder).
template <typename S>
TensorPtr<S> attention_gate(Tape<S>& tape, const AttentionGate<S>& gate,
                            TensorPtr<S> gating, const TensorPtr<S>& skip) {
  detail::require_5d(gating, "attention_gate", "gating");
  detail::require_5d(skip, "attention_gate", "skip");
  while (gating->dim(2) < skip->dim(2) || gating->dim(3) < skip->dim(3) ||
         gating->dim(4) < skip->dim(4))
    gating = nearest_upsample2(tape, gating);
  detail::require(gating->dim(2) == skip->dim(2) &&
                      gating->dim(3) == skip->dim(3) &&
                      gating->dim(4) == skip->dim(4),
                  "attention_gate: gating " + shape_string(gating->shape) +
                      " cannot be aligned with skip " +
                      shape_string(skip->shape));
  auto mixed =
      add(tape, pointwise_conv(tape, gating, gate.w_gate, TensorPtr<S>()),
          pointwise_conv(tape, skip, gate.w_skip, gate.bias));
  auto alpha =
      sigmoid(tape, pointwise_conv(tape, gelu(tape, mixed), gate.psi_w,
                                   gate.psi_b));
  return scale_channels(tape, skip, alpha);
}

}  // namespace flowgrad::nn
