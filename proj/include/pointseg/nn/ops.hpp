#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pointseg/errors.hpp"
#include "pointseg/nn/tensor.hpp"

// Differentiable ops on CHW tensors. Every op is a forward function plus
// a backward that accumulates (+=) into the input's gradient array, so a
// node feeding several consumers collects all its contributions.

namespace pointseg::nn {

enum class Pad { same, valid };

inline int pad_amount(Pad pad, int kernel) {
  return pad == Pad::same ? kernel / 2 : 0;
}

inline void check(bool cond, const std::string& what) {
  if (!cond) throw ContractError(what);
}

// Output rows [lo, hi) whose sampled input row o*stride - p + k stays
// inside [0, extent).
inline void conv_span(int extent, int count, int stride, int p, int k,
                      int& lo, int& hi) {
  const int shift = p - k;
  lo = shift > 0 ? (shift + stride - 1) / stride : 0;
  const int top = extent - 1 + shift;
  hi = top < 0 ? 0 : std::min(count, top / stride + 1);
}

// x: {IC, H, W}, w: {OC, IC, K, K}, b: {OC} -> out: {OC, OH, OW} with
// cross-correlation semantics.
template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w,
                    const Tensor<T>& b, int stride, Pad pad, Tensor<T>& out) {
  check(x.shape.size() == 3 && w.shape.size() == 4 && b.shape.size() == 1,
        "conv2d: tensor ranks must be x:3 w:4 b:1");
  const int ic = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int oc = w.shape[0], k = w.shape[2];
  check(w.shape[1] == ic, "conv2d: weight in-channels " +
                              std::to_string(w.shape[1]) +
                              " != input channels " + std::to_string(ic));
  check(w.shape[3] == k, "conv2d: kernel must be square");
  check(b.shape[0] == oc, "conv2d: bias length != out channels");
  check(stride >= 1, "conv2d: stride must be >= 1");

  const int p = pad_amount(pad, k);
  const int oh = (h + 2 * p - k) / stride + 1;
  const int ow = (wd + 2 * p - k) / stride + 1;
  check(oh >= 1 && ow >= 1, "conv2d: kernel larger than padded input");
  out.ensure({oc, oh, ow});

  for (int o = 0; o < oc; ++o) {
    T* outp = out.v.data() + static_cast<std::size_t>(o) * oh * ow;
    for (int i = 0; i < oh * ow; ++i) outp[i] = b.v[o];
    for (int i = 0; i < ic; ++i) {
      const T* xp = x.v.data() + static_cast<std::size_t>(i) * h * wd;
      const T* wp = w.v.data() + ((static_cast<std::size_t>(o) * ic + i) * k) * k;
      for (int ky = 0; ky < k; ++ky) {
        int oy_lo, oy_hi;
        conv_span(h, oh, stride, p, ky, oy_lo, oy_hi);
        for (int kx = 0; kx < k; ++kx) {
          const T wv = wp[ky * k + kx];
          if (wv == T(0)) continue;
          int ox_lo, ox_hi;
          conv_span(wd, ow, stride, p, kx, ox_lo, ox_hi);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const int yy = oy * stride - p + ky;
            T* __restrict orow = outp + static_cast<std::size_t>(oy) * ow;
            const T* __restrict xrow =
                xp + static_cast<std::size_t>(yy) * wd - p + kx;
            for (int ox = ox_lo; ox < ox_hi; ++ox)
              orow[ox] += wv * xrow[ox * stride];
          }
        }
      }
    }
  }
}

// Accumulates into w.g, b.g and (when accum_input) x.g, given the
// gradient stored in out.g.
template <typename T>
void conv2d_backward(Tensor<T>& x, Tensor<T>& w, Tensor<T>& b,
                     const Tensor<T>& out, int stride, Pad pad,
                     bool accum_input) {
  const int ic = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int oc = w.shape[0], k = w.shape[2];
  const int p = pad_amount(pad, k);
  const int oh = out.shape[1], ow = out.shape[2];

  for (int o = 0; o < oc; ++o) {
    const T* gout = out.g.data() + static_cast<std::size_t>(o) * oh * ow;
    T gb = T(0);
    for (int i = 0; i < oh * ow; ++i) gb += gout[i];
    b.g[o] += gb;

    for (int i = 0; i < ic; ++i) {
      const T* xp = x.v.data() + static_cast<std::size_t>(i) * h * wd;
      T* gxp = x.g.data() + static_cast<std::size_t>(i) * h * wd;
      const T* wp = w.v.data() + ((static_cast<std::size_t>(o) * ic + i) * k) * k;
      T* gwp = w.g.data() + ((static_cast<std::size_t>(o) * ic + i) * k) * k;
      for (int ky = 0; ky < k; ++ky) {
        int oy_lo, oy_hi;
        conv_span(h, oh, stride, p, ky, oy_lo, oy_hi);
        for (int kx = 0; kx < k; ++kx) {
          T gw = T(0);
          const T wv = wp[ky * k + kx];
          int ox_lo, ox_hi;
          conv_span(wd, ow, stride, p, kx, ox_lo, ox_hi);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const int yy = oy * stride - p + ky;
            const T* __restrict grow =
                gout + static_cast<std::size_t>(oy) * ow;
            const T* __restrict xrow =
                xp + static_cast<std::size_t>(yy) * wd - p + kx;
            T* __restrict gxrow =
                gxp + static_cast<std::size_t>(yy) * wd - p + kx;
            if (accum_input) {
              for (int ox = ox_lo; ox < ox_hi; ++ox) {
                gw += grow[ox] * xrow[ox * stride];
                gxrow[ox * stride] += grow[ox] * wv;
              }
            } else {
              for (int ox = ox_lo; ox < ox_hi; ++ox)
                gw += grow[ox] * xrow[ox * stride];
            }
          }
          gwp[ky * k + kx] += gw;
        }
      }
    }
  }
}

template <typename T>
void relu_forward(const Tensor<T>& x, Tensor<T>& out) {
  out.ensure(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i)
    out.v[i] = x.v[i] > T(0) ? x.v[i] : T(0);
}

template <typename T>
void relu_backward(Tensor<T>& x, const Tensor<T>& out) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x.v[i] > T(0)) x.g[i] += out.g[i];
}

// Numerically stable logistic: never exponentiates a positive argument.
template <typename T>
T logistic(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
void logistic_forward(const Tensor<T>& x, Tensor<T>& out) {
  out.ensure(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) out.v[i] = logistic(x.v[i]);
}

template <typename T>
void logistic_backward(Tensor<T>& x, const Tensor<T>& out) {
  for (std::size_t i = 0; i < x.size(); ++i)
    x.g[i] += out.g[i] * out.v[i] * (T(1) - out.v[i]);
}

// 2x2 max pooling, stride 2. Requires even spatial dims. argmax records
// the flat input index of each pooled maximum for the backward pass.
template <typename T>
void maxpool2_forward(const Tensor<T>& x, Tensor<T>& out,
                      std::vector<int>& argmax) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  check(h % 2 == 0 && w % 2 == 0, "maxpool2: spatial dims must be even");
  const int oh = h / 2, ow = w / 2;
  out.ensure({c, oh, ow});
  argmax.assign(out.size(), 0);
  for (int ch = 0; ch < c; ++ch) {
    const T* xp = x.v.data() + static_cast<std::size_t>(ch) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        int best = (oy * 2) * w + ox * 2;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = (oy * 2 + dy) * w + ox * 2 + dx;
            if (xp[idx] > xp[best]) best = idx;
          }
        const std::size_t oidx =
            (static_cast<std::size_t>(ch) * oh + oy) * ow + ox;
        out.v[oidx] = xp[best];
        argmax[oidx] = ch * h * w + best;
      }
    }
  }
}

template <typename T>
void maxpool2_backward(Tensor<T>& x, const Tensor<T>& out,
                       const std::vector<int>& argmax) {
  for (std::size_t i = 0; i < out.size(); ++i) x.g[argmax[i]] += out.g[i];
}

// Nearest-neighbor 2x upsampling.
template <typename T>
void upsample2_forward(const Tensor<T>& x, Tensor<T>& out) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  out.ensure({c, h * 2, w * 2});
  for (int ch = 0; ch < c; ++ch) {
    const T* xp = x.v.data() + static_cast<std::size_t>(ch) * h * w;
    T* op = out.v.data() + static_cast<std::size_t>(ch) * h * w * 4;
    for (int y = 0; y < h * 2; ++y)
      for (int x2 = 0; x2 < w * 2; ++x2)
        op[y * w * 2 + x2] = xp[(y / 2) * w + x2 / 2];
  }
}

template <typename T>
void upsample2_backward(Tensor<T>& x, const Tensor<T>& out) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  for (int ch = 0; ch < c; ++ch) {
    T* gxp = x.g.data() + static_cast<std::size_t>(ch) * h * w;
    const T* gop = out.g.data() + static_cast<std::size_t>(ch) * h * w * 4;
    for (int y = 0; y < h * 2; ++y)
      for (int x2 = 0; x2 < w * 2; ++x2)
        gxp[(y / 2) * w + x2 / 2] += gop[y * w * 2 + x2];
  }
}

// Channel concatenation of two CHW tensors with equal spatial dims.
template <typename T>
void concat_forward(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  check(a.shape[1] == b.shape[1] && a.shape[2] == b.shape[2],
        "concat: spatial dims differ");
  out.ensure({a.shape[0] + b.shape[0], a.shape[1], a.shape[2]});
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.size());
}

template <typename T>
void concat_backward(Tensor<T>& a, Tensor<T>& b, const Tensor<T>& out) {
  for (std::size_t i = 0; i < a.size(); ++i) a.g[i] += out.g[i];
  for (std::size_t i = 0; i < b.size(); ++i) b.g[i] += out.g[a.size() + i];
}

// Global average pooling: {C, H, W} -> {C}.
template <typename T>
void gap_forward(const Tensor<T>& x, Tensor<T>& out) {
  const int c = x.shape[0], hw = x.shape[1] * x.shape[2];
  out.ensure({c});
  for (int ch = 0; ch < c; ++ch) {
    T acc = T(0);
    const T* xp = x.v.data() + static_cast<std::size_t>(ch) * hw;
    for (int i = 0; i < hw; ++i) acc += xp[i];
    out.v[ch] = acc / T(hw);
  }
}

template <typename T>
void gap_backward(Tensor<T>& x, const Tensor<T>& out) {
  const int c = x.shape[0], hw = x.shape[1] * x.shape[2];
  for (int ch = 0; ch < c; ++ch) {
    const T scale = out.g[ch] / T(hw);
    T* gxp = x.g.data() + static_cast<std::size_t>(ch) * hw;
    for (int i = 0; i < hw; ++i) gxp[i] += scale;
  }
}

}  // namespace pointseg::nn
