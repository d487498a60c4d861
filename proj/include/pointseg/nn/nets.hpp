#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pointseg/nn/ops.hpp"
#include "pointseg/nn/tensor.hpp"
#include "pointseg/raster.hpp"
#include "pointseg/rng.hpp"

namespace pointseg::nn {

// Interleaved HWC raster -> planar CHW values.
template <typename T>
std::vector<T> to_chw(const Raster& r) {
  std::vector<T> planes(r.data.size());
  const int hw = r.height * r.width;
  for (int p = 0; p < hw; ++p)
    for (int ch = 0; ch < r.channels; ++ch)
      planes[static_cast<std::size_t>(ch) * hw + p] =
          static_cast<T>(r.data[static_cast<std::size_t>(p) * r.channels + ch]);
  return planes;
}

template <typename T>
std::vector<T> pseudo_plane(const Raster& pseudo) {
  std::vector<T> plane(pseudo.data.size());
  for (std::size_t i = 0; i < plane.size(); ++i)
    plane[i] = static_cast<T>(pseudo.data[i]);
  return plane;
}

template <typename T>
struct ConvLayer {
  Tensor<T> w, b;
  int stride = 1;
  Pad pad = Pad::same;

  void init(int oc, int ic, int k, int stride_, Pad pad_, Rng& rng,
            double scale = 1.0) {
    stride = stride_;
    pad = pad_;
    w.resize({oc, ic, k, k}, true);
    b.resize({oc}, true);
    const double stddev =
        scale * std::sqrt(2.0 / (static_cast<double>(ic) * k * k));
    for (T& x : w.v) x = static_cast<T>(rng.normal(0.0, stddev));
  }

  void forward(const Tensor<T>& x, Tensor<T>& out) {
    conv2d_forward(x, w, b, stride, pad, out);
  }
  void backward(Tensor<T>& x, const Tensor<T>& out, bool accum_input) {
    conv2d_backward(x, w, b, out, stride, pad, accum_input);
  }
};

using NamedParams = std::vector<std::pair<std::string, int>>;

// Segmentation generator: a 3-level U-Net over a 4-channel input (RGB
// plus the pseudo-label plane), logistic head, output spatial dims equal
// input dims. Channel widths 16/32/64.
template <typename T>
class SegNet {
 public:
  static constexpr int kInChannels = 4;
  static constexpr int kDivisor = 4;  // two 2x pools

  // The output conv starts near zero so the first masks sit at ~0.5,
  // keeping the capped localization loss inside its active range.
  explicit SegNet(Rng rng) {
    e1_.init(16, kInChannels, 3, 1, Pad::same, rng);
    e2_.init(32, 16, 3, 1, Pad::same, rng);
    e3_.init(64, 32, 3, 1, Pad::same, rng);
    d2_.init(32, 96, 3, 1, Pad::same, rng);
    d1_.init(16, 48, 3, 1, Pad::same, rng);
    out_.init(1, 16, 3, 1, Pad::same, rng, 0.01);
  }

  // Loads the RGB image and pseudo-label planes into the input tensor.
  void set_input(const Raster& image, const Raster& pseudo) {
    check(image.channels == 3, "seg: image must have 3 channels");
    check(pseudo.channels == 1 && pseudo.height == image.height &&
              pseudo.width == image.width,
          "seg: pseudo-label plane must match the image extent");
    set_input_planes(to_chw<T>(image), pseudo_plane<T>(pseudo), image.height,
                     image.width);
  }

  // CHW planes variant: rgb has 3*H*W values, pseudo H*W.
  void set_input_planes(const std::vector<T>& rgb, const std::vector<T>& pseudo,
                        int h, int w) {
    check(h % kDivisor == 0 && w % kDivisor == 0,
          "seg: side must be divisible by " + std::to_string(kDivisor));
    in_.ensure({kInChannels, h, w});
    std::copy(rgb.begin(), rgb.end(), in_.v.begin());
    std::copy(pseudo.begin(), pseudo.end(),
              in_.v.begin() + static_cast<std::size_t>(3) * h * w);
  }

  // Runs the graph; the result lives in y().v (values in (0,1)).
  void forward() {
    e1_.forward(in_, e1z_);
    relu_forward(e1z_, e1a_);
    maxpool2_forward(e1a_, p1_, arg1_);
    e2_.forward(p1_, e2z_);
    relu_forward(e2z_, e2a_);
    maxpool2_forward(e2a_, p2_, arg2_);
    e3_.forward(p2_, e3z_);
    relu_forward(e3z_, e3a_);
    upsample2_forward(e3a_, u2_);
    concat_forward(u2_, e2a_, c2_);
    d2_.forward(c2_, d2z_);
    relu_forward(d2z_, d2a_);
    upsample2_forward(d2a_, u1_);
    concat_forward(u1_, e1a_, c1_);
    d1_.forward(c1_, d1z_);
    relu_forward(d1z_, d1a_);
    out_.forward(d1a_, oz_);
    logistic_forward(oz_, y_);
  }

  // Backpropagates from y().g; weight gradients accumulate, activation
  // gradients are reset here.
  void backward() {
    zero_activation_grads();
    logistic_backward(oz_, y_);
    out_.backward(d1a_, oz_, true);
    relu_backward(d1z_, d1a_);
    d1_.backward(c1_, d1z_, true);
    concat_backward(u1_, e1a_, c1_);
    upsample2_backward(d2a_, u1_);
    relu_backward(d2z_, d2a_);
    d2_.backward(c2_, d2z_, true);
    concat_backward(u2_, e2a_, c2_);
    upsample2_backward(e3a_, u2_);
    relu_backward(e3z_, e3a_);
    e3_.backward(p2_, e3z_, true);
    maxpool2_backward(e2a_, p2_, arg2_);
    relu_backward(e2z_, e2a_);
    e2_.backward(p1_, e2z_, true);
    maxpool2_backward(e1a_, p1_, arg1_);
    relu_backward(e1z_, e1a_);
    e1_.backward(in_, e1z_, false);
  }

  Tensor<T>& y() { return y_; }
  Tensor<T>& input() { return in_; }

  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    return {{"e1.w", &e1_.w},  {"e1.b", &e1_.b},  {"e2.w", &e2_.w},
            {"e2.b", &e2_.b},  {"e3.w", &e3_.w},  {"e3.b", &e3_.b},
            {"d2.w", &d2_.w},  {"d2.b", &d2_.b},  {"d1.w", &d1_.w},
            {"d1.b", &d1_.b},  {"out.w", &out_.w}, {"out.b", &out_.b}};
  }

  void zero_param_grads() {
    for (auto& [name, t] : named_params()) t->zero_grad();
  }

 private:
  void zero_activation_grads() {
    for (Tensor<T>* t : {&in_, &e1z_, &e1a_, &p1_, &e2z_, &e2a_, &p2_, &e3z_,
                         &e3a_, &u2_, &c2_, &d2z_, &d2a_, &u1_, &c1_, &d1z_,
                         &d1a_, &oz_})
      t->zero_grad();
  }

  ConvLayer<T> e1_, e2_, e3_, d2_, d1_, out_;
  Tensor<T> in_, e1z_, e1a_, p1_, e2z_, e2a_, p2_, e3z_, e3a_, u2_, c2_, d2z_,
      d2a_, u1_, c1_, d1z_, d1a_, oz_, y_;
  std::vector<int> arg1_, arg2_;
};

// Discriminator: four stride-2 conv blocks, global average pooling, and
// a logistic scalar head.
template <typename T>
class DiscNet {
 public:
  explicit DiscNet(Rng rng) {
    c1_.init(16, 3, 3, 2, Pad::same, rng);
    c2_.init(32, 16, 3, 2, Pad::same, rng);
    c3_.init(64, 32, 3, 2, Pad::same, rng);
    c4_.init(64, 64, 3, 2, Pad::same, rng);
    head_w_.resize({64}, true);
    head_b_.resize({1}, true);
    const double stddev = std::sqrt(2.0 / 64.0);
    for (T& x : head_w_.v) x = static_cast<T>(rng.normal(0.0, stddev));
  }

  // rgb: CHW planes, 3*H*W values. Returns the probability in (0,1).
  T forward(const std::vector<T>& rgb, int h, int w) {
    check(static_cast<std::size_t>(3) * h * w == rgb.size(),
          "disc: input size does not match 3xHxW");
    in_.ensure({3, h, w});
    std::copy(rgb.begin(), rgb.end(), in_.v.begin());
    c1_.forward(in_, z1_);
    relu_forward(z1_, a1_);
    c2_.forward(a1_, z2_);
    relu_forward(z2_, a2_);
    c3_.forward(a2_, z3_);
    relu_forward(z3_, a3_);
    c4_.forward(a3_, z4_);
    relu_forward(z4_, a4_);
    gap_forward(a4_, pooled_);
    T logit = head_b_.v[0];
    for (int i = 0; i < 64; ++i) logit += head_w_.v[i] * pooled_.v[i];
    prob_ = logistic(logit);
    return prob_;
  }

  T forward(const Raster& image) {
    check(image.channels == 3, "disc: image must have 3 channels");
    return forward(to_chw<T>(image), image.height, image.width);
  }

  // Backpropagates d(loss)/d(prob); weight gradients accumulate. The
  // gradient w.r.t. the input image is left in input_grad().
  void backward(T dprob) {
    zero_activation_grads();
    const T dlogit = dprob * prob_ * (T(1) - prob_);
    head_b_.g[0] += dlogit;
    for (int i = 0; i < 64; ++i) {
      head_w_.g[i] += dlogit * pooled_.v[i];
      pooled_.g[i] = dlogit * head_w_.v[i];
    }
    gap_backward(a4_, pooled_);
    relu_backward(z4_, a4_);
    c4_.backward(a3_, z4_, true);
    relu_backward(z3_, a3_);
    c3_.backward(a2_, z3_, true);
    relu_backward(z2_, a2_);
    c2_.backward(a1_, z2_, true);
    relu_backward(z1_, a1_);
    c1_.backward(in_, z1_, true);
  }

  const std::vector<T>& input_grad() const { return in_.g; }
  Tensor<T>& input() { return in_; }

  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    return {{"c1.w", &c1_.w},     {"c1.b", &c1_.b}, {"c2.w", &c2_.w},
            {"c2.b", &c2_.b},     {"c3.w", &c3_.w}, {"c3.b", &c3_.b},
            {"c4.w", &c4_.w},     {"c4.b", &c4_.b}, {"head.w", &head_w_},
            {"head.b", &head_b_}};
  }

  void zero_param_grads() {
    for (auto& [name, t] : named_params()) t->zero_grad();
  }

 private:
  void zero_activation_grads() {
    for (Tensor<T>* t :
         {&in_, &z1_, &a1_, &z2_, &a2_, &z3_, &a3_, &z4_, &a4_, &pooled_})
      t->zero_grad();
  }

  ConvLayer<T> c1_, c2_, c3_, c4_;
  Tensor<T> head_w_, head_b_;
  Tensor<T> in_, z1_, a1_, z2_, a2_, z3_, a3_, z4_, a4_, pooled_;
  T prob_ = T(0.5);
};

}  // namespace pointseg::nn
