#pragma once

#include "pointseg/raster.hpp"

namespace pointseg {

// Core alpha blend on raw arrays: out = y * i + (1 - y) * i_ctx, with the
// single-channel mask y broadcast across channels. Templated so gradient
// tests can run the identical arithmetic at float64.
template <typename T>
void blend(const T* i, const T* i_ctx, const T* y, T* out, int pixels,
           int channels) {
  for (int p = 0; p < pixels; ++p) {
    const T a = y[p];
    const T b = T(1) - a;
    for (int ch = 0; ch < channels; ++ch) {
      const int idx = p * channels + ch;
      out[idx] = a * i[idx] + b * i_ctx[idx];
    }
  }
}

// out = y ⊙ i + (1 − y) ⊙ i_ctx per pixel per channel. i and i_ctx must
// share H×W×C; y must be single-channel H×W. Throws ContractError on
// shape mismatch.
Raster superimpose(const Raster& i, const Raster& i_ctx, const Raster& y);

// Fake positive: the predicted object pasted into the context.
Raster make_fake_positive(const Raster& i_r, const Raster& i_ctx,
                          const Raster& y_hat);

// Fake negative: the context pasted over the predicted object.
Raster make_fake_negative(const Raster& i_r, const Raster& i_ctx,
                          const Raster& y_hat);

}  // namespace pointseg
