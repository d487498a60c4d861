#include "pointseg/compositor.hpp"

#include <string>

#include "pointseg/errors.hpp"

namespace pointseg {
namespace {

std::string shape_of(const Raster& r) {
  return std::to_string(r.height) + "x" + std::to_string(r.width) + "x" +
         std::to_string(r.channels);
}

void check_shapes(const Raster& i, const Raster& i_ctx, const Raster& y) {
  if (i.height != i_ctx.height || i.width != i_ctx.width ||
      i.channels != i_ctx.channels)
    throw ContractError("superimpose: image " + shape_of(i) +
                        " and context " + shape_of(i_ctx) + " differ");
  if (y.channels != 1 || y.height != i.height || y.width != i.width)
    throw ContractError("superimpose: mask " + shape_of(y) +
                        " does not match image " + shape_of(i));
}

}  // namespace

Raster superimpose(const Raster& i, const Raster& i_ctx, const Raster& y) {
  check_shapes(i, i_ctx, y);
  Raster out(i.height, i.width, i.channels);
  blend(i.data.data(), i_ctx.data.data(), y.data.data(), out.data.data(),
        i.height * i.width, i.channels);
  return out;
}

Raster make_fake_positive(const Raster& i_r, const Raster& i_ctx,
                          const Raster& y_hat) {
  return superimpose(i_r, i_ctx, y_hat);
}

Raster make_fake_negative(const Raster& i_r, const Raster& i_ctx,
                          const Raster& y_hat) {
  // (1 − ŷ) ⊙ I_R + ŷ ⊙ I_ctx is the same blend with the roles swapped.
  return superimpose(i_ctx, i_r, y_hat);
}

}  // namespace pointseg
