#include "pointseg/losses.hpp"

namespace pointseg {

double loss_loc(const Raster& y_hat, const Raster& y_tilde, double rho) {
  if (y_hat.height != y_tilde.height || y_hat.width != y_tilde.width ||
      y_hat.channels != 1 || y_tilde.channels != 1)
    throw ContractError("loss_loc: masks must be single-channel, same shape");
  if (rho <= 0.0) throw ContractError("loss_loc: rho must be positive");

  // Accumulate at double precision regardless of storage type.
  double acc = 0.0;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    const double p = clamp_prob(static_cast<double>(y_hat.data[i]));
    const double t = y_tilde.data[i];
    acc += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
  }
  return std::min(acc / static_cast<double>(y_hat.size()), rho);
}

}  // namespace pointseg
