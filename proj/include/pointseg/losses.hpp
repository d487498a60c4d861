#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pointseg/errors.hpp"
#include "pointseg/raster.hpp"

namespace pointseg {

// Probabilities are clamped to [kProbEps, 1 - kProbEps] before any log.
inline constexpr double kProbEps = 1e-7;

enum class LossVariant { saturating, nonsaturating };

// Per-step loss breakdown, all in nats.
struct LossReport {
  double l_d1 = 0.0;
  double l_d2 = 0.0;
  double l_g_adv = 0.0;
  double l_loc = 0.0;
  double total_g = 0.0;
};

// Diagnostic scalar: the sum of the generator objective and both
// discriminator losses. Optimization always uses the parts separately.
inline double combined_objective(const LossReport& r) {
  return r.l_g_adv + r.l_loc + r.l_d1 + r.l_d2;
}

template <typename T>
T clamp_prob(T p) {
  return std::clamp(p, static_cast<T>(kProbEps),
                    T(1) - static_cast<T>(kProbEps));
}

namespace detail {
template <typename T>
void check_finite(const std::vector<T>& probs, const char* what) {
  for (T p : probs)
    if (!std::isfinite(p)) throw TrainError(std::string(what) + ": non-finite probability");
}
}  // namespace detail

// Discriminator loss and its gradients, minimized form:
// mean_i −[log real_i + log(1 − fake_i)]. Both batches must be the same
// size. d_real/d_fake hold d(value)/d(prob); the gradient is zero where
// the clamp is active.
template <typename T>
struct DLoss {
  T value = T(0);
  std::vector<T> d_real, d_fake;
};

template <typename T>
DLoss<T> loss_d(const std::vector<T>& real, const std::vector<T>& fake) {
  if (real.size() != fake.size() || real.empty())
    throw ContractError("loss_d: real/fake batches must be equal, non-empty");
  detail::check_finite(real, "loss_d");
  detail::check_finite(fake, "loss_d");
  DLoss<T> out;
  out.d_real.assign(real.size(), T(0));
  out.d_fake.assign(fake.size(), T(0));
  const T inv_b = T(1) / static_cast<T>(real.size());
  for (std::size_t i = 0; i < real.size(); ++i) {
    const T r = clamp_prob(real[i]);
    const T f = clamp_prob(fake[i]);
    out.value += -(std::log(r) + std::log(T(1) - f)) * inv_b;
    if (real[i] == r) out.d_real[i] = -inv_b / r;
    if (fake[i] == f) out.d_fake[i] = inv_b / (T(1) - f);
  }
  return out;
}

// Mean binary cross entropy between a soft prediction and a binary
// target, with clamped logs. n is the pixel count.
template <typename T>
T loc_bce(const T* y_hat, const T* y_tilde, std::size_t n) {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    const T p = clamp_prob(y_hat[i]);
    acc += -(y_tilde[i] * std::log(p) +
             (T(1) - y_tilde[i]) * std::log(T(1) - p));
  }
  return acc / static_cast<T>(n);
}

// Accumulates scale * d(mean BCE)/d(y_hat) into grad. Zero where the
// clamp is active.
template <typename T>
void loc_bce_grad(const T* y_hat, const T* y_tilde, std::size_t n, T scale,
                  T* grad) {
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T p = clamp_prob(y_hat[i]);
    if (p != y_hat[i]) continue;
    grad[i] += scale * inv_n * (-(y_tilde[i] / p) +
                                (T(1) - y_tilde[i]) / (T(1) - p));
  }
}

// Localization guidance: min(mean BCE(ŷ, ỹ), ρ). Shapes must match;
// the result is always within [0, ρ].
double loss_loc(const Raster& y_hat, const Raster& y_tilde, double rho);

// Generator loss over a batch of discriminator outputs on the fakes.
// saturating: mean_i [log(1 − d1_i) + log(1 − d2_i)] + l_loc
// nonsaturating: mean_i −[log d1_i + log d2_i] + l_loc
// An empty d2_fake (D2 disabled) contributes nothing. d_d1/d_d2 hold
// d(value)/d(prob).
template <typename T>
struct GLoss {
  T value = T(0);
  std::vector<T> d_d1, d_d2;
};

template <typename T>
GLoss<T> loss_g(const std::vector<T>& d1_fake, const std::vector<T>& d2_fake,
                T l_loc, LossVariant variant) {
  if (d1_fake.empty())
    throw ContractError("loss_g: d1_fake batch must be non-empty");
  if (!d2_fake.empty() && d2_fake.size() != d1_fake.size())
    throw ContractError("loss_g: d2_fake batch size mismatch");
  if (!std::isfinite(l_loc)) throw TrainError("loss_g: non-finite l_loc");
  detail::check_finite(d1_fake, "loss_g");
  detail::check_finite(d2_fake, "loss_g");

  GLoss<T> out;
  out.d_d1.assign(d1_fake.size(), T(0));
  out.d_d2.assign(d2_fake.size(), T(0));
  const T inv_b = T(1) / static_cast<T>(d1_fake.size());
  auto term = [&](T p, T& grad_slot) {
    const T q = clamp_prob(p);
    if (variant == LossVariant::saturating) {
      if (p == q) grad_slot = -inv_b / (T(1) - q);
      return std::log(T(1) - q) * inv_b;
    }
    if (p == q) grad_slot = -inv_b / q;
    return -std::log(q) * inv_b;
  };
  for (std::size_t i = 0; i < d1_fake.size(); ++i)
    out.value += term(d1_fake[i], out.d_d1[i]);
  for (std::size_t i = 0; i < d2_fake.size(); ++i)
    out.value += term(d2_fake[i], out.d_d2[i]);
  out.value += l_loc;
  return out;
}

}  // namespace pointseg
