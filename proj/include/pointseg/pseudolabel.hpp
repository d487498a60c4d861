#pragma once

#include <vector>

#include "pointseg/dataset.hpp"
#include "pointseg/raster.hpp"

namespace pointseg {

// 2x2 symmetric covariance in px^2 (symmetric by construction: only the
// upper triangle is stored).
struct Cov2 {
  double xx = 16.0;
  double xy = 0.0;
  double yy = 16.0;

  double det() const { return xx * yy - xy * xy; }
  bool spd() const { return xx > 0.0 && det() > 0.0; }
  bool isotropic() const { return xy == 0.0 && xx == yy; }
};

// Constants of the point-to-buffer conversion and the localization cap.
struct LabelConfig {
  Cov2 sigma;            // splat covariance, default diag(4^2, 4^2)
  double csm = 8000.0;   // centroid size multiplier
  double gamma = 20.0;   // binarization threshold on csm-scaled density
  double rho = 0.7;      // localization loss cap, nats

  // Analytic buffer radius for isotropic sigma; negative when the
  // threshold exceeds the scaled peak (empty buffer).
  double disk_radius() const;
};

// Throws ConfigError if any field violates its constraint.
void validate(const LabelConfig& cfg);

// canvas(u) = max over points p of the bivariate normal density with
// mean p and covariance sigma, evaluated at pixel centers (c+0.5, r+0.5).
// Empty points produce an all-zero canvas.
Raster gaussian_splat(const std::vector<PointXY>& points, const Cov2& sigma,
                      int height, int width);

// Binary buffer mask: 1 where csm * canvas >= gamma.
Raster make_pseudo_label(const std::vector<PointXY>& points,
                         const LabelConfig& cfg, int height, int width);

}  // namespace pointseg
