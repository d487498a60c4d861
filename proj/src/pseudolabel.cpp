#include "pointseg/pseudolabel.hpp"

#include <cmath>

#include "pointseg/errors.hpp"

namespace pointseg {
namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

void check_sigma(const Cov2& sigma) {
  if (!sigma.spd())
    throw ConfigError("sigma must be symmetric positive-definite");
}

}  // namespace

double LabelConfig::disk_radius() const {
  const double s2 = sigma.xx;
  const double arg = csm / (kTwoPi * s2 * gamma);
  if (arg <= 1.0) return -1.0;
  return std::sqrt(s2) * std::sqrt(2.0 * std::log(arg));
}

void validate(const LabelConfig& cfg) {
  check_sigma(cfg.sigma);
  if (cfg.csm <= 0.0) throw ConfigError("csm must be positive");
  if (cfg.gamma <= 0.0) throw ConfigError("gamma must be positive");
  if (cfg.rho <= 0.0) throw ConfigError("rho must be positive");
}

Raster gaussian_splat(const std::vector<PointXY>& points, const Cov2& sigma,
                      int height, int width) {
  check_sigma(sigma);
  Raster canvas(height, width, 1);
  if (points.empty()) return canvas;

  const double det = sigma.det();
  const double norm = 1.0 / (kTwoPi * std::sqrt(det));
  // Inverse covariance entries.
  const double ixx = sigma.yy / det;
  const double ixy = -sigma.xy / det;
  const double iyy = sigma.xx / det;

  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double px = c + 0.5;
      const double py = r + 0.5;
      double best = 0.0;
      for (const PointXY& p : points) {
        const double dx = px - p.x;
        const double dy = py - p.y;
        const double quad = dx * dx * ixx + 2.0 * dx * dy * ixy + dy * dy * iyy;
        const double value = norm * std::exp(-0.5 * quad);
        if (value > best) best = value;
      }
      canvas.at(r, c) = static_cast<float>(best);
    }
  }
  return canvas;
}

Raster make_pseudo_label(const std::vector<PointXY>& points,
                         const LabelConfig& cfg, int height, int width) {
  validate(cfg);
  Raster mask = gaussian_splat(points, cfg.sigma, height, width);
  for (float& v : mask.data)
    v = (cfg.csm * static_cast<double>(v) >= cfg.gamma) ? 1.0f : 0.0f;
  return mask;
}

}  // namespace pointseg
