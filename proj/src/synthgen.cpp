#include "pointseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pointseg/errors.hpp"
#include "pointseg/grid_context.hpp"
#include "pointseg/polygonize.hpp"
#include "pointseg/raster.hpp"
#include "pointseg/rng.hpp"

namespace pointseg {
namespace {

struct ObjectSpec {
  double cx = 0, cy = 0;   // center
  double a = 0, b = 0;     // half extents
  double theta = 0;        // rotation
  double radius = 0;       // bounding radius
  float color[3] = {0, 0, 0};
};

// Separable box blur with clamped borders, one pass.
void box_blur(std::vector<double>& img, int h, int w, int radius) {
  if (radius < 1) return;
  std::vector<double> tmp(img.size());
  const double inv = 1.0 / (2 * radius + 1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int d = -radius; d <= radius; ++d)
        acc += img[r * w + std::clamp(c + d, 0, w - 1)];
      tmp[r * w + c] = acc * inv;
    }
  }
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) {
      double acc = 0.0;
      for (int d = -radius; d <= radius; ++d)
        acc += tmp[std::clamp(r + d, 0, h - 1) * w + c];
      img[r * w + c] = acc * inv;
    }
  }
}

// Signed distance to the object boundary, negative inside.
double object_sdf(const ObjectSpec& o, ObjectKind kind, double px, double py) {
  const double dx = px - o.cx, dy = py - o.cy;
  const double ux = std::cos(o.theta) * dx + std::sin(o.theta) * dy;
  const double uy = -std::sin(o.theta) * dx + std::cos(o.theta) * dy;
  if (kind == ObjectKind::ellipse) {
    const double e = std::sqrt((ux / o.a) * (ux / o.a) +
                               (uy / o.b) * (uy / o.b));
    return (e - 1.0) * std::min(o.a, o.b);
  }
  const double corner = 2.0;
  const double qx = std::abs(ux) - (o.a - corner);
  const double qy = std::abs(uy) - (o.b - corner);
  const double outside =
      std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
  const double inside = std::min(std::max(qx, qy), 0.0);
  return outside + inside - corner;
}

}  // namespace

void validate(const SceneConfig& cfg) {
  if (cfg.grid_rows < 1 || cfg.grid_cols < 1)
    throw ConfigError("scene: grid must be at least 1x1");
  if (cfg.tile_size <= 0 || cfg.tile_size % 8 != 0)
    throw ConfigError("scene: tile_size must be a positive multiple of 8");
  if (cfg.object_density < 0.0 || cfg.object_density >= 1.0)
    throw ConfigError("scene: object_density must be in [0, 1)");
  if (cfg.min_objects < 1 || cfg.max_objects < cfg.min_objects ||
      cfg.max_objects > 3)
    throw ConfigError("scene: objects per tile must satisfy 1 <= min <= max <= 3");
  if (cfg.bg_corr_len < 0.0)
    throw ConfigError("scene: bg_corr_len must be >= 0");
  if (cfg.color_separation <= 0.0 || cfg.color_separation > 0.4)
    throw ConfigError("scene: color_separation must be in (0, 0.4]");
  if (cfg.tile_tint < 0.0 || cfg.tile_tint > 0.3)
    throw ConfigError("scene: tile_tint must be in [0, 0.3]");
  if (cfg.jitter_sigma < 0.0)
    throw ConfigError("scene: jitter_sigma must be >= 0");
}

DatasetIndex generate_dataset(const SceneConfig& cfg,
                              const std::filesystem::path& out_dir) {
  validate(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "chips");
  fs::create_directories(out_dir / "masks");

  const int n_tiles = cfg.grid_rows * cfg.grid_cols;
  const int n_pos = static_cast<int>(
      std::lround(cfg.object_density * static_cast<double>(n_tiles)));

  Rng layout = Rng::stream(cfg.seed, 1);

  // Base palette: mid-gray band so both darker and brighter objects
  // always fit inside [0, 1] with the configured separation.
  double base[3];
  for (double& ch : base) ch = layout.uniform(0.45, 0.55);

  // Positive layout; resample until every positive keeps a negative
  // neighbor within Chebyshev distance 3.
  std::vector<int> order(n_tiles);
  std::iota(order.begin(), order.end(), 0);
  std::vector<bool> positive(n_tiles, false);
  bool layout_ok = false;
  for (int attempt = 0; attempt < 200 && !layout_ok; ++attempt) {
    for (int i = n_tiles - 1; i > 0; --i)
      std::swap(order[i], order[layout.uniform_int(i + 1)]);
    std::fill(positive.begin(), positive.end(), false);
    for (int i = 0; i < n_pos; ++i) positive[order[i]] = true;
    layout_ok = true;
    for (int t = 0; t < n_tiles && layout_ok; ++t) {
      if (!positive[t]) continue;
      const TileId id{t / cfg.grid_cols, t % cfg.grid_cols};
      bool has_negative = false;
      for (int radius = 1; radius <= 3 && !has_negative; ++radius)
        for (TileId nb :
             chebyshev_ring(id, radius, cfg.grid_rows, cfg.grid_cols))
          if (!positive[nb.row * cfg.grid_cols + nb.col]) {
            has_negative = true;
            break;
          }
      layout_ok = has_negative;
    }
  }
  if (!layout_ok)
    throw ConfigError(
        "scene: could not place positives so each keeps a nearby negative; "
        "lower object_density");

  DatasetIndex index;
  index.tile_size = cfg.tile_size;
  index.grid_rows = cfg.grid_rows;
  index.grid_cols = cfg.grid_cols;

  const int size = cfg.tile_size;
  for (int t = 0; t < n_tiles; ++t) {
    const TileId id{t / cfg.grid_cols, t % cfg.grid_cols};
    Rng rng = Rng::stream(cfg.seed, 1000 + static_cast<uint64_t>(t));

    // Tile-wide illumination offset: gives each tile a tonal identity the
    // way lighting and land cover vary between patches of real imagery.
    double tint[3];
    for (double& ch : tint) ch = rng.uniform(-cfg.tile_tint, cfg.tile_tint);

    // Smooth correlated background around the tinted palette.
    std::vector<double> bg(static_cast<std::size_t>(size) * size * 3);
    for (int ch = 0; ch < 3; ++ch) {
      std::vector<double> plane(static_cast<std::size_t>(size) * size);
      for (double& v : plane) v = base[ch] + tint[ch] + rng.uniform(-0.15, 0.15);
      const int radius = static_cast<int>(std::lround(cfg.bg_corr_len));
      box_blur(plane, size, size, radius);
      box_blur(plane, size, size, radius);
      for (int p = 0; p < size * size; ++p) bg[p * 3 + ch] = plane[p];
    }

    Raster image(size, size, 3);
    for (std::size_t i = 0; i < bg.size(); ++i)
      image.data[i] = static_cast<float>(std::clamp(bg[i], 0.0, 1.0));
    Raster gt(size, size, 1);

    ChipRecord record;
    record.tile_id = id;
    record.image = "chips/" + std::to_string(id.row) + "_" +
                   std::to_string(id.col) + ".png";
    record.gt_mask = "masks/" + std::to_string(id.row) + "_" +
                     std::to_string(id.col) + ".png";

    if (positive[t]) {
      const int wanted =
          cfg.min_objects +
          rng.uniform_int(cfg.max_objects - cfg.min_objects + 1);
      std::vector<ObjectSpec> placed;
      for (int obj = 0; obj < wanted; ++obj) {
        ObjectSpec spec;
        bool ok = false;
        for (int attempt = 0; attempt < 50 && !ok; ++attempt) {
          spec.a = rng.uniform(4.0, 7.0);
          spec.b = rng.uniform(4.0, 7.0);
          spec.theta = rng.uniform(0.0, 3.14159265358979323846);
          spec.radius = std::max(spec.a, spec.b);
          const double margin = spec.radius + 2.0;
          spec.cx = rng.uniform(margin, size - margin);
          spec.cy = rng.uniform(margin, size - margin);
          ok = true;
          for (const ObjectSpec& other : placed)
            if (std::hypot(spec.cx - other.cx, spec.cy - other.cy) <
                spec.radius + other.radius + 2.0) {
              ok = false;
              break;
            }
        }
        if (!ok) continue;
        // Darker or brighter than the palette by at least the separation.
        const double s = rng.uniform01() < 0.5 ? -1.0 : 1.0;
        const double contrast = cfg.color_separation + 0.05 + rng.uniform(0.0, 0.05);
        for (int ch = 0; ch < 3; ++ch)
          spec.color[ch] = static_cast<float>(std::clamp(
              base[ch] + tint[ch] + s * (contrast + rng.uniform(0.0, 0.04)),
              0.0, 1.0));
        placed.push_back(spec);
      }

      for (const ObjectSpec& spec : placed) {
        for (int r = 0; r < size; ++r) {
          for (int c = 0; c < size; ++c) {
            const double sdf =
                object_sdf(spec, cfg.kind, c + 0.5, r + 0.5);
            const double alpha = std::clamp(0.5 - sdf, 0.0, 1.0);
            if (alpha <= 0.0) continue;
            for (int ch = 0; ch < 3; ++ch) {
              float& px = image.at(r, c, ch);
              px = static_cast<float>(alpha * spec.color[ch] +
                                      (1.0 - alpha) * px);
            }
            if (sdf < 0.0) gt.at(r, c) = 1.0f;
          }
        }
        double x = spec.cx + rng.normal(0.0, cfg.jitter_sigma);
        double y = spec.cy + rng.normal(0.0, cfg.jitter_sigma);
        x = std::clamp(x, 0.0, size - 0.5);
        y = std::clamp(y, 0.0, size - 0.5);
        record.points.push_back({x, y});
      }
    }

    save_png(image, out_dir / record.image);
    save_png(gt, out_dir / *record.gt_mask);
    index.chips.push_back(std::move(record));
  }

  save_index(index, out_dir / "index.json");
  return index;
}

DatasetStats dataset_stats(const DatasetIndex& index,
                           const std::filesystem::path& data_dir) {
  DatasetStats stats;
  long long area = 0;
  for (const ChipRecord& chip : index.chips) {
    if (chip.is_positive())
      ++stats.positives;
    else
      ++stats.negatives;
    if (!chip.gt_mask) continue;
    const Raster mask = load_png(data_dir / *chip.gt_mask);
    for (const Polygon& poly : mask_to_polygons(mask)) {
      ++stats.objects;
      area += static_cast<long long>(std::llround(poly.area()));
    }
  }
  if (stats.objects > 0)
    stats.mean_object_area =
        static_cast<double>(area) / static_cast<double>(stats.objects);
  return stats;
}

}  // namespace pointseg
