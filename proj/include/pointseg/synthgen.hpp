#pragma once

#include <cstdint>
#include <filesystem>

#include "pointseg/dataset.hpp"

namespace pointseg {

enum class ObjectKind { ellipse, rounded_rect };

struct SceneConfig {
  int grid_rows = 16;
  int grid_cols = 16;
  int tile_size = 64;
  double object_density = 0.25;    // fraction of tiles carrying objects
  int min_objects = 1;             // per positive tile
  int max_objects = 3;
  ObjectKind kind = ObjectKind::ellipse;
  double bg_corr_len = 6.0;        // background smoothing radius, px
  double color_separation = 0.35;  // object-vs-background contrast floor
  double tile_tint = 0.15;         // per-tile illumination offset amplitude
  double jitter_sigma = 0.0;       // centroid point jitter, px
  uint64_t seed = 1;
};

// Throws ConfigError when a field is out of range.
void validate(const SceneConfig& cfg);

// Writes chips/, masks/, index.json under out_dir. Deterministic per
// seed; chips are independent of generation order. Every positive tile
// is guaranteed a negative tile within Chebyshev distance 3.
DatasetIndex generate_dataset(const SceneConfig& cfg,
                              const std::filesystem::path& out_dir);

struct DatasetStats {
  int positives = 0;
  int negatives = 0;
  int objects = 0;
  double mean_object_area = 0.0;  // px per object
};

// Recounts objects from the ground-truth masks (4-connected components).
DatasetStats dataset_stats(const DatasetIndex& index,
                           const std::filesystem::path& data_dir);

}  // namespace pointseg
