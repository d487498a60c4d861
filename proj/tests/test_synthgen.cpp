#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "pointseg/dataset.hpp"
#include "pointseg/errors.hpp"
#include "pointseg/raster.hpp"
#include "pointseg/synthgen.hpp"

using namespace pointseg;
namespace fs = std::filesystem;

namespace {

SceneConfig small_cfg() {
  SceneConfig cfg;
  cfg.grid_rows = 6;
  cfg.grid_cols = 6;
  cfg.tile_size = 32;
  cfg.bg_corr_len = 3.0;
  cfg.seed = 7;
  return cfg;
}

struct TempDataset {
  fs::path dir;
  DatasetIndex index;
  explicit TempDataset(const SceneConfig& cfg, const std::string& tag) {
    dir = fs::temp_directory_path() / ("pointseg_synth_" + tag + "_" +
                                       std::to_string(std::rand()));
    index = generate_dataset(cfg, dir);
  }
  ~TempDataset() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("generation is byte-identical per seed and differs across seeds") {
  const SceneConfig cfg = small_cfg();
  TempDataset a(cfg, "det_a"), b(cfg, "det_b");
  REQUIRE(a.index.chips.size() == b.index.chips.size());
  for (std::size_t i = 0; i < a.index.chips.size(); ++i) {
    const ChipRecord& ra = a.index.chips[i];
    CHECK(slurp(a.dir / ra.image) == slurp(b.dir / ra.image));
    CHECK(slurp(a.dir / *ra.gt_mask) == slurp(b.dir / *ra.gt_mask));
  }
  CHECK(slurp(a.dir / "index.json") == slurp(b.dir / "index.json"));

  SceneConfig other = cfg;
  other.seed = 8;
  TempDataset c(other, "det_c");
  bool any_differ = false;
  for (std::size_t i = 0; i < a.index.chips.size() && !any_differ; ++i)
    any_differ = slurp(a.dir / a.index.chips[i].image) !=
                 slurp(c.dir / c.index.chips[i].image);
  CHECK(any_differ);
}

TEST_CASE("index covers the grid and every referenced file exists") {
  const SceneConfig cfg = small_cfg();
  TempDataset d(cfg, "index");
  CHECK(d.index.grid_rows == cfg.grid_rows);
  CHECK(d.index.grid_cols == cfg.grid_cols);
  CHECK(d.index.tile_size == cfg.tile_size);
  REQUIRE(d.index.chips.size() ==
          static_cast<std::size_t>(cfg.grid_rows * cfg.grid_cols));
  std::set<std::pair<int, int>> ids;
  for (const ChipRecord& chip : d.index.chips) {
    ids.insert({chip.tile_id.row, chip.tile_id.col});
    CHECK(fs::exists(d.dir / chip.image));
    REQUIRE(chip.gt_mask.has_value());
    CHECK(fs::exists(d.dir / *chip.gt_mask));
  }
  CHECK(ids.size() == d.index.chips.size());
}

TEST_CASE("positive count follows the density and keeps nearby negatives") {
  const SceneConfig cfg = small_cfg();
  TempDataset d(cfg, "layout");
  const int n_tiles = cfg.grid_rows * cfg.grid_cols;
  const int want =
      static_cast<int>(std::lround(cfg.object_density * n_tiles));

  std::vector<const ChipRecord*> positives;
  for (const ChipRecord& chip : d.index.chips)
    if (!chip.points.empty()) positives.push_back(&chip);
  CHECK(static_cast<int>(positives.size()) == want);

  for (const ChipRecord* pos : positives) {
    bool has_negative = false;
    for (const ChipRecord& other : d.index.chips) {
      const int dr = std::abs(other.tile_id.row - pos->tile_id.row);
      const int dc = std::abs(other.tile_id.col - pos->tile_id.col);
      if (std::max(dr, dc) <= 3 && other.points.empty()) {
        has_negative = true;
        break;
      }
    }
    CHECK(has_negative);
  }
}

TEST_CASE("masks are strictly binary and negatives are empty") {
  const SceneConfig cfg = small_cfg();
  TempDataset d(cfg, "masks");
  for (const ChipRecord& chip : d.index.chips) {
    const Raster mask = load_png(d.dir / *chip.gt_mask);
    CHECK(mask.channels == 1);
    CHECK(mask.height == cfg.tile_size);
    bool any = false;
    for (float v : mask.data) {
      REQUIRE((v == 0.0f || v == 1.0f));
      any = any || v == 1.0f;
    }
    CHECK(any == !chip.points.empty());
  }
}

TEST_CASE("unjittered points land inside their objects") {
  const SceneConfig cfg = small_cfg();  // jitter_sigma defaults to 0
  TempDataset d(cfg, "points");
  for (const ChipRecord& chip : d.index.chips) {
    if (chip.points.empty()) continue;
    const Raster mask = load_png(d.dir / *chip.gt_mask);
    for (const PointXY& pt : chip.points) {
      const int r = static_cast<int>(pt.y);
      const int c = static_cast<int>(pt.x);
      CHECK(mask.at(r, c) == 1.0f);
    }
  }
}

TEST_CASE("jitter moves points but keeps them in bounds") {
  SceneConfig cfg = small_cfg();
  TempDataset plain(cfg, "jit0");
  cfg.jitter_sigma = 2.0;
  TempDataset moved(cfg, "jit2");
  bool any_moved = false;
  for (std::size_t i = 0; i < plain.index.chips.size(); ++i) {
    const auto& p0 = plain.index.chips[i].points;
    const auto& p2 = moved.index.chips[i].points;
    REQUIRE(p0.size() == p2.size());
    for (std::size_t j = 0; j < p2.size(); ++j) {
      any_moved = any_moved || p0[j].x != p2[j].x || p0[j].y != p2[j].y;
      CHECK(p2[j].x >= 0.0);
      CHECK(p2[j].x <= cfg.tile_size - 0.5);
      CHECK(p2[j].y >= 0.0);
      CHECK(p2[j].y <= cfg.tile_size - 0.5);
    }
  }
  CHECK(any_moved);
}

TEST_CASE("stats recount objects that match the point annotations") {
  const SceneConfig cfg = small_cfg();
  TempDataset d(cfg, "stats");
  const DatasetStats stats = dataset_stats(d.index, d.dir);
  const int n_tiles = cfg.grid_rows * cfg.grid_cols;
  CHECK(stats.positives + stats.negatives == n_tiles);

  int total_points = 0;
  for (const ChipRecord& chip : d.index.chips)
    total_points += static_cast<int>(chip.points.size());
  CHECK(stats.objects == total_points);
  CHECK(stats.objects >= stats.positives * cfg.min_objects);
  CHECK(stats.objects <= stats.positives * cfg.max_objects);
  // half extents are 4..7 px, so areas sit in the tens of pixels
  CHECK(stats.mean_object_area > 25.0);
  CHECK(stats.mean_object_area < 200.0);
}

TEST_CASE("rounded rectangles generate too") {
  SceneConfig cfg = small_cfg();
  cfg.kind = ObjectKind::rounded_rect;
  TempDataset d(cfg, "rect");
  const DatasetStats stats = dataset_stats(d.index, d.dir);
  CHECK(stats.objects >= stats.positives);
}

TEST_CASE("tile tint spreads background means; zero tint keeps them flat") {
  auto spread = [](const TempDataset& d) {
    double lo = 1.0, hi = 0.0;
    for (const ChipRecord& chip : d.index.chips) {
      if (!chip.points.empty()) continue;
      const Raster img = load_png(d.dir / chip.image);
      double mean = 0.0;
      for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) mean += img.at(r, c, 0);
      mean /= img.height * img.width;
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
    return hi - lo;
  };
  SceneConfig cfg = small_cfg();
  cfg.tile_tint = 0.0;
  TempDataset flat(cfg, "tint0");
  cfg.tile_tint = 0.15;
  TempDataset tinted(cfg, "tint15");
  CHECK(spread(flat) < 0.04);
  CHECK(spread(tinted) > 0.05);
}

TEST_CASE("invalid configs are rejected") {
  auto reject = [](auto mutate) {
    SceneConfig cfg = small_cfg();
    mutate(cfg);
    CHECK_THROWS_AS(validate(cfg), ConfigError);
  };
  reject([](SceneConfig& c) { c.grid_rows = 0; });
  reject([](SceneConfig& c) { c.grid_cols = -1; });
  reject([](SceneConfig& c) { c.tile_size = 0; });
  reject([](SceneConfig& c) { c.tile_size = 30; });  // not a multiple of 8
  reject([](SceneConfig& c) { c.object_density = 1.0; });
  reject([](SceneConfig& c) { c.object_density = -0.1; });
  reject([](SceneConfig& c) { c.min_objects = 0; });
  reject([](SceneConfig& c) { c.max_objects = 0; });
  reject([](SceneConfig& c) { c.min_objects = 3, c.max_objects = 2; });
  reject([](SceneConfig& c) { c.max_objects = 4; });
  reject([](SceneConfig& c) { c.bg_corr_len = -1.0; });
  reject([](SceneConfig& c) { c.color_separation = 0.0; });
  reject([](SceneConfig& c) { c.color_separation = 0.45; });
  reject([](SceneConfig& c) { c.tile_tint = -0.01; });
  reject([](SceneConfig& c) { c.tile_tint = 0.31; });
  reject([](SceneConfig& c) { c.jitter_sigma = -1.0; });
  CHECK_NOTHROW(validate(small_cfg()));
}

TEST_CASE("an unsatisfiable layout fails with advice, not silently") {
  SceneConfig cfg = small_cfg();
  cfg.grid_rows = 2;
  cfg.grid_cols = 2;
  cfg.object_density = 0.9;  // rounds to all four tiles positive
  const fs::path dir = fs::temp_directory_path() /
                       ("pointseg_synth_full_" + std::to_string(std::rand()));
  CHECK_THROWS_AS(generate_dataset(cfg, dir), ConfigError);
  std::error_code ec;
  fs::remove_all(dir, ec);
}

}  // TEST_SUITE
