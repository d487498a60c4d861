#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pointseg {

// Position of a chip in the tile grid.
struct TileId {
  int row = 0;
  int col = 0;
  auto operator<=>(const TileId&) const = default;
};

// Point annotation in chip-local pixel coordinates (x right, y down).
struct PointXY {
  double x = 0.0;
  double y = 0.0;
};

// One tile of the dataset. Paths are relative to the index file's
// directory. gt_mask is absent for chips without reference masks.
struct ChipRecord {
  TileId tile_id;
  std::string image;
  std::vector<PointXY> points;
  std::optional<std::string> gt_mask;

  bool is_positive() const { return !points.empty(); }
};

// Parsed dataset index. chips is kept in file order; tile ids are
// validated to be unique and inside the grid.
struct DatasetIndex {
  int tile_size = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<ChipRecord> chips;

  const ChipRecord* find(TileId id) const;
};

// Reads and validates an index JSON document. Throws IoError if the file
// cannot be read and FormatError naming the offending field for schema
// violations (wrong types, out-of-range ids, duplicate tile ids,
// out-of-bounds points).
DatasetIndex load_index(const std::filesystem::path& path);

// Serializes the index; inverse of load_index.
void save_index(const DatasetIndex& index, const std::filesystem::path& path);

}  // namespace pointseg
