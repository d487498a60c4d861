#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "pointseg/dataset.hpp"
#include "pointseg/rng.hpp"

namespace pointseg {

// Positive/negative classification of the tile grid. A tile is positive
// iff its chip has at least one point; a tile is negative iff its chip
// exists and has none. Grid positions without a chip are unusable as
// context (there is no imagery to blend).
struct TileGrid {
  int rows = 0;
  int cols = 0;
  std::set<TileId> positives;
  std::set<TileId> negatives;

  bool in_bounds(TileId id) const {
    return id.row >= 0 && id.row < rows && id.col >= 0 && id.col < cols;
  }
  bool is_positive(TileId id) const { return positives.count(id) > 0; }
  bool is_negative(TileId id) const { return negatives.count(id) > 0; }
};

TileGrid classify_tiles(const DatasetIndex& index);

// Tiles at exact Chebyshev distance radius from origin, clipped to the
// grid, in row-major order. radius 0 yields just the origin.
std::vector<TileId> chebyshev_ring(TileId origin, int radius, int rows,
                                   int cols);

// Walks rings r = 1, 2, ... outward from origin, collecting negative
// tiles in row-major order within each ring, until k are found or the
// grid is exhausted. Returns the first min(k, found) ids. Throws
// ContractError if origin is not positive or k < 1.
std::vector<TileId> find_contexts(const TileGrid& grid, TileId origin, int k);

// Positive tile id -> its nearest negative context tiles.
struct ContextMap {
  int k = 0;
  std::map<TileId, std::vector<TileId>> entries;
};

// One find_contexts entry per positive tile. Throws ConfigError when a
// positive tile exists but the grid has no negative tile at all.
ContextMap build_context_map(const TileGrid& grid, int k);

// Uniform draw from the entry's context list. Throws ContractError if
// tile_id has no entry.
TileId sample_context(const ContextMap& map, TileId tile_id, Rng& rng);

void save_context_map(const ContextMap& map,
                      const std::filesystem::path& path);
ContextMap load_context_map(const std::filesystem::path& path);

}  // namespace pointseg
