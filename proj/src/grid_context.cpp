#include "pointseg/grid_context.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <json.hpp>

#include "pointseg/errors.hpp"

namespace pointseg {

TileGrid classify_tiles(const DatasetIndex& index) {
  TileGrid grid;
  grid.rows = index.grid_rows;
  grid.cols = index.grid_cols;
  for (const ChipRecord& chip : index.chips) {
    if (chip.is_positive())
      grid.positives.insert(chip.tile_id);
    else
      grid.negatives.insert(chip.tile_id);
  }
  return grid;
}

std::vector<TileId> chebyshev_ring(TileId origin, int radius, int rows,
                                   int cols) {
  std::vector<TileId> ring;
  if (radius == 0) {
    if (origin.row >= 0 && origin.row < rows && origin.col >= 0 &&
        origin.col < cols)
      ring.push_back(origin);
    return ring;
  }
  for (int r = origin.row - radius; r <= origin.row + radius; ++r) {
    if (r < 0 || r >= rows) continue;
    const bool full_row = (r == origin.row - radius || r == origin.row + radius);
    if (full_row) {
      for (int c = origin.col - radius; c <= origin.col + radius; ++c)
        if (c >= 0 && c < cols) ring.push_back({r, c});
    } else {
      if (origin.col - radius >= 0) ring.push_back({r, origin.col - radius});
      if (origin.col + radius < cols) ring.push_back({r, origin.col + radius});
    }
  }
  return ring;
}

std::vector<TileId> find_contexts(const TileGrid& grid, TileId origin, int k) {
  if (!grid.is_positive(origin))
    throw ContractError("find_contexts: origin tile [" +
                        std::to_string(origin.row) + ", " +
                        std::to_string(origin.col) + "] is not positive");
  if (k < 1) throw ContractError("find_contexts: k must be >= 1");

  const int max_radius =
      std::max(std::max(origin.row, grid.rows - 1 - origin.row),
               std::max(origin.col, grid.cols - 1 - origin.col));
  std::vector<TileId> found;
  for (int radius = 1; radius <= max_radius; ++radius) {
    for (TileId id : chebyshev_ring(origin, radius, grid.rows, grid.cols)) {
      if (grid.is_negative(id)) found.push_back(id);
      if (static_cast<int>(found.size()) == k) return found;
    }
  }
  return found;
}

ContextMap build_context_map(const TileGrid& grid, int k) {
  ContextMap map;
  map.k = k;
  if (!grid.positives.empty() && grid.negatives.empty())
    throw ConfigError(
        "context map: grid has positive tiles but no negative tile to serve "
        "as context");
  for (TileId origin : grid.positives)
    map.entries[origin] = find_contexts(grid, origin, k);
  return map;
}

TileId sample_context(const ContextMap& map, TileId tile_id, Rng& rng) {
  auto it = map.entries.find(tile_id);
  if (it == map.entries.end())
    throw ContractError("sample_context: tile [" +
                        std::to_string(tile_id.row) + ", " +
                        std::to_string(tile_id.col) + "] has no entry");
  const std::vector<TileId>& list = it->second;
  if (list.empty())
    throw ContractError("sample_context: tile [" +
                        std::to_string(tile_id.row) + ", " +
                        std::to_string(tile_id.col) + "] has no contexts");
  return list[rng.uniform_int(static_cast<int>(list.size()))];
}

void save_context_map(const ContextMap& map,
                      const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["k"] = map.k;
  doc["entries"] = nlohmann::ordered_json::object();
  for (const auto& [id, list] : map.entries) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (TileId ctx : list) arr.push_back({ctx.row, ctx.col});
    doc["entries"][std::to_string(id.row) + "_" + std::to_string(id.col)] =
        std::move(arr);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

ContextMap load_context_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("context map: " + path.string() + ": " + e.what());
  }

  if (!doc.is_object() || !doc.contains("k") ||
      !doc.at("k").is_number_integer())
    throw FormatError("context map: field 'k' missing or not an integer");
  if (!doc.contains("entries") || !doc.at("entries").is_object())
    throw FormatError("context map: field 'entries' missing or not an object");

  ContextMap map;
  map.k = doc.at("k").get<int>();
  for (const auto& [key, value] : doc.at("entries").items()) {
    const auto sep = key.find('_');
    TileId id;
    if (sep == std::string::npos ||
        std::from_chars(key.data(), key.data() + sep, id.row).ec !=
            std::errc{} ||
        std::from_chars(key.data() + sep + 1, key.data() + key.size(),
                        id.col).ec != std::errc{})
      throw FormatError("context map: entry key '" + key +
                        "' is not of the form 'row_col'");
    if (!value.is_array())
      throw FormatError("context map: entry '" + key + "' must be an array");
    std::vector<TileId> list;
    for (const auto& item : value) {
      if (!item.is_array() || item.size() != 2 ||
          !item[0].is_number_integer() || !item[1].is_number_integer())
        throw FormatError("context map: entry '" + key +
                          "' holds a non-[row, col] element");
      list.push_back({item[0].get<int>(), item[1].get<int>()});
    }
    map.entries[id] = std::move(list);
  }
  return map;
}

}  // namespace pointseg
