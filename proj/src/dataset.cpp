#include "pointseg/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <utility>

#include <json.hpp>

#include "pointseg/errors.hpp"

namespace pointseg {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw FormatError("index: field '" + field + "' " + what);
}

int require_int(const json& j, const std::string& field) {
  if (!j.contains(field)) fail(field, "is missing");
  const json& v = j.at(field);
  if (!v.is_number_integer()) fail(field, "must be an integer");
  return v.get<int>();
}

double require_number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "must be a number");
  return v.get<double>();
}

}  // namespace

const ChipRecord* DatasetIndex::find(TileId id) const {
  for (const ChipRecord& chip : chips)
    if (chip.tile_id == id) return &chip;
  return nullptr;
}

DatasetIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("index: " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw FormatError("index: document must be an object");

  DatasetIndex index;
  index.tile_size = require_int(doc, "tile_size");
  if (index.tile_size <= 0) fail("tile_size", "must be positive");
  index.grid_rows = require_int(doc, "grid_rows");
  if (index.grid_rows <= 0) fail("grid_rows", "must be positive");
  index.grid_cols = require_int(doc, "grid_cols");
  if (index.grid_cols <= 0) fail("grid_cols", "must be positive");

  if (!doc.contains("chips")) fail("chips", "is missing");
  const json& chips = doc.at("chips");
  if (!chips.is_array()) fail("chips", "must be an array");

  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < chips.size(); ++i) {
    const std::string base = "chips[" + std::to_string(i) + "]";
    const json& c = chips[i];
    if (!c.is_object()) fail(base, "must be an object");

    ChipRecord record;

    if (!c.contains("tile_id")) fail(base + ".tile_id", "is missing");
    const json& tid = c.at("tile_id");
    if (!tid.is_array() || tid.size() != 2 || !tid[0].is_number_integer() ||
        !tid[1].is_number_integer())
      fail(base + ".tile_id", "must be a [row, col] integer pair");
    record.tile_id = {tid[0].get<int>(), tid[1].get<int>()};
    if (record.tile_id.row < 0 || record.tile_id.row >= index.grid_rows ||
        record.tile_id.col < 0 || record.tile_id.col >= index.grid_cols)
      fail(base + ".tile_id", "is outside the grid");
    if (!seen.insert({record.tile_id.row, record.tile_id.col}).second)
      fail(base + ".tile_id",
           "duplicates [" + std::to_string(record.tile_id.row) + ", " +
               std::to_string(record.tile_id.col) + "]");

    if (!c.contains("image")) fail(base + ".image", "is missing");
    if (!c.at("image").is_string() || c.at("image").get<std::string>().empty())
      fail(base + ".image", "must be a non-empty string");
    record.image = c.at("image").get<std::string>();

    if (!c.contains("points")) fail(base + ".points", "is missing");
    const json& pts = c.at("points");
    if (!pts.is_array()) fail(base + ".points", "must be an array");
    for (std::size_t p = 0; p < pts.size(); ++p) {
      const std::string pf = base + ".points[" + std::to_string(p) + "]";
      const json& pj = pts[p];
      if (!pj.is_array() || pj.size() != 2) fail(pf, "must be an [x, y] pair");
      PointXY point{require_number(pj[0], pf), require_number(pj[1], pf)};
      if (point.x < 0 || point.x >= index.tile_size || point.y < 0 ||
          point.y >= index.tile_size)
        fail(pf, "is outside the chip");
      record.points.push_back(point);
    }

    if (c.contains("gt_mask") && !c.at("gt_mask").is_null()) {
      if (!c.at("gt_mask").is_string())
        fail(base + ".gt_mask", "must be a string or null");
      record.gt_mask = c.at("gt_mask").get<std::string>();
    }

    index.chips.push_back(std::move(record));
  }
  std::sort(index.chips.begin(), index.chips.end(),
            [](const ChipRecord& a, const ChipRecord& b) {
              return a.tile_id < b.tile_id;
            });
  return index;
}

void save_index(const DatasetIndex& index, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["tile_size"] = index.tile_size;
  doc["grid_rows"] = index.grid_rows;
  doc["grid_cols"] = index.grid_cols;
  doc["chips"] = nlohmann::ordered_json::array();
  for (const ChipRecord& chip : index.chips) {
    nlohmann::ordered_json c;
    c["tile_id"] = {chip.tile_id.row, chip.tile_id.col};
    c["image"] = chip.image;
    c["points"] = nlohmann::ordered_json::array();
    for (const PointXY& p : chip.points) c["points"].push_back({p.x, p.y});
    if (chip.gt_mask)
      c["gt_mask"] = *chip.gt_mask;
    else
      c["gt_mask"] = nullptr;
    doc["chips"].push_back(std::move(c));
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace pointseg
