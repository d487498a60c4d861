#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pointseg/dataset.hpp"
#include "pointseg/raster.hpp"

namespace pointseg {

// Vertex on the pixel-corner lattice, (x, y) with y growing downward.
using Vertex = std::array<double, 2>;

// Closed vertex ring: first vertex repeated last.
struct Ring {
  std::vector<Vertex> pts;

  // Shoelace area, signed: positive for counterclockwise winding.
  double area() const;
};

struct Polygon {
  Ring exterior;            // counterclockwise (positive area)
  std::vector<Ring> holes;  // clockwise (negative area)

  double area() const;  // exterior plus (negative) hole areas
};

// One polygon per 4-connected foreground component, traced along pixel
// boundaries. Foreground is any value >= 0.5. The summed polygon area
// equals the foreground pixel count exactly.
std::vector<Polygon> mask_to_polygons(const Raster& mask);

// Douglas-Peucker on every ring; tol = 0 is the identity. Returns
// nullopt when the exterior collapses below 3 distinct vertices;
// collapsed holes are dropped silently.
std::optional<Polygon> simplify(const Polygon& poly, double tol);

struct TileFeature {
  TileId tile_id;
  std::vector<Polygon> polygons;
};

// RFC 7946 FeatureCollection, one feature per polygon with its tile_id
// as a property. Coordinates are chip-local pixel positions.
std::string to_geojson(const std::vector<TileFeature>& features);
void write_geojson(const std::vector<TileFeature>& features,
                   const std::filesystem::path& path);

}  // namespace pointseg
