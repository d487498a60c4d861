#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pointseg/compositor.hpp"
#include "pointseg/grid_context.hpp"
#include "pointseg/metrics.hpp"
#include "pointseg/polygonize.hpp"
#include "pointseg/pseudolabel.hpp"

namespace py = pybind11;
using namespace pointseg;

namespace {

Raster raster_from(py::array_t<float, py::array::c_style | py::array::forcecast>
                       arr) {
  if (arr.ndim() == 2) {
    Raster r(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)), 1);
    std::copy(arr.data(), arr.data() + r.size(), r.data.begin());
    return r;
  }
  if (arr.ndim() == 3) {
    Raster r(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
             static_cast<int>(arr.shape(2)));
    std::copy(arr.data(), arr.data() + r.size(), r.data.begin());
    return r;
  }
  throw py::value_error("expected a (h, w) or (h, w, c) float array");
}

py::array_t<float> array_from(const Raster& r) {
  if (r.channels == 1) {
    py::array_t<float> out({r.height, r.width});
    std::copy(r.data.begin(), r.data.end(), out.mutable_data());
    return out;
  }
  py::array_t<float> out({r.height, r.width, r.channels});
  std::copy(r.data.begin(), r.data.end(), out.mutable_data());
  return out;
}

std::vector<PointXY> points_from(
    const std::vector<std::pair<double, double>>& pts) {
  std::vector<PointXY> out;
  for (auto& [x, y] : pts) out.push_back({x, y});
  return out;
}

}  // namespace

PYBIND11_MODULE(_pointseg, m) {
  m.doc() = "point-supervised segmentation core";

  m.def(
      "pseudo_label",
      [](const std::vector<std::pair<double, double>>& points, int height,
         int width, double sigma, double csm, double gamma) {
        LabelConfig cfg;
        cfg.sigma = Cov2{sigma * sigma, 0.0, sigma * sigma};
        cfg.csm = csm;
        cfg.gamma = gamma;
        return array_from(
            make_pseudo_label(points_from(points), cfg, height, width));
      },
      py::arg("points"), py::arg("height"), py::arg("width"),
      py::arg("sigma") = 4.0, py::arg("csm") = 8000.0, py::arg("gamma") = 20.0,
      "Binary buffer mask from point labels via a thresholded Gaussian "
      "splat.");

  m.def(
      "superimpose",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> image,
         py::array_t<float, py::array::c_style | py::array::forcecast> context,
         py::array_t<float, py::array::c_style | py::array::forcecast> mask) {
        return array_from(superimpose(raster_from(image), raster_from(context),
                                      raster_from(mask)));
      },
      py::arg("image"), py::arg("context"), py::arg("mask"),
      "mask*image + (1-mask)*context, mask broadcast over channels.");

  m.def(
      "find_contexts",
      [](int rows, int cols,
         const std::vector<std::pair<int, int>>& positives,
         const std::vector<std::pair<int, int>>& negatives,
         std::pair<int, int> origin, int k) {
        TileGrid grid;
        grid.rows = rows;
        grid.cols = cols;
        for (auto& [r, c] : positives) grid.positives.insert({r, c});
        for (auto& [r, c] : negatives) grid.negatives.insert({r, c});
        std::vector<std::pair<int, int>> out;
        for (TileId id :
             find_contexts(grid, {origin.first, origin.second}, k))
          out.push_back({id.row, id.col});
        return out;
      },
      py::arg("rows"), py::arg("cols"), py::arg("positives"),
      py::arg("negatives"), py::arg("origin"), py::arg("k") = 8,
      "Nearest negative tiles in expanding Chebyshev rings, row-major "
      "within a ring.");

  m.def(
      "mask_metrics",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> pred,
         py::array_t<float, py::array::c_style | py::array::forcecast> gt,
         double threshold) {
        const MetricsReport r = metrics_from(confusion(
            binarize(raster_from(pred), threshold), raster_from(gt)));
        py::dict out;
        out["dice"] = r.dice;
        out["jaccard"] = r.jaccard;
        out["precision"] = r.precision;
        out["recall"] = r.recall;
        return out;
      },
      py::arg("pred"), py::arg("gt"), py::arg("threshold") = 0.5,
      "Dice/Jaccard/precision/recall between a soft prediction and a "
      "binary mask.");

  m.def(
      "polygons",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> mask) {
        py::list out;
        for (const Polygon& poly : mask_to_polygons(raster_from(mask))) {
          py::dict d;
          d["exterior"] = poly.exterior.pts;
          py::list holes;
          for (const Ring& h : poly.holes) holes.append(h.pts);
          d["holes"] = holes;
          d["area"] = poly.area();
          out.append(d);
        }
        return out;
      },
      py::arg("mask"),
      "Boundary polygons of the foreground (value >= 0.5), one per "
      "4-connected component.");

  m.def(
      "geojson",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> mask,
         std::pair<int, int> tile_id, double threshold, double tol) {
        std::vector<Polygon> polys =
            mask_to_polygons(binarize(raster_from(mask), threshold));
        if (tol > 0.0) {
          std::vector<Polygon> kept;
          for (const Polygon& p : polys)
            if (auto s = simplify(p, tol)) kept.push_back(*s);
          polys = std::move(kept);
        }
        std::vector<TileFeature> features;
        if (!polys.empty())
          features.push_back(
              {TileId{tile_id.first, tile_id.second}, std::move(polys)});
        return to_geojson(features);
      },
      py::arg("mask"), py::arg("tile_id") = std::make_pair(0, 0),
      py::arg("threshold") = 0.5, py::arg("tol") = 0.0,
      "GeoJSON FeatureCollection string for one mask.");
}
