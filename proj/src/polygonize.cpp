#include "pointseg/polygonize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <utility>

#include <json.hpp>

#include "pointseg/errors.hpp"

namespace pointseg {
namespace {

struct IVec {
  int x = 0, y = 0;
  bool operator==(const IVec&) const = default;
  bool operator<(const IVec& o) const {
    return x != o.x ? x < o.x : y < o.y;
  }
};

struct Edge {
  IVec from, to;
  bool used = false;
};

long long shoelace2(const std::vector<IVec>& ring) {
  long long acc = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i)
    acc += static_cast<long long>(ring[i].x) * ring[i + 1].y -
           static_cast<long long>(ring[i + 1].x) * ring[i].y;
  return acc;
}

// Labels 4-connected foreground components; background is -1.
std::vector<int> label_components(const Raster& mask, int& n_components) {
  const int h = mask.height, w = mask.width;
  std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
  n_components = 0;
  std::deque<IVec> queue;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (mask.at(r, c) < 0.5f || label[r * w + c] != -1) continue;
      const int id = n_components++;
      label[r * w + c] = id;
      queue.push_back({c, r});
      while (!queue.empty()) {
        const IVec p = queue.front();
        queue.pop_front();
        const int dr[4] = {-1, 1, 0, 0};
        const int dc[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const int nr = p.y + dr[d], nc = p.x + dc[d];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          if (mask.at(nr, nc) < 0.5f || label[nr * w + nc] != -1) continue;
          label[nr * w + nc] = id;
          queue.push_back({nc, nr});
        }
      }
    }
  }
  return label;
}

// Walks the directed boundary edges of one component into closed rings.
// Edges keep the foreground on their left; at a pinch vertex (two
// outgoing edges) the turn consistent with hugging the same pixel corner
// is dir -> (dir.y, -dir.x).
std::vector<std::vector<IVec>> trace_rings(std::vector<Edge>& edges) {
  std::map<IVec, std::vector<int>> out_edges;
  for (std::size_t i = 0; i < edges.size(); ++i)
    out_edges[edges[i].from].push_back(static_cast<int>(i));

  std::vector<std::vector<IVec>> rings;
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (edges[start].used) continue;
    std::vector<IVec> ring;
    int current = static_cast<int>(start);
    while (!edges[current].used) {
      edges[current].used = true;
      const Edge& e = edges[current];
      ring.push_back(e.from);
      const IVec dir{e.to.x - e.from.x, e.to.y - e.from.y};
      const auto& candidates = out_edges.at(e.to);
      int next = -1;
      // Preference: hug the corner, go straight, then turn away.
      const IVec prefs[3] = {{dir.y, -dir.x}, {dir.x, dir.y}, {-dir.y, dir.x}};
      for (const IVec& want : prefs) {
        for (int idx : candidates) {
          if (edges[idx].used) continue;
          const IVec d2{edges[idx].to.x - edges[idx].from.x,
                        edges[idx].to.y - edges[idx].from.y};
          if (d2 == want) {
            next = idx;
            break;
          }
        }
        if (next != -1) break;
      }
      if (next == -1) break;  // ring closed: every edge from e.to is used
      current = next;
    }
    ring.push_back(ring.front());
    rings.push_back(std::move(ring));
  }
  return rings;
}

// Removes midpoints of straight runs; assumes a closed ring.
std::vector<IVec> compress_collinear(const std::vector<IVec>& ring) {
  const std::size_t n = ring.size() - 1;  // distinct vertices
  std::vector<IVec> out;
  for (std::size_t i = 0; i < n; ++i) {
    const IVec& prev = ring[(i + n - 1) % n];
    const IVec& cur = ring[i];
    const IVec& next = ring[(i + 1) % n];
    const IVec d1{cur.x - prev.x, cur.y - prev.y};
    const IVec d2{next.x - cur.x, next.y - cur.y};
    if (d1.x * d2.y - d1.y * d2.x != 0 || d1.x * d2.x + d1.y * d2.y < 0)
      out.push_back(cur);
  }
  out.push_back(out.front());
  return out;
}

// Rotates so the lexicographically smallest vertex comes first.
std::vector<IVec> canonical_start(const std::vector<IVec>& ring) {
  const std::size_t n = ring.size() - 1;
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (ring[i] < ring[best]) best = i;
  std::vector<IVec> out;
  out.reserve(ring.size());
  for (std::size_t i = 0; i < n; ++i) out.push_back(ring[(best + i) % n]);
  out.push_back(out.front());
  return out;
}

Ring to_ring(const std::vector<IVec>& ivec) {
  Ring ring;
  ring.pts.reserve(ivec.size());
  for (const IVec& p : ivec)
    ring.pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
  return ring;
}

std::vector<IVec> reversed(std::vector<IVec> ring) {
  std::reverse(ring.begin(), ring.end());
  return ring;
}

double segment_distance(const Vertex& p, const Vertex& a, const Vertex& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = p[0] - a[0], wy = p[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0.0) return std::hypot(wx, wy);
  const double t = std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0);
  return std::hypot(wx - t * vx, wy - t * vy);
}

void douglas_peucker(const std::vector<Vertex>& pts, std::size_t lo,
                     std::size_t hi, double tol, std::vector<bool>& keep) {
  if (hi <= lo + 1) return;
  double best = -1.0;
  std::size_t split = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = segment_distance(pts[i], pts[lo], pts[hi]);
    if (d > best) {
      best = d;
      split = i;
    }
  }
  if (best > tol) {
    keep[split] = true;
    douglas_peucker(pts, lo, split, tol, keep);
    douglas_peucker(pts, split, hi, tol, keep);
  }
}

// Simplifies one closed ring; empty result marks degeneration.
std::vector<Vertex> simplify_ring(const std::vector<Vertex>& closed,
                                  double tol) {
  std::vector<Vertex> open(closed.begin(), closed.end() - 1);
  if (open.size() < 3) return {};

  // Anchor the start vertex and the vertex farthest from it, then run
  // Douglas-Peucker over the two chains between the anchors.
  std::size_t far = 1;
  double best = -1.0;
  for (std::size_t i = 1; i < open.size(); ++i) {
    const double d = std::hypot(open[i][0] - open[0][0],
                                open[i][1] - open[0][1]);
    if (d > best) {
      best = d;
      far = i;
    }
  }
  std::vector<bool> keep(open.size(), false);
  keep[0] = keep[far] = true;
  douglas_peucker(open, 0, far, tol, keep);
  std::vector<Vertex> wrapped(open.begin() + far, open.end());
  wrapped.push_back(open[0]);
  std::vector<bool> keep2(wrapped.size(), false);
  keep2.front() = keep2.back() = true;
  douglas_peucker(wrapped, 0, wrapped.size() - 1, tol, keep2);
  for (std::size_t i = 0; i < wrapped.size() - 1; ++i)
    if (keep2[i]) keep[far + i] = true;

  std::vector<Vertex> out;
  for (std::size_t i = 0; i < open.size(); ++i)
    if (keep[i]) out.push_back(open[i]);
  // Distinct-vertex count decides degeneracy.
  std::vector<Vertex> distinct = out;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  if (distinct.size() < 3) return {};
  out.push_back(out.front());
  return out;
}

}  // namespace

double Ring::area() const {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    acc += pts[i][0] * pts[i + 1][1] - pts[i + 1][0] * pts[i][1];
  return acc / 2.0;
}

double Polygon::area() const {
  double acc = exterior.area();
  for (const Ring& hole : holes) acc += hole.area();
  return acc;
}

std::vector<Polygon> mask_to_polygons(const Raster& mask) {
  if (mask.channels != 1)
    throw ContractError("mask_to_polygons: mask must be single-channel");
  const int h = mask.height, w = mask.width;
  int n_components = 0;
  const std::vector<int> label = label_components(mask, n_components);
  if (n_components == 0) return {};

  // Directed boundary edges per component, foreground on the left.
  std::vector<std::vector<Edge>> edges(n_components);
  auto lab = [&](int r, int c) {
    if (r < 0 || r >= h || c < 0 || c >= w) return -1;
    return label[r * w + c];
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int id = label[r * w + c];
      if (id < 0) continue;
      if (lab(r - 1, c) != id)
        edges[id].push_back({{c + 1, r}, {c, r}});
      if (lab(r + 1, c) != id)
        edges[id].push_back({{c, r + 1}, {c + 1, r + 1}});
      if (lab(r, c - 1) != id)
        edges[id].push_back({{c, r}, {c, r + 1}});
      if (lab(r, c + 1) != id)
        edges[id].push_back({{c + 1, r + 1}, {c + 1, r}});
    }
  }

  std::vector<Polygon> polygons(n_components);
  for (int id = 0; id < n_components; ++id) {
    bool have_exterior = false;
    for (std::vector<IVec>& ring : trace_rings(edges[id])) {
      std::vector<IVec> clean = canonical_start(compress_collinear(ring));
      const long long a2 = shoelace2(clean);
      // Tracing yields the outer boundary clockwise (negative shoelace)
      // and holes counterclockwise; normalize to exterior-positive,
      // holes-negative.
      if (a2 < 0) {
        polygons[id].exterior = to_ring(canonical_start(reversed(clean)));
        have_exterior = true;
      } else {
        polygons[id].holes.push_back(to_ring(canonical_start(reversed(clean))));
      }
    }
    if (!have_exterior)
      throw Error("mask_to_polygons: component without an outer boundary");
  }
  return polygons;
}

std::optional<Polygon> simplify(const Polygon& poly, double tol) {
  if (tol < 0.0) throw ContractError("simplify: tol must be >= 0");
  if (tol == 0.0) return poly;
  Polygon out;
  std::vector<Vertex> ext = simplify_ring(poly.exterior.pts, tol);
  if (ext.empty()) return std::nullopt;
  out.exterior.pts = std::move(ext);
  for (const Ring& hole : poly.holes) {
    std::vector<Vertex> ring = simplify_ring(hole.pts, tol);
    if (!ring.empty()) out.holes.push_back(Ring{std::move(ring)});
  }
  return out;
}

std::string to_geojson(const std::vector<TileFeature>& features) {
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = nlohmann::ordered_json::array();
  for (const TileFeature& tf : features) {
    for (const Polygon& poly : tf.polygons) {
      nlohmann::ordered_json feature;
      feature["type"] = "Feature";
      feature["properties"]["tile_id"] = {tf.tile_id.row, tf.tile_id.col};
      feature["geometry"]["type"] = "Polygon";
      nlohmann::ordered_json rings = nlohmann::ordered_json::array();
      auto push_ring = [&rings](const Ring& ring) {
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        for (const Vertex& v : ring.pts) pts.push_back({v[0], v[1]});
        rings.push_back(std::move(pts));
      };
      push_ring(poly.exterior);
      for (const Ring& hole : poly.holes) push_ring(hole);
      feature["geometry"]["coordinates"] = std::move(rings);
      doc["features"].push_back(std::move(feature));
    }
  }
  return doc.dump();
}

void write_geojson(const std::vector<TileFeature>& features,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_geojson(features) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace pointseg
