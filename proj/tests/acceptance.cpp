// Acceptance harness: one pass/fail line per criterion, exit 0 only when
// every criterion holds. Criteria 8-10 share one set of end-to-end runs
// (3 seeds x 4 training arms + a determinism rerun) executed up front;
// progress for those goes to stderr, verdict lines to stdout.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pointseg/compositor.hpp"
#include "pointseg/config.hpp"
#include "pointseg/errors.hpp"
#include "pointseg/grid_context.hpp"
#include "pointseg/losses.hpp"
#include "pointseg/metrics.hpp"
#include "pointseg/nn/nets.hpp"
#include "pointseg/nn/ops.hpp"
#include "pointseg/polygonize.hpp"
#include "pointseg/pseudolabel.hpp"
#include "pointseg/raster.hpp"
#include "pointseg/rng.hpp"
#include "pointseg/synthgen.hpp"
#include "pointseg/trainer.hpp"

namespace fs = std::filesystem;
using namespace pointseg;

namespace {

// ---- pinned tolerances -------------------------------------------------
constexpr double kFdEps = 1e-5;       // finite-difference step (float64)
constexpr double kFdTol = 1e-4;       // |fd - grad| <= tol * max(1,|fd|,|grad|)
constexpr float kSumTol = 1e-6f;      // compositor sum identity, float32
constexpr double kRadiusTol = 1.0;    // pseudo-label disk radius, px
constexpr double kIdentityTol = 1e-12;  // metric identities
constexpr double kReportedJaccardTol = 0.02;  // reported rows, jaccard
constexpr double kReportedDiceTol = 0.04;     // reported rows, dice from P,R
constexpr double kDiceFloor = 0.60;   // criterion 8 quality gate
constexpr double kMinutesCap = 30.0;  // criterion 8 per-seed budget
constexpr int kSeedsNeeded = 2;       // criterion 9: trends on >= 2 of 3

const std::vector<uint64_t> kSeeds = {1, 2, 3};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

bool fd_ok(double fd, double grad) {
  return std::abs(fd - grad) <=
         kFdTol * std::max({1.0, std::abs(fd), std::abs(grad)});
}

void fill_uniform(std::vector<double>& v, Rng& rng, double lo, double hi) {
  for (double& x : v) x = rng.uniform(lo, hi);
}

// ---- criterion 1: gradients --------------------------------------------

// Checks a few coordinates of an analytic gradient against central
// differences of a scalar loss recomputed from scratch.
bool fd_sweep(std::vector<double>& vals, const std::vector<double>& grads,
              Rng& rng, int samples, const std::function<double()>& loss,
              std::string& why, const std::string& tag) {
  for (int s = 0; s < samples; ++s) {
    const int idx = rng.uniform_int(static_cast<int>(vals.size()));
    const double saved = vals[idx];
    vals[idx] = saved + kFdEps;
    const double up = loss();
    vals[idx] = saved - kFdEps;
    const double down = loss();
    vals[idx] = saved;
    const double fd = (up - down) / (2.0 * kFdEps);
    if (!fd_ok(fd, grads[idx])) {
      std::ostringstream os;
      os << tag << "[" << idx << "] fd=" << fd << " grad=" << grads[idx];
      why = os.str();
      return false;
    }
  }
  return true;
}

bool check_conv(Rng& rng, int ic, int oc, int h, int w, int k, int stride,
                nn::Pad pad, std::string& why) {
  nn::Tensor<double> x({ic, h, w}), wt({oc, ic, k, k}), b({oc}), out;
  fill_uniform(x.v, rng, -1.0, 1.0);
  fill_uniform(wt.v, rng, -0.5, 0.5);
  fill_uniform(b.v, rng, -0.5, 0.5);
  nn::conv2d_forward(x, wt, b, stride, pad, out);
  std::vector<double> proj(out.size());
  fill_uniform(proj, rng, -1.0, 1.0);
  auto loss = [&]() {
    nn::Tensor<double> o;
    nn::conv2d_forward(x, wt, b, stride, pad, o);
    double acc = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) acc += proj[i] * o.v[i];
    return acc;
  };
  std::copy(proj.begin(), proj.end(), out.g.begin());
  x.zero_grad();
  wt.zero_grad();
  b.zero_grad();
  nn::conv2d_backward(x, wt, b, out, stride, pad, true);
  return fd_sweep(x.v, x.g, rng, 4, loss, why, "conv.x") &&
         fd_sweep(wt.v, wt.g, rng, 4, loss, why, "conv.w") &&
         fd_sweep(b.v, b.g, rng, 2, loss, why, "conv.b");
}

bool criterion_gradients(std::string& why) {
  Rng rng(2024);

  if (!check_conv(rng, 2, 3, 6, 6, 3, 1, nn::Pad::same, why)) return false;
  if (!check_conv(rng, 1, 2, 8, 8, 3, 2, nn::Pad::same, why)) return false;
  if (!check_conv(rng, 2, 2, 5, 5, 3, 1, nn::Pad::valid, why)) return false;

  // Pointwise and shape ops under a random linear projection.
  {
    nn::Tensor<double> x({3, 4, 4}), out;
    fill_uniform(x.v, rng, -1.0, 1.0);
    std::vector<double> proj(x.size());
    fill_uniform(proj, rng, -1.0, 1.0);
    auto loss = [&]() {
      nn::Tensor<double> o;
      nn::relu_forward(x, o);
      double acc = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) acc += proj[i] * o.v[i];
      return acc;
    };
    nn::relu_forward(x, out);
    std::copy(proj.begin(), proj.end(), out.g.begin());
    x.zero_grad();
    nn::relu_backward(x, out);
    if (!fd_sweep(x.v, x.g, rng, 6, loss, why, "relu.x")) return false;
  }
  {
    nn::Tensor<double> x({1, 6, 6}), out;
    fill_uniform(x.v, rng, -2.0, 2.0);
    std::vector<double> proj(x.size());
    fill_uniform(proj, rng, -1.0, 1.0);
    auto loss = [&]() {
      nn::Tensor<double> o;
      nn::logistic_forward(x, o);
      double acc = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) acc += proj[i] * o.v[i];
      return acc;
    };
    nn::logistic_forward(x, out);
    std::copy(proj.begin(), proj.end(), out.g.begin());
    x.zero_grad();
    nn::logistic_backward(x, out);
    if (!fd_sweep(x.v, x.g, rng, 6, loss, why, "logistic.x")) return false;
  }
  {
    nn::Tensor<double> x({2, 6, 6}), out;
    std::vector<int> argmax;
    fill_uniform(x.v, rng, -1.0, 1.0);
    std::vector<double> proj(2 * 3 * 3);
    fill_uniform(proj, rng, -1.0, 1.0);
    auto loss = [&]() {
      nn::Tensor<double> o;
      std::vector<int> am;
      nn::maxpool2_forward(x, o, am);
      double acc = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) acc += proj[i] * o.v[i];
      return acc;
    };
    nn::maxpool2_forward(x, out, argmax);
    std::copy(proj.begin(), proj.end(), out.g.begin());
    x.zero_grad();
    nn::maxpool2_backward(x, out, argmax);
    if (!fd_sweep(x.v, x.g, rng, 6, loss, why, "maxpool.x")) return false;
  }
  {
    nn::Tensor<double> x({2, 3, 3}), out;
    fill_uniform(x.v, rng, -1.0, 1.0);
    std::vector<double> proj(2 * 6 * 6);
    fill_uniform(proj, rng, -1.0, 1.0);
    auto loss = [&]() {
      nn::Tensor<double> o;
      nn::upsample2_forward(x, o);
      double acc = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) acc += proj[i] * o.v[i];
      return acc;
    };
    nn::upsample2_forward(x, out);
    std::copy(proj.begin(), proj.end(), out.g.begin());
    x.zero_grad();
    nn::upsample2_backward(x, out);
    if (!fd_sweep(x.v, x.g, rng, 6, loss, why, "upsample.x")) return false;
  }
  {
    nn::Tensor<double> a({2, 4, 4}), b({3, 4, 4}), out;
    fill_uniform(a.v, rng, -1.0, 1.0);
    fill_uniform(b.v, rng, -1.0, 1.0);
    std::vector<double> proj(5 * 4 * 4);
    fill_uniform(proj, rng, -1.0, 1.0);
    auto loss = [&]() {
      nn::Tensor<double> o;
      nn::concat_forward(a, b, o);
      double acc = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) acc += proj[i] * o.v[i];
      return acc;
    };
    nn::concat_forward(a, b, out);
    std::copy(proj.begin(), proj.end(), out.g.begin());
    a.zero_grad();
    b.zero_grad();
    nn::concat_backward(a, b, out);
    if (!fd_sweep(a.v, a.g, rng, 4, loss, why, "concat.a")) return false;
    if (!fd_sweep(b.v, b.g, rng, 4, loss, why, "concat.b")) return false;
  }
  {
    nn::Tensor<double> x({4, 4, 4}), out;
    fill_uniform(x.v, rng, -1.0, 1.0);
    std::vector<double> proj(4);
    fill_uniform(proj, rng, -1.0, 1.0);
    auto loss = [&]() {
      nn::Tensor<double> o;
      nn::gap_forward(x, o);
      double acc = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) acc += proj[i] * o.v[i];
      return acc;
    };
    nn::gap_forward(x, out);
    std::copy(proj.begin(), proj.end(), out.g.begin());
    x.zero_grad();
    nn::gap_backward(x, out);
    if (!fd_sweep(x.v, x.g, rng, 4, loss, why, "gap.x")) return false;
  }

  // Full generator network at 16x16.
  {
    nn::SegNet<double> net(Rng::stream(99, 1));
    const int hw = 16 * 16;
    std::vector<double> rgb(3 * hw), pseudo(hw), proj(hw);
    fill_uniform(rgb, rng, 0.0, 1.0);
    for (double& v : pseudo) v = rng.uniform01() < 0.3 ? 1.0 : 0.0;
    fill_uniform(proj, rng, -1.0, 1.0);
    auto loss = [&]() {
      net.set_input_planes(rgb, pseudo, 16, 16);
      net.forward();
      double acc = 0.0;
      for (int i = 0; i < hw; ++i) acc += proj[i] * net.y().v[i];
      return acc;
    };
    net.zero_param_grads();
    loss();
    std::copy(proj.begin(), proj.end(), net.y().g.begin());
    net.backward();
    for (auto& [name, t] : net.named_params())
      if (!fd_sweep(t->v, t->g, rng, 2, loss, why, "segnet." + name))
        return false;
  }

  // Full discriminator at 16x16, parameters and input path.
  {
    nn::DiscNet<double> net(Rng::stream(99, 2));
    const int hw = 16 * 16;
    std::vector<double> rgb(3 * hw);
    fill_uniform(rgb, rng, 0.0, 1.0);
    auto loss = [&]() { return net.forward(rgb, 16, 16); };
    net.zero_param_grads();
    loss();
    net.backward(1.0);
    for (auto& [name, t] : net.named_params())
      if (!fd_sweep(t->v, t->g, rng, 2, loss, why, "discnet." + name))
        return false;
    std::vector<double> igrad = net.input_grad();
    if (!fd_sweep(rgb, igrad, rng, 4, loss, why, "discnet.input"))
      return false;
  }
  why = "all ops and both networks";
  return true;
}

// ---- criterion 2: compositor identities --------------------------------

bool criterion_compositor(std::string& why) {
  Rng rng(31);
  float worst = 0.0f;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 2 + rng.uniform_int(15);
    const int w = 2 + rng.uniform_int(15);
    Raster i(h, w, 3), ctx(h, w, 3), y(h, w, 1);
    for (float& v : i.data) v = static_cast<float>(rng.uniform01());
    for (float& v : ctx.data) v = static_cast<float>(rng.uniform01());
    for (float& v : y.data) v = static_cast<float>(rng.uniform01());

    const Raster ones(h, w, 1, 1.0f);
    const Raster zeros(h, w, 1, 0.0f);
    if (superimpose(i, ctx, ones).data != i.data) {
      why = "f(I, ctx, 1) != I";
      return false;
    }
    if (superimpose(i, ctx, zeros).data != ctx.data) {
      why = "f(I, ctx, 0) != ctx";
      return false;
    }

    const Raster f1 = make_fake_positive(i, ctx, y);
    const Raster f2 = make_fake_negative(i, ctx, y);
    for (std::size_t p = 0; p < i.data.size(); ++p)
      worst = std::max(worst, std::abs(f1.data[p] + f2.data[p] -
                                       (i.data[p] + ctx.data[p])));
  }
  if (worst > kSumTol) {
    why = "sum identity off by " + format_double(worst);
    return false;
  }
  why = "selects exact, |IF1+IF2-(IR+Ictx)| <= " + format_double(worst);
  return true;
}

// ---- criterion 3: context discovery ------------------------------------

bool criterion_contexts(std::string& why) {
  Rng rng(47);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    TileGrid grid;
    grid.rows = 1 + rng.uniform_int(32);
    grid.cols = 1 + rng.uniform_int(32);
    const double density = rng.uniform(0.1, 0.9);
    for (int r = 0; r < grid.rows; ++r)
      for (int c = 0; c < grid.cols; ++c) {
        if (rng.uniform01() < density)
          grid.positives.insert({r, c});
        else
          grid.negatives.insert({r, c});
      }
    const int k = 1 + rng.uniform_int(8);

    for (TileId origin : grid.positives) {
      // Independent breadth-first oracle: every negative keyed by
      // (chebyshev distance, row, col), truncated at k.
      std::vector<std::pair<int, TileId>> ranked;
      for (TileId id : grid.negatives) {
        const int d = std::max(std::abs(id.row - origin.row),
                               std::abs(id.col - origin.col));
        ranked.push_back({d, id});
      }
      std::sort(ranked.begin(), ranked.end(),
                [](const auto& a, const auto& b) {
                  if (a.first != b.first) return a.first < b.first;
                  return a.second < b.second;
                });
      std::vector<TileId> want;
      for (const auto& [d, id] : ranked) {
        if (static_cast<int>(want.size()) == k) break;
        want.push_back(id);
      }
      if (find_contexts(grid, origin, k) != want) {
        why = "mismatch on grid " + std::to_string(grid.rows) + "x" +
              std::to_string(grid.cols) + " origin [" +
              std::to_string(origin.row) + ", " +
              std::to_string(origin.col) + "] k=" + std::to_string(k);
        return false;
      }
      ++checked;
    }
  }
  why = std::to_string(checked) + " origins across 200 grids";
  return true;
}

// ---- criterion 4: pseudo-label radius ----------------------------------

bool criterion_radius(std::string& why) {
  const int side = 64;
  const PointXY center{32.0, 32.0};
  int combos = 0, populated = 0;
  for (double sigma : {2.0, 3.0, 4.0}) {
    for (double csm : {4000.0, 8000.0, 12000.0}) {
      for (double gamma : {10.0, 20.0, 40.0}) {
        LabelConfig cfg;
        cfg.sigma = Cov2{sigma * sigma, 0.0, sigma * sigma};
        cfg.csm = csm;
        cfg.gamma = gamma;
        const double arg = csm / (2.0 * M_PI * sigma * sigma * gamma);
        const double want =
            arg > 1.0 ? sigma * std::sqrt(2.0 * std::log(arg)) : -1.0;

        const Raster mask = make_pseudo_label({center}, cfg, side, side);
        double measured = -1.0;
        for (int r = 0; r < side; ++r)
          for (int c = 0; c < side; ++c)
            if (mask.at(r, c) == 1.0f)
              measured = std::max(
                  measured, std::hypot(c + 0.5 - center.x, r + 0.5 - center.y));

        ++combos;
        std::ostringstream tag;
        tag << "sigma=" << sigma << " csm=" << csm << " gamma=" << gamma
            << " analytic=" << want << " measured=" << measured;
        if (measured < 0.0) {
          // No pixel center fell inside: only legitimate for tiny disks.
          if (want > kRadiusTol) {
            why = "empty mask though " + tag.str();
            return false;
          }
          continue;
        }
        ++populated;
        if (measured > want + 1e-9) {
          why = "pixel outside the analytic disk: " + tag.str();
          return false;
        }
        if (std::abs(measured - want) > kRadiusTol) {
          why = "radius off by more than 1 px: " + tag.str();
          return false;
        }
      }
    }
  }
  why = std::to_string(combos) + " combos, " + std::to_string(populated) +
        " with non-empty disks";
  return true;
}

// ---- criterion 5: localization loss bounds -----------------------------

bool criterion_loss_bounds(std::string& why) {
  Rng rng(53);
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = 4 + rng.uniform_int(13);
    const int w = 4 + rng.uniform_int(13);
    Raster y_hat(h, w, 1), y_tilde(h, w, 1);
    for (float& v : y_hat.data) v = static_cast<float>(rng.uniform01());
    if (trial % 5 == 0) {  // adversarially mismatched: target the far side
      for (std::size_t p = 0; p < y_hat.data.size(); ++p)
        y_tilde.data[p] = y_hat.data[p] < 0.5f ? 1.0f : 0.0f;
    } else {
      for (float& v : y_tilde.data) v = rng.uniform01() < 0.5 ? 1.0f : 0.0f;
    }
    const double rho = rng.uniform(0.05, 1.5);
    const double loss = loss_loc(y_hat, y_tilde, rho);
    if (!(loss >= 0.0 && loss <= rho)) {
      why = "loss " + format_double(loss) + " outside [0, " +
            format_double(rho) + "]";
      return false;
    }
  }
  why = "1000 triples inside [0, rho]";
  return true;
}

// ---- criterion 6: metric identities ------------------------------------

bool criterion_metrics(std::string& why) {
  Rng rng(61);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Confusion> chips(1 + rng.uniform_int(6));
    for (Confusion& c : chips) {
      c.tp = rng.uniform_int(1000) + 1;
      c.fp = rng.uniform_int(1000);
      c.fn = rng.uniform_int(1000);
      c.tn = rng.uniform_int(1000);
    }
    const MetricsReport m = aggregate(chips, Aggregation::micro);
    if (std::abs(m.jaccard - m.dice / (2.0 - m.dice)) > kIdentityTol) {
      why = "jaccard != dice/(2-dice)";
      return false;
    }
    const double pr = m.precision + m.recall;
    if (pr > 0.0 &&
        std::abs(m.dice - 2.0 * m.precision * m.recall / pr) > kIdentityTol) {
      why = "dice != 2PR/(P+R)";
      return false;
    }
  }

  // Externally reported rows (dice, jaccard, precision, recall): the
  // identities must survive their two-decimal rounding.
  const double rows[4][4] = {{0.65, 0.49, 0.52, 0.93},
                             {0.64, 0.48, 0.64, 0.67},
                             {0.66, 0.51, 0.64, 0.74},
                             {0.62, 0.46, 0.68, 0.60}};
  for (const auto& row : rows) {
    const double dice = row[0], jac = row[1], prec = row[2], rec = row[3];
    if (std::abs(dice / (2.0 - dice) - jac) > kReportedJaccardTol) {
      why = "reported row breaks the jaccard identity";
      return false;
    }
    if (std::abs(2.0 * prec * rec / (prec + rec) - dice) > kReportedDiceTol) {
      why = "reported row breaks the dice identity";
      return false;
    }
  }
  why = "micro identities to 1e-12; reported rows within rounding";
  return true;
}

// ---- criterion 7: polygon round-trip -----------------------------------

bool point_in_polygons(const std::vector<Polygon>& polys, double px,
                       double py) {
  bool in = false;
  auto cast = [&](const Ring& ring) {
    for (std::size_t i = 0; i + 1 < ring.pts.size(); ++i) {
      const Vertex& a = ring.pts[i];
      const Vertex& b = ring.pts[i + 1];
      if ((a[1] > py) != (b[1] > py)) {
        const double x = a[0] + (py - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
        if (x > px) in = !in;
      }
    }
  };
  for (const Polygon& poly : polys) {
    cast(poly.exterior);
    for (const Ring& hole : poly.holes) cast(hole);
  }
  return in;
}

bool criterion_polygons(std::string& why) {
  Rng rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    Raster mask(32, 32, 1);
    const double density = rng.uniform(0.2, 0.8);
    long long pixels = 0;
    for (float& v : mask.data) {
      v = rng.uniform01() < density ? 1.0f : 0.0f;
      pixels += v == 1.0f;
    }
    const std::vector<Polygon> polys = mask_to_polygons(mask);
    double area = 0.0;
    for (const Polygon& poly : polys) area += poly.area();
    if (area != static_cast<double>(pixels)) {
      why = "shoelace area " + format_double(area) + " != pixel count " +
            std::to_string(pixels);
      return false;
    }
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c)
        if (point_in_polygons(polys, c + 0.5, r + 0.5) !=
            (mask.at(r, c) == 1.0f)) {
          why = "rasterization mismatch at [" + std::to_string(r) + ", " +
                std::to_string(c) + "] on trial " + std::to_string(trial);
          return false;
        }
  }
  why = "100 masks reproduced exactly";
  return true;
}

// ---- criteria 8-10: shared end-to-end runs -----------------------------

struct ArmOutcome {
  MetricsReport metrics;
  double minutes = 0.0;
};

struct HeavyResults {
  bool ran = false;
  std::string error;
  // seed -> outcome, one map per training arm
  std::map<uint64_t, ArmOutcome> def, nod2, noise, sup;
  bool rerun_identical = false;
  std::string rerun_detail;
};

std::vector<char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ArmOutcome run_arm(const LoadedDataset& train_set,
                   const LoadedDataset& test_set, const ContextMap& map,
                   const RunConfig& defaults, uint64_t seed,
                   const std::function<void(TrainConfig&)>& tweak,
                   const fs::path& run_dir) {
  TrainConfig tc = defaults.train;
  tc.seed = seed;
  tweak(tc);
  fs::create_directories(run_dir);
  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(train_set, map, tc);
  const fs::path csv = run_dir / "loss.csv";
  trainer.run(tc.epochs, &csv, &run_dir);
  ArmOutcome out;
  out.minutes = seconds_since(t0) / 60.0;
  out.metrics = evaluate_dataset(trainer, test_set, defaults.eval.threshold,
                                 defaults.eval.aggregation);
  return out;
}

HeavyResults run_heavy(const fs::path& work) {
  HeavyResults hr;
  const RunConfig defaults;  // spelled-out default scene + training setup
  try {
    for (uint64_t seed : kSeeds) {
      SceneConfig scene = defaults.scene;
      scene.seed = seed;
      const fs::path ds = work / ("data_seed" + std::to_string(seed));
      const DatasetIndex train_index = generate_dataset(scene, ds / "train");
      SceneConfig test_scene = scene;  // half grid, shifted seed
      test_scene.grid_rows = std::max(1, scene.grid_rows / 2);
      test_scene.grid_cols = std::max(1, scene.grid_cols / 2);
      test_scene.seed = scene.seed + 1;
      const DatasetIndex test_index = generate_dataset(test_scene, ds / "test");

      const ContextMap map = build_context_map(classify_tiles(train_index),
                                               defaults.train.k_contexts);
      const LoadedDataset train_set =
          load_dataset(ds / "train", train_index, defaults.train.label);
      const LoadedDataset test_set =
          load_dataset(ds / "test", test_index, defaults.train.label);

      struct Arm {
        const char* name;
        std::function<void(TrainConfig&)> tweak;
        std::map<uint64_t, ArmOutcome>* into;
      };
      const std::vector<Arm> arms = {
          {"default", [](TrainConfig&) {}, &hr.def},
          {"no-d2", [](TrainConfig& c) { c.use_d2 = false; }, &hr.nod2},
          {"noise-ctx",
           [](TrainConfig& c) { c.context_mode = ContextMode::noise; },
           &hr.noise},
          {"supervised",
           [](TrainConfig& c) { c.mode = TrainMode::supervised; }, &hr.sup},
      };
      for (const Arm& arm : arms) {
        const fs::path run_dir = work / (std::string(arm.name) + "_seed" +
                                         std::to_string(seed));
        const ArmOutcome out = run_arm(train_set, test_set, map, defaults,
                                       seed, arm.tweak, run_dir);
        (*arm.into)[seed] = out;
        std::fprintf(stderr,
                     "[run] seed=%llu arm=%s dice=%.4f precision=%.4f "
                     "recall=%.4f (%.1f min)\n",
                     static_cast<unsigned long long>(seed), arm.name,
                     out.metrics.dice, out.metrics.precision,
                     out.metrics.recall, out.minutes);
      }

      if (seed == kSeeds.front()) {
        // Determinism probe: repeat the default arm bit for bit.
        const fs::path again = work / "default_seed1_rerun";
        run_arm(train_set, test_set, map, defaults, seed,
                [](TrainConfig&) {}, again);
        const fs::path first = work / "default_seed1";
        const bool csv_same = file_bytes(first / "loss.csv") ==
                              file_bytes(again / "loss.csv");
        const bool ckpt_same =
            file_bytes(first / "checkpoint_final.bin") ==
            file_bytes(again / "checkpoint_final.bin");
        hr.rerun_identical = csv_same && ckpt_same;
        hr.rerun_detail = std::string("loss.csv ") +
                          (csv_same ? "identical" : "DIFFERS") +
                          ", checkpoint_final.bin " +
                          (ckpt_same ? "identical" : "DIFFERS");
        std::fprintf(stderr, "[run] seed=1 determinism rerun: %s\n",
                     hr.rerun_detail.c_str());
      }
    }
    hr.ran = true;
  } catch (const std::exception& e) {
    hr.error = e.what();
  }
  return hr;
}

std::string fmt_triplet(const std::map<uint64_t, ArmOutcome>& arm,
                        const char* field) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [seed, out] : arm) {
    if (!first) os << " ";
    first = false;
    const MetricsReport& m = out.metrics;
    const double v = std::string(field) == "dice"        ? m.dice
                     : std::string(field) == "precision" ? m.precision
                                                         : m.recall;
    os << "s" << seed << "=" << std::fixed;
    os.precision(4);
    os << v;
  }
  return os.str();
}

bool criterion_training(const HeavyResults& hr, std::string& why) {
  if (!hr.ran) {
    why = "end-to-end runs failed: " + hr.error;
    return false;
  }
  std::ostringstream os;
  bool ok = true;
  for (const auto& [seed, out] : hr.def) {
    os << "seed" << seed << " dice=" << std::fixed;
    os.precision(4);
    os << out.metrics.dice;
    os.precision(1);
    os << " (" << out.minutes << " min) ";
    if (out.metrics.dice < kDiceFloor || out.minutes > kMinutesCap) ok = false;
  }
  why = os.str();
  return ok;
}

bool criterion_trends(const HeavyResults& hr, std::string& why) {
  if (!hr.ran) {
    why = "end-to-end runs failed: " + hr.error;
    return false;
  }
  int a = 0, b = 0, c = 0;
  for (uint64_t seed : kSeeds) {
    const MetricsReport& d = hr.def.at(seed).metrics;
    const MetricsReport& n2 = hr.nod2.at(seed).metrics;
    const MetricsReport& nz = hr.noise.at(seed).metrics;
    const MetricsReport& sv = hr.sup.at(seed).metrics;
    if (n2.precision < d.precision && n2.recall > d.recall) ++a;
    if (nz.recall >= d.recall) ++b;
    if (sv.dice >= d.dice) ++c;
  }
  std::ostringstream os;
  os << "(a) no-d2 precision-down/recall-up " << a << "/3"
     << " (b) noise recall >= original " << b << "/3"
     << " (c) supervised dice >= adversarial " << c << "/3"
     << "; precision default [" << fmt_triplet(hr.def, "precision")
     << "] no-d2 [" << fmt_triplet(hr.nod2, "precision") << "]";
  why = os.str();
  return a >= kSeedsNeeded && b >= kSeedsNeeded && c >= kSeedsNeeded;
}

bool criterion_determinism(const HeavyResults& hr, std::string& why) {
  if (!hr.ran) {
    why = "end-to-end runs failed: " + hr.error;
    return false;
  }
  why = hr.rerun_detail;
  return hr.rerun_identical;
}

}  // namespace

int main() {
  const fs::path work =
      fs::temp_directory_path() /
      ("pointseg_accept_" + std::to_string(static_cast<unsigned>(
                                std::chrono::steady_clock::now()
                                    .time_since_epoch()
                                    .count() &
                                0xffff)));
  fs::create_directories(work);
  std::fprintf(stderr, "[accept] work dir %s\n", work.string().c_str());

  // Deferred so the cheap criteria report before the ~40 min of training.
  std::optional<HeavyResults> heavy_store;
  auto heavy = [&]() -> const HeavyResults& {
    if (!heavy_store) heavy_store = run_heavy(work);
    return *heavy_store;
  };

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness (float64 FD, rel err < 1e-4)",
       criterion_gradients},
      {2, "compositor identities on 100 random inputs", criterion_compositor},
      {3, "context discovery equals the breadth-first oracle",
       criterion_contexts},
      {4, "pseudo-label disk radius within 1 px of analytic",
       criterion_radius},
      {5, "localization loss bounded by [0, rho]", criterion_loss_bounds},
      {6, "metric identities and reported-row consistency", criterion_metrics},
      {7, "polygonization round-trip, area = pixel count",
       criterion_polygons},
      {8, "end-to-end training dice >= 0.60 within 30 min/seed",
       [&](std::string& w) { return criterion_training(heavy(), w); }},
      {9, "ablation trends on >= 2 of 3 seeds",
       [&](std::string& w) { return criterion_trends(heavy(), w); }},
      {10, "byte-identical rerun (checkpoint + loss csv)",
       [&](std::string& w) { return criterion_determinism(heavy(), w); }},
  };

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    all_pass = all_pass && pass;
    std::printf("[%s] criterion %d: %s — %s [%.1fs]\n",
                pass ? "PASS" : "FAIL", c.id, c.name, detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }

  std::error_code ec;
  fs::remove_all(work, ec);
  return all_pass ? 0 : 1;
}
