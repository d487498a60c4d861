#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pointseg/config.hpp"
#include "pointseg/dataset.hpp"
#include "pointseg/errors.hpp"
#include "pointseg/grid_context.hpp"
#include "pointseg/metrics.hpp"
#include "pointseg/polygonize.hpp"
#include "pointseg/synthgen.hpp"
#include "pointseg/trainer.hpp"

namespace fs = std::filesystem;
using namespace pointseg;

namespace {

// Flag values shared across subcommands; empty/unset means "not given".
struct Cli {
  std::string config_path;
  std::string out;
  std::string data;
  std::string ckpt;
  std::string pred;
  std::string axis;
  std::optional<uint64_t> seed;
  std::optional<double> csm;
  std::optional<double> rho;
  std::optional<std::string> context_mode;
  std::optional<double> threshold;
  std::optional<double> tol;
  std::optional<int> k;
  bool no_d2 = false;
};

RunConfig make_config(const Cli& cli) {
  RunConfig cfg;
  if (!cli.config_path.empty()) cfg = load_run_config(cli.config_path);
  if (cli.seed) {
    cfg.scene.seed = *cli.seed;
    cfg.train.seed = *cli.seed;
  }
  if (cli.csm) cfg.train.label.csm = *cli.csm;
  if (cli.rho) cfg.train.label.rho = *cli.rho;
  if (cli.context_mode)
    cfg.train.context_mode = context_mode_from(*cli.context_mode);
  if (cli.no_d2) cfg.train.use_d2 = false;
  if (cli.threshold) {
    cfg.eval.threshold = *cli.threshold;
    cfg.poly.threshold = *cli.threshold;
  }
  if (cli.tol) cfg.poly.simplify_tol = *cli.tol;
  if (cli.k) cfg.train.k_contexts = *cli.k;
  validate(cfg.scene);
  validate(cfg.train);
  if (!(cfg.eval.threshold > 0.0 && cfg.eval.threshold < 1.0))
    throw ConfigError("eval threshold must be in (0, 1)");
  if (!(cfg.poly.threshold > 0.0 && cfg.poly.threshold < 1.0))
    throw ConfigError("polygonize threshold must be in (0, 1)");
  if (cfg.poly.simplify_tol < 0.0)
    throw ConfigError("simplify tolerance must be >= 0");
  return cfg;
}

SceneConfig test_split_config(SceneConfig scene) {
  scene.grid_rows = std::max(1, scene.grid_rows / 2);
  scene.grid_cols = std::max(1, scene.grid_cols / 2);
  scene.seed += 1;
  return scene;
}

int cmd_synth(const Cli& cli) {
  const RunConfig cfg = make_config(cli);
  const fs::path out(cli.out);
  const DatasetIndex train = generate_dataset(cfg.scene, out / "train");
  const DatasetIndex test =
      generate_dataset(test_split_config(cfg.scene), out / "test");
  const DatasetStats ts = dataset_stats(train, out / "train");
  const DatasetStats vs = dataset_stats(test, out / "test");
  std::printf("train: %zu chips (%d positive, %d objects)\n",
              train.chips.size(), ts.positives, ts.objects);
  std::printf("test:  %zu chips (%d positive, %d objects)\n",
              test.chips.size(), vs.positives, vs.objects);
  return 0;
}

int cmd_preprocess(const Cli& cli) {
  const RunConfig cfg = make_config(cli);
  const fs::path data(cli.data);
  const DatasetIndex index = load_index(data / "index.json");
  const TileGrid grid = classify_tiles(index);
  const ContextMap map = build_context_map(grid, cfg.train.k_contexts);
  save_context_map(map, data / "context_map.json");
  std::printf("context_map.json: %zu positive tiles, k=%d\n",
              map.entries.size(), map.k);
  return 0;
}

ContextMap context_map_for(const fs::path& data, const TrainConfig& train) {
  const fs::path path = data / "context_map.json";
  if (!fs::exists(path)) {
    if (train.mode == TrainMode::adversarial)
      throw ConfigError("missing " + path.string() + "; run preprocess first");
    ContextMap empty;
    empty.k = train.k_contexts;
    return empty;
  }
  return load_context_map(path);
}

int cmd_train(const Cli& cli) {
  const RunConfig cfg = make_config(cli);
  const fs::path data(cli.data);
  const fs::path out(cli.out);
  const DatasetIndex index = load_index(data / "index.json");
  const ContextMap map = context_map_for(data, cfg.train);
  const LoadedDataset loaded = load_dataset(data, index, cfg.train.label);
  fs::create_directories(out);
  Trainer trainer(loaded, map, cfg.train);
  const fs::path csv = out / "loss.csv";
  trainer.run(cfg.train.epochs, &csv, &out);
  const LossReport& last = trainer.history().back();
  std::printf("trained %d epochs (%llu steps); final total_g=%s\n",
              cfg.train.epochs,
              static_cast<unsigned long long>(trainer.gan().step),
              format_double(last.total_g).c_str());
  std::printf("wrote %s and %s\n", csv.string().c_str(),
              (out / "checkpoint_final.bin").string().c_str());
  return 0;
}

std::string pred_name(TileId id) {
  return "pred_" + std::to_string(id.row) + "_" + std::to_string(id.col) +
         ".png";
}

int cmd_predict(const Cli& cli) {
  const RunConfig cfg = make_config(cli);
  const fs::path data(cli.data);
  const fs::path out(cli.out);
  const DatasetIndex index = load_index(data / "index.json");
  Predictor pred(cli.ckpt, cfg.train.label);
  fs::create_directories(out);
  for (const ChipRecord& rec : index.chips) {
    const Raster image = load_png(data / rec.image);
    const Raster mask = pred.predict(image, rec.points);
    save_png(mask, out / pred_name(rec.tile_id));
  }
  std::printf("wrote %zu prediction masks to %s\n", index.chips.size(),
              out.string().c_str());
  return 0;
}

int cmd_eval(const Cli& cli) {
  const RunConfig cfg = make_config(cli);
  const fs::path data(cli.data);
  const fs::path out(cli.out);
  const DatasetIndex index = load_index(data / "index.json");
  const LoadedDataset loaded = load_dataset(data, index, cfg.train.label);
  Predictor pred(cli.ckpt, cfg.train.label);
  const MetricsReport report = evaluate_dataset(
      pred, loaded, cfg.eval.threshold, cfg.eval.aggregation);
  fs::create_directories(out);
  save_metrics(report, out / "metrics.json");
  std::printf("%s over %d chips: dice=%s jaccard=%s precision=%s recall=%s\n",
              report.aggregation.c_str(), report.n_chips,
              format_double(report.dice).c_str(),
              format_double(report.jaccard).c_str(),
              format_double(report.precision).c_str(),
              format_double(report.recall).c_str());
  return 0;
}

int cmd_polygonize(const Cli& cli) {
  const RunConfig cfg = make_config(cli);
  const fs::path pred_dir(cli.pred);
  if (!fs::is_directory(pred_dir))
    throw IoError("prediction directory " + pred_dir.string() + " not found");
  std::vector<std::pair<TileId, fs::path>> masks;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    const std::string name = entry.path().filename().string();
    int r = 0, c = 0;
    if (std::sscanf(name.c_str(), "pred_%d_%d.png", &r, &c) == 2)
      masks.push_back({TileId{r, c}, entry.path()});
  }
  std::sort(masks.begin(), masks.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<TileFeature> features;
  for (const auto& [id, path] : masks) {
    const Raster soft = load_png(path);
    if (soft.channels != 1)
      throw FormatError(path.string() + ": prediction must be grayscale");
    const Raster mask = binarize(soft, cfg.poly.threshold);
    std::vector<Polygon> polys = mask_to_polygons(mask);
    if (cfg.poly.simplify_tol > 0.0) {
      std::vector<Polygon> kept;
      for (const Polygon& p : polys)
        if (auto s = simplify(p, cfg.poly.simplify_tol)) kept.push_back(*s);
      polys = std::move(kept);
    }
    if (!polys.empty()) features.push_back({id, std::move(polys)});
  }
  write_geojson(features, cli.out);
  std::size_t n = 0;
  for (const TileFeature& f : features) n += f.polygons.size();
  std::printf("wrote %zu polygons from %zu masks to %s\n", n, masks.size(),
              cli.out.c_str());
  return 0;
}

struct AblationRow {
  std::string axis, variant;
  uint64_t seed;
  MetricsReport metrics;
};

MetricsReport run_variant(const RunConfig& base, const fs::path& data_seed,
                          const fs::path& run_dir) {
  const DatasetIndex train_index = load_index(data_seed / "train/index.json");
  const ContextMap map =
      context_map_for(data_seed / "train", base.train);
  const LoadedDataset train_set =
      load_dataset(data_seed / "train", train_index, base.train.label);
  fs::create_directories(run_dir);
  Trainer trainer(train_set, map, base.train);
  const fs::path csv = run_dir / "loss.csv";
  trainer.run(base.train.epochs, &csv, &run_dir);

  const DatasetIndex test_index = load_index(data_seed / "test/index.json");
  const LoadedDataset test_set =
      load_dataset(data_seed / "test", test_index, base.train.label);
  const MetricsReport report = evaluate_dataset(
      trainer, test_set, base.eval.threshold, base.eval.aggregation);
  save_metrics(report, run_dir / "metrics.json");
  return report;
}

int cmd_ablate(const Cli& cli) {
  const RunConfig cfg = make_config(cli);
  if (cli.axis != "d2" && cli.axis != "csm" && cli.axis != "context")
    throw ConfigError("axis must be d2, csm, or context; got '" + cli.axis +
                      "'");
  const fs::path out(cli.out);
  fs::create_directories(out);

  struct Variant {
    std::string name;
    std::function<void(RunConfig&)> apply;
  };
  std::vector<Variant> variants;
  if (cli.axis == "d2") {
    variants.push_back({"on", [](RunConfig& c) { c.train.use_d2 = true; }});
    variants.push_back({"off", [](RunConfig& c) { c.train.use_d2 = false; }});
  } else if (cli.axis == "csm") {
    for (double v : {6000.0, 7000.0, 8000.0, 9000.0, 10000.0})
      variants.push_back({format_double(v), [v](RunConfig& c) {
                            c.train.label.csm = v;
                          }});
  } else {
    for (ContextMode m : {ContextMode::original, ContextMode::blank,
                          ContextMode::red, ContextMode::noise})
      variants.push_back({to_string(m), [m](RunConfig& c) {
                            c.train.context_mode = m;
                          }});
  }

  // One dataset per seed, shared across the axis variants.
  for (uint64_t seed : cfg.ablate.seeds) {
    const fs::path data_seed = out / ("data_seed" + std::to_string(seed));
    if (!fs::exists(data_seed / "train/index.json")) {
      SceneConfig scene = cfg.scene;
      scene.seed = seed;
      generate_dataset(scene, data_seed / "train");
      generate_dataset(test_split_config(scene), data_seed / "test");
      const DatasetIndex index = load_index(data_seed / "train/index.json");
      const ContextMap map =
          build_context_map(classify_tiles(index), cfg.train.k_contexts);
      save_context_map(map, data_seed / "train/context_map.json");
    }
  }

  std::vector<AblationRow> rows;
  for (const Variant& variant : variants) {
    for (uint64_t seed : cfg.ablate.seeds) {
      RunConfig run_cfg = cfg;
      run_cfg.train.seed = seed;
      variant.apply(run_cfg);
      const fs::path run_dir =
          out / (cli.axis + "_" + variant.name + "_seed" +
                 std::to_string(seed));
      std::printf("[ablate] axis=%s variant=%s seed=%llu\n",
                  cli.axis.c_str(), variant.name.c_str(),
                  static_cast<unsigned long long>(seed));
      std::fflush(stdout);
      const MetricsReport m = run_variant(
          run_cfg, out / ("data_seed" + std::to_string(seed)), run_dir);
      rows.push_back({cli.axis, variant.name, seed, m});
    }
  }

  const fs::path report = out / "ablation_report.csv";
  std::ofstream csv(report);
  if (!csv) throw IoError("cannot open " + report.string());
  csv << "axis,variant,seed,dice,jaccard,precision,recall\n";
  for (const AblationRow& row : rows)
    csv << row.axis << ',' << row.variant << ',' << row.seed << ','
        << format_double(row.metrics.dice) << ','
        << format_double(row.metrics.jaccard) << ','
        << format_double(row.metrics.precision) << ','
        << format_double(row.metrics.recall) << '\n';
  std::printf("wrote %s (%zu rows)\n", report.string().c_str(), rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Cli cli;
  CLI::App app{"pointseg: point labels + raster tiles -> trained masks and "
               "polygons"};
  app.require_subcommand(1);
  app.footer(config_help_text() +
             "\nsynth writes <out>/train and <out>/test; the test split uses "
             "half the grid and seed+1.");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cli.config_path, "JSON config file");
    sub->add_option("--seed", cli.seed, "override scene and train seeds");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth);
  synth->add_option("--out", cli.out, "output directory")->required();

  CLI::App* preprocess =
      app.add_subcommand("preprocess", "build the context map");
  add_common(preprocess);
  preprocess->add_option("--data", cli.data, "dataset directory")->required();
  preprocess->add_option("--k", cli.k, "context candidates per positive tile");

  CLI::App* train = app.add_subcommand("train", "train the adversarial model");
  add_common(train);
  train->add_option("--data", cli.data, "dataset directory")->required();
  train->add_option("--out", cli.out, "run directory")->required();
  train->add_option("--csm", cli.csm, "kernel scale multiplier");
  train->add_option("--rho", cli.rho, "localization loss cap");
  train->add_option("--context-mode", cli.context_mode,
                    "original|blank|red|noise");
  train->add_flag("--no-d2", cli.no_d2, "drop the second discriminator");

  CLI::App* predict = app.add_subcommand("predict", "write soft-mask PNGs");
  add_common(predict);
  predict->add_option("--data", cli.data, "dataset directory")->required();
  predict->add_option("--ckpt", cli.ckpt, "checkpoint file")->required();
  predict->add_option("--out", cli.out, "output directory")->required();
  predict->add_option("--csm", cli.csm, "kernel scale multiplier");

  CLI::App* eval = app.add_subcommand("eval", "score against gt masks");
  add_common(eval);
  eval->add_option("--data", cli.data, "dataset directory")->required();
  eval->add_option("--ckpt", cli.ckpt, "checkpoint file")->required();
  eval->add_option("--out", cli.out, "output directory")->required();
  eval->add_option("--threshold", cli.threshold, "binarization threshold");
  eval->add_option("--csm", cli.csm, "kernel scale multiplier");

  CLI::App* polygonize =
      app.add_subcommand("polygonize", "trace predictions into GeoJSON");
  add_common(polygonize);
  polygonize->add_option("--pred", cli.pred, "directory of pred_*.png")
      ->required();
  polygonize->add_option("--out", cli.out, "output GeoJSON path")->required();
  polygonize->add_option("--threshold", cli.threshold,
                         "binarization threshold");
  polygonize->add_option("--tol", cli.tol, "simplification tolerance (px)");

  CLI::App* ablate = app.add_subcommand("ablate", "seeded sweep over one axis");
  add_common(ablate);
  ablate->add_option("--axis", cli.axis, "d2|csm|context")->required();
  ablate->add_option("--out", cli.out, "sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(cli);
    if (preprocess->parsed()) return cmd_preprocess(cli);
    if (train->parsed()) return cmd_train(cli);
    if (predict->parsed()) return cmd_predict(cli);
    if (eval->parsed()) return cmd_eval(cli);
    if (polygonize->parsed()) return cmd_polygonize(cli);
    if (ablate->parsed()) return cmd_ablate(cli);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const EvalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
