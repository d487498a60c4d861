#include "pointseg/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pointseg/errors.hpp"

namespace pointseg {

namespace {

int as_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw ConfigError("config: '" + key + "' must be an integer");
  return v.get<int>();
}

uint64_t as_u64(const nlohmann::json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return v.get<uint64_t>();
  throw ConfigError("config: '" + key + "' must be a non-negative integer");
}

double as_double(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number())
    throw ConfigError("config: '" + key + "' must be a number");
  return v.get<double>();
}

bool as_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean())
    throw ConfigError("config: '" + key + "' must be true or false");
  return v.get<bool>();
}

std::string as_str(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string())
    throw ConfigError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

ObjectKind object_kind_from(const std::string& name) {
  if (name == "ellipse") return ObjectKind::ellipse;
  if (name == "rounded_rect") return ObjectKind::rounded_rect;
  throw ConfigError("scene.kind must be ellipse or rounded_rect; got '" +
                    name + "'");
}

const char* to_string(ObjectKind kind) {
  return kind == ObjectKind::ellipse ? "ellipse" : "rounded_rect";
}

std::string seeds_str(const std::vector<uint64_t>& seeds) {
  std::string out = "[";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(seeds[i]);
  }
  return out + "]";
}

std::vector<ConfigKey> build_keys() {
  const RunConfig d;
  std::vector<ConfigKey> keys;
  auto add = [&keys](std::string key, std::string def, std::string help,
                     std::function<void(RunConfig&, const nlohmann::json&)>
                         set) {
    keys.push_back({std::move(key), std::move(def), std::move(help),
                    std::move(set)});
  };

  add("scene.grid_rows", std::to_string(d.scene.grid_rows),
      "rows of the synthetic tile grid",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.grid_rows = as_int(v, "scene.grid_rows");
      });
  add("scene.grid_cols", std::to_string(d.scene.grid_cols),
      "columns of the synthetic tile grid",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.grid_cols = as_int(v, "scene.grid_cols");
      });
  add("scene.tile_size", std::to_string(d.scene.tile_size),
      "tile side length in pixels (multiple of 8)",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.tile_size = as_int(v, "scene.tile_size");
      });
  add("scene.object_density", format_double(d.scene.object_density),
      "fraction of tiles that receive objects",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.object_density = as_double(v, "scene.object_density");
      });
  add("scene.min_objects", std::to_string(d.scene.min_objects),
      "minimum objects per positive tile",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.min_objects = as_int(v, "scene.min_objects");
      });
  add("scene.max_objects", std::to_string(d.scene.max_objects),
      "maximum objects per positive tile",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.max_objects = as_int(v, "scene.max_objects");
      });
  add("scene.kind", to_string(d.scene.kind),
      "object shape: ellipse or rounded_rect",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.kind = object_kind_from(as_str(v, "scene.kind"));
      });
  add("scene.bg_corr_len", format_double(d.scene.bg_corr_len),
      "background smoothing radius in pixels",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.bg_corr_len = as_double(v, "scene.bg_corr_len");
      });
  add("scene.color_separation", format_double(d.scene.color_separation),
      "object/background brightness separation",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.color_separation = as_double(v, "scene.color_separation");
      });
  add("scene.tile_tint", format_double(d.scene.tile_tint),
      "per-tile illumination offset amplitude",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.tile_tint = as_double(v, "scene.tile_tint");
      });
  add("scene.jitter_sigma", format_double(d.scene.jitter_sigma),
      "stddev of point-label jitter in pixels",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.jitter_sigma = as_double(v, "scene.jitter_sigma");
      });
  add("scene.seed", std::to_string(d.scene.seed),
      "seed for scene generation",
      [](RunConfig& c, const nlohmann::json& v) {
        c.scene.seed = as_u64(v, "scene.seed");
      });

  add("label.sigma", format_double(std::sqrt(d.train.label.sigma.xx)),
      "isotropic stddev of the label kernel in pixels",
      [](RunConfig& c, const nlohmann::json& v) {
        const double s = as_double(v, "label.sigma");
        c.train.label.sigma = Cov2{s * s, 0.0, s * s};
      });
  add("label.csm", format_double(d.train.label.csm),
      "kernel scale multiplier",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.label.csm = as_double(v, "label.csm");
      });
  add("label.gamma", format_double(d.train.label.gamma),
      "threshold on the scaled kernel",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.label.gamma = as_double(v, "label.gamma");
      });
  add("label.rho", format_double(d.train.label.rho),
      "cap on the localization loss",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.label.rho = as_double(v, "label.rho");
      });

  add("train.k_contexts", std::to_string(d.train.k_contexts),
      "context candidates per positive tile",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.k_contexts = as_int(v, "train.k_contexts");
      });
  add("train.batch_size", std::to_string(d.train.batch_size),
      "chips per optimization step",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.batch_size = as_int(v, "train.batch_size");
      });
  add("train.epochs", std::to_string(d.train.epochs),
      "passes over the positive chips",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.epochs = as_int(v, "train.epochs");
      });
  add("train.lr", format_double(d.train.lr), "Adam learning rate",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.lr = as_double(v, "train.lr");
      });
  add("train.seed", std::to_string(d.train.seed),
      "seed for weights, shuffling, and context picks",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.seed = as_u64(v, "train.seed");
      });
  add("train.context_mode", to_string(d.train.context_mode),
      "context source: original, blank, red, or noise",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.context_mode =
            context_mode_from(as_str(v, "train.context_mode"));
      });
  add("train.loss_variant", to_string(d.train.loss_variant),
      "generator objective: saturating or nonsaturating",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.loss_variant =
            loss_variant_from(as_str(v, "train.loss_variant"));
      });
  add("train.use_d2", d.train.use_d2 ? "true" : "false",
      "keep the second discriminator",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.use_d2 = as_bool(v, "train.use_d2");
      });
  add("train.mode", to_string(d.train.mode),
      "adversarial or supervised (needs gt masks)",
      [](RunConfig& c, const nlohmann::json& v) {
        c.train.mode = train_mode_from(as_str(v, "train.mode"));
      });

  add("eval.threshold", format_double(d.eval.threshold),
      "binarization threshold for metrics",
      [](RunConfig& c, const nlohmann::json& v) {
        c.eval.threshold = as_double(v, "eval.threshold");
      });
  add("eval.aggregation", to_string(d.eval.aggregation),
      "metric aggregation: micro or macro",
      [](RunConfig& c, const nlohmann::json& v) {
        c.eval.aggregation = aggregation_from(as_str(v, "eval.aggregation"));
      });

  add("poly.threshold", format_double(d.poly.threshold),
      "binarization threshold for polygon extraction",
      [](RunConfig& c, const nlohmann::json& v) {
        c.poly.threshold = as_double(v, "poly.threshold");
      });
  add("poly.simplify_tol", format_double(d.poly.simplify_tol),
      "polygon simplification tolerance in pixels (0 = off)",
      [](RunConfig& c, const nlohmann::json& v) {
        c.poly.simplify_tol = as_double(v, "poly.simplify_tol");
      });

  add("ablate.seeds", seeds_str(d.ablate.seeds),
      "seeds the ablation sweep runs per variant",
      [](RunConfig& c, const nlohmann::json& v) {
        if (!v.is_array() || v.empty())
          throw ConfigError("config: 'ablate.seeds' must be a non-empty "
                            "array of seeds");
        c.ablate.seeds.clear();
        for (const auto& e : v) c.ablate.seeds.push_back(as_u64(e, "ablate.seeds"));
      });

  return keys;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

Aggregation aggregation_from(const std::string& name) {
  if (name == "micro") return Aggregation::micro;
  if (name == "macro") return Aggregation::macro;
  throw ConfigError("aggregation must be micro or macro; got '" + name + "'");
}

const char* to_string(Aggregation agg) {
  return agg == Aggregation::micro ? "micro" : "macro";
}

RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object())
    throw ConfigError("config: top level must be a JSON object");
  std::map<std::string, const ConfigKey*> lookup;
  std::map<std::string, bool> groups;
  for (const ConfigKey& k : config_keys()) {
    lookup[k.key] = &k;
    groups[k.key.substr(0, k.key.find('.'))] = true;
  }

  RunConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!groups.count(it.key())) {
      std::string known;
      for (auto& [g, _] : groups) known += (known.empty() ? "" : ", ") + g;
      throw ConfigError("config: unknown key '" + it.key() +
                        "' (top-level groups are " + known + ")");
    }
    if (!it.value().is_object())
      throw ConfigError("config: '" + it.key() +
                        "' must be an object of settings");
    for (auto leaf = it.value().begin(); leaf != it.value().end(); ++leaf) {
      const std::string full = it.key() + "." + leaf.key();
      auto hit = lookup.find(full);
      if (hit == lookup.end())
        throw ConfigError("config: unknown key '" + full + "'");
      hit->second->set(cfg, leaf.value());
    }
  }

  validate(cfg.scene);
  validate(cfg.train);
  if (!(cfg.eval.threshold > 0.0 && cfg.eval.threshold < 1.0))
    throw ConfigError("config: eval.threshold must be in (0, 1)");
  if (!(cfg.poly.threshold > 0.0 && cfg.poly.threshold < 1.0))
    throw ConfigError("config: poly.threshold must be in (0, 1)");
  if (cfg.poly.simplify_tol < 0.0)
    throw ConfigError("config: poly.simplify_tol must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

std::string config_help_text() {
  std::size_t key_w = 0, def_w = 0;
  for (const ConfigKey& k : config_keys()) {
    key_w = std::max(key_w, k.key.size());
    def_w = std::max(def_w, k.def.size());
  }
  std::ostringstream out;
  out << "Config keys (JSON file passed with --config):\n";
  for (const ConfigKey& k : config_keys()) {
    out << "  " << k.key << std::string(key_w - k.key.size() + 2, ' ')
        << k.def << std::string(def_w - k.def.size() + 2, ' ') << k.help
        << "\n";
  }
  return out.str();
}

}  // namespace pointseg
