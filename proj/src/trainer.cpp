#include "pointseg/trainer.hpp"

#include <algorithm>

namespace pointseg {

void validate(const TrainConfig& cfg) {
  validate(cfg.label);
  if (cfg.k_contexts < 1) throw ConfigError("train: k_contexts must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("train: lr must be positive");
}

const char* to_string(ContextMode mode) {
  switch (mode) {
    case ContextMode::original: return "original";
    case ContextMode::blank: return "blank";
    case ContextMode::red: return "red";
    case ContextMode::noise: return "noise";
  }
  throw ContractError("unknown context mode");
}

const char* to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::adversarial: return "adversarial";
    case TrainMode::supervised: return "supervised";
  }
  throw ContractError("unknown train mode");
}

const char* to_string(LossVariant variant) {
  switch (variant) {
    case LossVariant::saturating: return "saturating";
    case LossVariant::nonsaturating: return "nonsaturating";
  }
  throw ContractError("unknown loss variant");
}

ContextMode context_mode_from(const std::string& name) {
  if (name == "original") return ContextMode::original;
  if (name == "blank") return ContextMode::blank;
  if (name == "red") return ContextMode::red;
  if (name == "noise") return ContextMode::noise;
  throw ConfigError("context_mode must be one of original, blank, red, "
                    "noise; got '" + name + "'");
}

TrainMode train_mode_from(const std::string& name) {
  if (name == "adversarial") return TrainMode::adversarial;
  if (name == "supervised") return TrainMode::supervised;
  throw ConfigError("mode must be adversarial or supervised; got '" + name +
                    "'");
}

LossVariant loss_variant_from(const std::string& name) {
  if (name == "saturating") return LossVariant::saturating;
  if (name == "nonsaturating") return LossVariant::nonsaturating;
  throw ConfigError("loss_variant must be saturating or nonsaturating; got '" +
                    name + "'");
}

const LoadedChip& LoadedDataset::chip(TileId id) const {
  auto it = by_id.find(id);
  if (it == by_id.end())
    throw ContractError("dataset: no chip at [" + std::to_string(id.row) +
                        ", " + std::to_string(id.col) + "]");
  return chips[it->second];
}

LoadedDataset load_dataset(const std::filesystem::path& data_dir,
                           const DatasetIndex& index,
                           const LabelConfig& label) {
  validate(label);
  LoadedDataset out;
  out.tile_size = index.tile_size;
  out.chips.reserve(index.chips.size());
  for (const ChipRecord& rec : index.chips) {
    LoadedChip chip;
    chip.id = rec.tile_id;
    chip.image = load_png(data_dir / rec.image);
    if (chip.image.channels != 3)
      throw FormatError("chip " + rec.image + ": expected an RGB image");
    if (chip.image.height != index.tile_size ||
        chip.image.width != index.tile_size)
      throw FormatError("chip " + rec.image + ": size " +
                        std::to_string(chip.image.width) + "x" +
                        std::to_string(chip.image.height) +
                        " does not match tile_size " +
                        std::to_string(index.tile_size));
    chip.points = rec.points;
    chip.pseudo = make_pseudo_label(chip.points, label, index.tile_size,
                                    index.tile_size);
    if (rec.gt_mask) {
      Raster gt = load_png(data_dir / *rec.gt_mask);
      if (gt.channels != 1)
        throw FormatError("mask " + *rec.gt_mask + ": expected grayscale");
      if (gt.height != index.tile_size || gt.width != index.tile_size)
        throw FormatError("mask " + *rec.gt_mask + ": size mismatch");
      chip.gt = std::move(gt);
    }
    out.chips.push_back(std::move(chip));
  }
  for (int i = 0; i < static_cast<int>(out.chips.size()); ++i) {
    out.by_id[out.chips[i].id] = i;
    if (out.chips[i].is_positive()) out.positives.push_back(i);
  }
  return out;
}

Raster apply_context_mode(const Raster& i_ctx, ContextMode mode, Rng& rng) {
  switch (mode) {
    case ContextMode::original:
      return i_ctx;
    case ContextMode::blank:
      return Raster(i_ctx.height, i_ctx.width, i_ctx.channels, 0.0f);
    case ContextMode::red: {
      Raster out(i_ctx.height, i_ctx.width, i_ctx.channels, 0.0f);
      for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c) out.at(r, c, 0) = 1.0f;
      return out;
    }
    case ContextMode::noise: {
      Raster out(i_ctx.height, i_ctx.width, i_ctx.channels);
      for (float& v : out.data)
        v = static_cast<float>(
            std::clamp(rng.normal(0.5, 0.25), 0.0, 1.0));
      return out;
    }
  }
  throw ContractError("unknown context mode");
}

}  // namespace pointseg
