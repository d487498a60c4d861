#pragma once

#include <charconv>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pointseg/compositor.hpp"
#include "pointseg/dataset.hpp"
#include "pointseg/errors.hpp"
#include "pointseg/grid_context.hpp"
#include "pointseg/losses.hpp"
#include "pointseg/metrics.hpp"
#include "pointseg/nn/adam.hpp"
#include "pointseg/nn/checkpoint.hpp"
#include "pointseg/nn/nets.hpp"
#include "pointseg/pseudolabel.hpp"
#include "pointseg/raster.hpp"
#include "pointseg/rng.hpp"

namespace pointseg {

enum class ContextMode { original, blank, red, noise };
enum class TrainMode { adversarial, supervised };

struct TrainConfig {
  LabelConfig label;
  int k_contexts = 8;
  int batch_size = 8;
  int epochs = 20;
  double lr = 2e-4;
  uint64_t seed = 1;
  ContextMode context_mode = ContextMode::original;
  LossVariant loss_variant = LossVariant::nonsaturating;
  bool use_d2 = true;
  TrainMode mode = TrainMode::adversarial;
};

void validate(const TrainConfig& cfg);

const char* to_string(ContextMode mode);
const char* to_string(TrainMode mode);
const char* to_string(LossVariant variant);
ContextMode context_mode_from(const std::string& name);
TrainMode train_mode_from(const std::string& name);
LossVariant loss_variant_from(const std::string& name);

// One chip fully materialized in memory, pseudo-label included.
struct LoadedChip {
  TileId id;
  Raster image;                 // 3 channels
  std::vector<PointXY> points;
  Raster pseudo;                // 1 channel, binary
  Raster gt;                    // 1 channel binary; empty when absent

  bool has_gt() const { return gt.height > 0; }
  bool is_positive() const { return !points.empty(); }
};

struct LoadedDataset {
  int tile_size = 0;
  std::vector<LoadedChip> chips;
  std::vector<int> positives;   // indices into chips
  std::map<TileId, int> by_id;

  const LoadedChip& chip(TileId id) const;
};

// Reads every chip raster (and gt mask when present) and precomputes the
// pseudo-labels under the given label config.
LoadedDataset load_dataset(const std::filesystem::path& data_dir,
                           const DatasetIndex& index,
                           const LabelConfig& label);

// Context transforms of the ablation axis: original passes through,
// blank zeroes, red forces (1, 0, 0), noise replaces the raster with
// i.i.d. Gaussian(0.5, 0.25^2) samples clamped to [0, 1].
Raster apply_context_mode(const Raster& i_ctx, ContextMode mode, Rng& rng);

// Shortest round-trip decimal form, deterministic across runs.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// The generator/discriminator trio plus everything a checkpoint must
// round-trip: optimizer moments, counters, and the training RNG.
// Templated so gradient checks can run the identical code at float64.
template <typename T>
class GanState {
 public:
  GanState(uint64_t seed, T lr)
      : s(Rng::stream(seed, 10)),
        d1(Rng::stream(seed, 11)),
        d2(Rng::stream(seed, 12)),
        rng(Rng::stream(seed, 20)),
        adam_s(param_ptrs(s.named_params()), lr),
        adam_d1(param_ptrs(d1.named_params()), lr),
        adam_d2(param_ptrs(d2.named_params()), lr) {}

  GanState(const GanState&) = delete;
  GanState& operator=(const GanState&) = delete;

  nn::SegNet<T> s;
  nn::DiscNet<T> d1, d2;
  Rng rng;
  nn::Adam<T> adam_s, adam_d1, adam_d2;
  uint64_t step = 0;
  int epoch = 0;

  void save(const std::filesystem::path& path);
  void load(const std::filesystem::path& path);

 private:
  static std::vector<nn::Tensor<T>*> param_ptrs(
      std::vector<std::pair<std::string, nn::Tensor<T>*>> named) {
    std::vector<nn::Tensor<T>*> out;
    for (auto& [name, t] : named) out.push_back(t);
    return out;
  }

  struct Binding {
    std::string name;
    std::vector<int> shape;
    std::vector<T>* data;
  };
  std::vector<Binding> bindings();
};

template <typename T>
auto GanState<T>::bindings() -> std::vector<Binding> {
  std::vector<Binding> out;
  auto add_net = [&out](const char* prefix, auto& net, nn::Adam<T>& adam) {
    auto params = net.named_params();
    for (auto& [name, t] : params)
      out.push_back({std::string(prefix) + "." + name, t->shape, &t->v});
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string base =
          "adam." + std::string(prefix) + "." + params[i].first;
      out.push_back({base + ".m", params[i].second->shape, &adam.m()[i]});
      out.push_back({base + ".v", params[i].second->shape, &adam.v()[i]});
    }
  };
  add_net("s", s, adam_s);
  add_net("d1", d1, adam_d1);
  add_net("d2", d2, adam_d2);
  return out;
}

template <typename T>
void GanState<T>::save(const std::filesystem::path& path) {
  auto binds = bindings();
  std::deque<std::vector<float>> staging;
  std::vector<nn::NamedBlob> blobs;
  for (Binding& b : binds) {
    if constexpr (std::is_same_v<T, float>) {
      blobs.push_back({b.name, b.shape, b.data});
    } else {
      staging.emplace_back(b.data->begin(), b.data->end());
      blobs.push_back({b.name, b.shape, &staging.back()});
    }
  }
  nlohmann::ordered_json meta;
  meta["step"] = step;
  meta["epoch"] = epoch;
  meta["adam_t"] = {{"s", adam_s.t()}, {"d1", adam_d1.t()}, {"d2", adam_d2.t()}};
  nlohmann::ordered_json rng_words = nlohmann::ordered_json::array();
  for (uint64_t w : rng.state()) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(w));
    rng_words.push_back(std::string(buf));
  }
  meta["rng"] = std::move(rng_words);
  nn::save_checkpoint(path, meta, blobs);
}

template <typename T>
void GanState<T>::load(const std::filesystem::path& path) {
  auto binds = bindings();
  std::deque<std::vector<float>> staging;
  std::vector<nn::NamedBlob> blobs;
  for (Binding& b : binds) {
    if constexpr (std::is_same_v<T, float>) {
      blobs.push_back({b.name, b.shape, b.data});
    } else {
      staging.emplace_back();
      blobs.push_back({b.name, b.shape, &staging.back()});
    }
  }
  const nlohmann::json meta = nn::load_checkpoint(path, blobs);
  if constexpr (!std::is_same_v<T, float>) {
    std::size_t i = 0;
    for (Binding& b : binds) {
      b.data->assign(staging[i].begin(), staging[i].end());
      ++i;
    }
  }
  step = meta.at("step").get<uint64_t>();
  epoch = meta.at("epoch").get<int>();
  adam_s.set_t(meta.at("adam_t").at("s").get<long>());
  adam_d1.set_t(meta.at("adam_t").at("d1").get<long>());
  adam_d2.set_t(meta.at("adam_t").at("d2").get<long>());
  std::array<uint64_t, 4> words{};
  const auto& rng_words = meta.at("rng");
  if (!rng_words.is_array() || rng_words.size() != 4)
    throw FormatError("checkpoint: rng state must be 4 words");
  for (int i = 0; i < 4; ++i)
    words[i] = std::stoull(rng_words[i].get<std::string>(), nullptr, 16);
  rng.set_state(words);
}

template <typename T>
class TrainerT {
 public:
  TrainerT(const LoadedDataset& data, const ContextMap& map, TrainConfig cfg)
      : data_(&data), map_(&map), cfg_(std::move(cfg)),
        gan_(cfg_.seed, static_cast<T>(cfg_.lr)) {
    validate(cfg_);
    if (data_->positives.empty())
      throw ConfigError("train: dataset has no positive chips");
    if (cfg_.mode == TrainMode::supervised) {
      for (int idx : data_->positives)
        if (!data_->chips[idx].has_gt())
          throw ConfigError("train: supervised mode needs gt masks on every "
                            "positive chip");
    } else {
      for (int idx : data_->positives)
        if (map_->entries.find(data_->chips[idx].id) == map_->entries.end())
          throw ConfigError("train: positive chip without a context entry; "
                            "rebuild the context map");
    }
    const int hw = data_->tile_size * data_->tile_size;
    ygrad_.resize(hw);
  }

  // One optimization pass (D1, D2, then S) over the given positive chips.
  LossReport step_batch(std::span<const int> chip_indices) {
    const int b = static_cast<int>(chip_indices.size());
    if (b < 1) throw ContractError("step_batch: empty batch");
    const int side = data_->tile_size;
    const int hw = side * side;

    // Assemble the batch: image planes, pseudo planes, context planes.
    struct Item {
      const LoadedChip* chip;
      std::vector<T> x, pseudo, ctx, gt;
    };
    std::vector<Item> items(b);
    for (int i = 0; i < b; ++i) {
      Item& item = items[i];
      item.chip = &data_->chips[chip_indices[i]];
      item.x = nn::to_chw<T>(item.chip->image);
      item.pseudo = nn::pseudo_plane<T>(item.chip->pseudo);
      if (cfg_.mode == TrainMode::supervised) {
        item.gt = nn::pseudo_plane<T>(item.chip->gt);
      } else {
        const TileId ctx_id = sample_context(*map_, item.chip->id, gan_.rng);
        const Raster ctx = apply_context_mode(data_->chip(ctx_id).image,
                                              cfg_.context_mode, gan_.rng);
        item.ctx = nn::to_chw<T>(ctx);
      }
    }

    LossReport report;
    const T inv_b = T(1) / static_cast<T>(b);

    if (cfg_.mode == TrainMode::adversarial) {
      // Predictions are constants for the discriminator phases.
      std::vector<std::vector<T>> yhat(b), if1(b), if2(b);
      for (int i = 0; i < b; ++i) {
        gan_.s.set_input_planes(items[i].x, items[i].pseudo, side, side);
        gan_.s.forward();
        yhat[i] = gan_.s.y().v;
        blend_chw(items[i].x, items[i].ctx, yhat[i], if1[i], hw);
        blend_chw(items[i].ctx, items[i].x, yhat[i], if2[i], hw);
      }

      // D1: real chips against fake positives.
      std::vector<T> d1_real(b), d1_fake(b);
      gan_.d1.zero_param_grads();
      for (int i = 0; i < b; ++i) {
        d1_real[i] = gan_.d1.forward(items[i].x, side, side);
        gan_.d1.backward(grad_log(d1_real[i], inv_b));
        d1_fake[i] = gan_.d1.forward(if1[i], side, side);
        gan_.d1.backward(grad_log_one_minus(d1_fake[i], inv_b));
      }
      report.l_d1 = loss_d(d1_real, d1_fake).value;
      check_finite(report, "d1 update");
      gan_.adam_d1.step();

      // D2: real contexts against fake negatives.
      if (cfg_.use_d2) {
        std::vector<T> d2_real(b), d2_fake(b);
        gan_.d2.zero_param_grads();
        for (int i = 0; i < b; ++i) {
          d2_real[i] = gan_.d2.forward(items[i].ctx, side, side);
          gan_.d2.backward(grad_log(d2_real[i], inv_b));
          d2_fake[i] = gan_.d2.forward(if2[i], side, side);
          gan_.d2.backward(grad_log_one_minus(d2_fake[i], inv_b));
        }
        report.l_d2 = loss_d(d2_real, d2_fake).value;
        check_finite(report, "d2 update");
        gan_.adam_d2.step();
      }

      // Generator: fresh forward with gradients flowing through the
      // compositor into S.
      std::vector<T> p1(b), p2;
      if (cfg_.use_d2) p2.resize(b);
      T loc_sum = T(0);
      gan_.s.zero_param_grads();
      for (int i = 0; i < b; ++i) {
        gan_.s.set_input_planes(items[i].x, items[i].pseudo, side, side);
        gan_.s.forward();
        const std::vector<T>& yh = gan_.s.y().v;
        blend_chw(items[i].x, items[i].ctx, yh, if1[i], hw);
        blend_chw(items[i].ctx, items[i].x, yh, if2[i], hw);

        std::fill(ygrad_.begin(), ygrad_.end(), T(0));
        p1[i] = gan_.d1.forward(if1[i], side, side);
        gan_.d1.backward(grad_g(p1[i], inv_b));
        accumulate_mask_grad(gan_.d1.input_grad(), items[i].x, items[i].ctx,
                             hw);
        if (cfg_.use_d2) {
          p2[i] = gan_.d2.forward(if2[i], side, side);
          gan_.d2.backward(grad_g(p2[i], inv_b));
          accumulate_mask_grad(gan_.d2.input_grad(), items[i].ctx, items[i].x,
                               hw);
        }
        const T bce = loc_bce(yh.data(), items[i].pseudo.data(), yh.size());
        if (bce < static_cast<T>(cfg_.label.rho))
          loc_bce_grad(yh.data(), items[i].pseudo.data(), yh.size(), inv_b,
                       ygrad_.data());
        loc_sum += std::min(bce, static_cast<T>(cfg_.label.rho));

        std::copy(ygrad_.begin(), ygrad_.end(), gan_.s.y().g.begin());
        gan_.s.backward();
      }
      report.l_loc = static_cast<double>(loc_sum) * inv_b;
      report.l_g_adv =
          static_cast<double>(loss_g(p1, p2, T(0), cfg_.loss_variant).value);
      report.total_g = report.l_g_adv + report.l_loc;
      check_finite(report, "generator update");
      gan_.adam_s.step();
    } else {
      // Supervised reference: plain uncapped cross entropy against gt.
      T bce_sum = T(0);
      gan_.s.zero_param_grads();
      for (int i = 0; i < b; ++i) {
        gan_.s.set_input_planes(items[i].x, items[i].pseudo, side, side);
        gan_.s.forward();
        const std::vector<T>& yh = gan_.s.y().v;
        std::fill(ygrad_.begin(), ygrad_.end(), T(0));
        loc_bce_grad(yh.data(), items[i].gt.data(), yh.size(), inv_b,
                     ygrad_.data());
        bce_sum += loc_bce(yh.data(), items[i].gt.data(), yh.size());
        std::copy(ygrad_.begin(), ygrad_.end(), gan_.s.y().g.begin());
        gan_.s.backward();
      }
      report.l_loc = static_cast<double>(bce_sum) * inv_b;
      report.total_g = report.l_loc;
      check_finite(report, "supervised update");
      gan_.adam_s.step();
    }

    ++gan_.step;
    history_.push_back(report);
    return report;
  }

  // Full loop: epochs x shuffled batches over the positive chips, CSV
  // row per step, checkpoint per epoch.
  void run(int epochs, const std::filesystem::path* csv_path,
           const std::filesystem::path* ckpt_dir) {
    std::ofstream csv;
    if (csv_path) {
      csv.open(*csv_path);
      if (!csv) throw IoError("cannot open " + csv_path->string());
      csv << "step,l_d1,l_d2,l_g_adv,l_loc,total_g\n";
    }
    for (int e = 0; e < epochs; ++e) {
      std::vector<int> order = data_->positives;
      for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[i], order[gan_.rng.uniform_int(i + 1)]);
      for (std::size_t at = 0; at < order.size(); at += cfg_.batch_size) {
        const std::size_t end =
            std::min(order.size(), at + static_cast<std::size_t>(cfg_.batch_size));
        const LossReport r = step_batch(
            std::span<const int>(order.data() + at, end - at));
        if (csv_path)
          csv << gan_.step << ',' << format_double(r.l_d1) << ','
              << format_double(r.l_d2) << ',' << format_double(r.l_g_adv)
              << ',' << format_double(r.l_loc) << ','
              << format_double(r.total_g) << '\n';
      }
      ++gan_.epoch;
      if (ckpt_dir) gan_.save(*ckpt_dir / "checkpoint_last.bin");
    }
    if (csv_path && !csv) throw IoError("failed writing " + csv_path->string());
    if (ckpt_dir) gan_.save(*ckpt_dir / "checkpoint_final.bin");
  }

  // Raw generator output; no thresholding.
  Raster predict(const Raster& image, const std::vector<PointXY>& points) {
    const Raster pseudo = make_pseudo_label(points, cfg_.label, image.height,
                                            image.width);
    gan_.s.set_input(image, pseudo);
    gan_.s.forward();
    Raster out(image.height, image.width, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] = static_cast<float>(gan_.s.y().v[i]);
    return out;
  }

  GanState<T>& gan() { return gan_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<LossReport>& history() const { return history_; }

 private:
  // d/dp of −log(p)/b, zero where the clamp binds.
  static T grad_log(T p, T inv_b) {
    const T q = clamp_prob(p);
    return p == q ? -inv_b / q : T(0);
  }
  // d/dp of −log(1 − p)/b.
  static T grad_log_one_minus(T p, T inv_b) {
    const T q = clamp_prob(p);
    return p == q ? inv_b / (T(1) - q) : T(0);
  }
  // Generator term gradient under the configured variant.
  T grad_g(T p, T inv_b) const {
    const T q = clamp_prob(p);
    if (p != q) return T(0);
    if (cfg_.loss_variant == LossVariant::saturating)
      return -inv_b / (T(1) - q);
    return -inv_b / q;
  }

  static void blend_chw(const std::vector<T>& i, const std::vector<T>& i_ctx,
                        const std::vector<T>& y, std::vector<T>& out, int hw) {
    out.resize(i.size());
    for (int ch = 0; ch * hw < static_cast<int>(i.size()); ++ch)
      blend(i.data() + ch * hw, i_ctx.data() + ch * hw, y.data(),
            out.data() + ch * hw, hw, 1);
  }

  // d(fake)/d(ŷ) = i − i_ctx summed over channels, chained with the
  // discriminator's input gradient.
  void accumulate_mask_grad(const std::vector<T>& dfake,
                            const std::vector<T>& i,
                            const std::vector<T>& i_ctx, int hw) {
    const int channels = static_cast<int>(dfake.size()) / hw;
    for (int ch = 0; ch < channels; ++ch)
      for (int p = 0; p < hw; ++p)
        ygrad_[p] += dfake[ch * hw + p] * (i[ch * hw + p] - i_ctx[ch * hw + p]);
  }

  void check_finite(const LossReport& r, const char* phase) const {
    if (std::isfinite(r.l_d1) && std::isfinite(r.l_d2) &&
        std::isfinite(r.l_g_adv) && std::isfinite(r.l_loc))
      return;
    throw TrainError("training aborted at step " +
                     std::to_string(gan_.step + 1) + " (" + phase +
                     "): l_d1=" + format_double(r.l_d1) +
                     " l_d2=" + format_double(r.l_d2) +
                     " l_g_adv=" + format_double(r.l_g_adv) +
                     " l_loc=" + format_double(r.l_loc));
  }

  const LoadedDataset* data_;
  const ContextMap* map_;
  TrainConfig cfg_;
  GanState<T> gan_;
  std::vector<T> ygrad_;
  std::vector<LossReport> history_;
};

using Trainer = TrainerT<float>;

// Inference-only wrapper around a checkpoint.
class Predictor {
 public:
  Predictor(const std::filesystem::path& checkpoint, LabelConfig label)
      : label_(label), gan_(0, 1e-3f) {
    validate(label_);
    gan_.load(checkpoint);
  }

  Raster predict(const Raster& image, const std::vector<PointXY>& points) {
    const Raster pseudo =
        make_pseudo_label(points, label_, image.height, image.width);
    gan_.s.set_input(image, pseudo);
    gan_.s.forward();
    Raster out(image.height, image.width, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] = static_cast<float>(gan_.s.y().v[i]);
    return out;
  }

 private:
  LabelConfig label_;
  GanState<float> gan_;
};

// Evaluates every chip of the dataset (all must carry gt masks) under
// the given binarization threshold and aggregation.
template <typename Model>
MetricsReport evaluate_dataset(Model& model, const LoadedDataset& data,
                               double tau, Aggregation agg) {
  if (data.chips.empty()) throw EvalError("evaluate: dataset is empty");
  std::vector<Confusion> per_chip;
  for (const LoadedChip& chip : data.chips) {
    if (!chip.has_gt())
      throw EvalError("evaluate: chip [" + std::to_string(chip.id.row) +
                      ", " + std::to_string(chip.id.col) +
                      "] has no ground-truth mask");
    const Raster pred = model.predict(chip.image, chip.points);
    per_chip.push_back(confusion(binarize(pred, tau), chip.gt));
  }
  return aggregate(per_chip, agg);
}

}  // namespace pointseg
