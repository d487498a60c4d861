#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pointseg/raster.hpp"

namespace pointseg {

struct Confusion {
  long long tp = 0, fp = 0, fn = 0, tn = 0;

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  long long total() const { return tp + fp + fn + tn; }
};

// 1 where y_hat >= tau (ties map to positive). tau must be in (0,1) and
// the mask single-channel.
Raster binarize(const Raster& y_hat, double tau = 0.5);

// Pixel counts between two binary single-channel masks of equal shape.
Confusion confusion(const Raster& pred, const Raster& gt);

struct MetricsReport {
  std::string aggregation = "micro";
  double dice = 0.0;
  double jaccard = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int n_chips = 0;
};

// dice = 2tp/(2tp+fp+fn), jaccard = tp/(tp+fp+fn), precision = tp/(tp+fp),
// recall = tp/(tp+fn). When tp=fp=fn=0 every metric is vacuously 1;
// otherwise a zero denominator yields 0.
MetricsReport metrics_from(const Confusion& c);

enum class Aggregation { micro, macro };

// micro: metrics of the summed confusion; macro: mean of per-chip
// metrics. Throws EvalError on an empty list.
MetricsReport aggregate(const std::vector<Confusion>& per_chip,
                        Aggregation agg);

void save_metrics(const MetricsReport& report,
                  const std::filesystem::path& path);
MetricsReport load_metrics(const std::filesystem::path& path);

}  // namespace pointseg
