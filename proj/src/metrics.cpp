#include "pointseg/metrics.hpp"

#include <fstream>

#include <json.hpp>

#include "pointseg/errors.hpp"

namespace pointseg {

Raster binarize(const Raster& y_hat, double tau) {
  if (tau <= 0.0 || tau >= 1.0)
    throw ContractError("binarize: tau must be in (0, 1)");
  if (y_hat.channels != 1)
    throw ContractError("binarize: mask must be single-channel");
  Raster out = y_hat;
  for (float& v : out.data) v = (v >= tau) ? 1.0f : 0.0f;
  return out;
}

Confusion confusion(const Raster& pred, const Raster& gt) {
  if (pred.height != gt.height || pred.width != gt.width ||
      pred.channels != 1 || gt.channels != 1)
    throw ContractError("confusion: masks must be single-channel, same shape");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data[i] >= 0.5f;
    const bool g = gt.data[i] >= 0.5f;
    if (p && g)
      ++c.tp;
    else if (p && !g)
      ++c.fp;
    else if (!p && g)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

MetricsReport metrics_from(const Confusion& c) {
  MetricsReport r;
  r.n_chips = 1;
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) {
    r.dice = r.jaccard = r.precision = r.recall = 1.0;
    return r;
  }
  const auto ratio = [](long long num, long long den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  r.jaccard = ratio(c.tp, c.tp + c.fp + c.fn);
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  return r;
}

MetricsReport aggregate(const std::vector<Confusion>& per_chip,
                        Aggregation agg) {
  if (per_chip.empty()) throw EvalError("aggregate: no chips to evaluate");
  MetricsReport r;
  r.n_chips = static_cast<int>(per_chip.size());
  if (agg == Aggregation::micro) {
    Confusion sum;
    for (const Confusion& c : per_chip) sum += c;
    MetricsReport m = metrics_from(sum);
    r.aggregation = "micro";
    r.dice = m.dice;
    r.jaccard = m.jaccard;
    r.precision = m.precision;
    r.recall = m.recall;
    return r;
  }
  r.aggregation = "macro";
  for (const Confusion& c : per_chip) {
    MetricsReport m = metrics_from(c);
    r.dice += m.dice;
    r.jaccard += m.jaccard;
    r.precision += m.precision;
    r.recall += m.recall;
  }
  const double n = static_cast<double>(per_chip.size());
  r.dice /= n;
  r.jaccard /= n;
  r.precision /= n;
  r.recall /= n;
  return r;
}

void save_metrics(const MetricsReport& report,
                  const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["aggregation"] = report.aggregation;
  doc["dice"] = report.dice;
  doc["jaccard"] = report.jaccard;
  doc["precision"] = report.precision;
  doc["recall"] = report.recall;
  doc["n_chips"] = report.n_chips;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

MetricsReport load_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("metrics: " + path.string() + ": " + e.what());
  }
  MetricsReport r;
  try {
    r.aggregation = doc.at("aggregation").get<std::string>();
    r.dice = doc.at("dice").get<double>();
    r.jaccard = doc.at("jaccard").get<double>();
    r.precision = doc.at("precision").get<double>();
    r.recall = doc.at("recall").get<double>();
    r.n_chips = doc.at("n_chips").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("metrics: " + path.string() + ": " + e.what());
  }
  return r;
}

}  // namespace pointseg
