// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sonotex/classifier.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "binio.hpp"
#include "sonotex/error.hpp"
#include "sonotex/parallel.hpp"

namespace sonotex {

NNModel NNModel::fit(std::vector<LabeledVector> examples, FitOptions options) {
  if (examples.empty()) throw ValidationError("fit: no training examples");
  NNModel model;
  model.options_ = options;
  model.dimension_ = examples.front().features.size();
  model.dictionary_id_ = examples.front().features.dictionary_id;
  for (const auto& ex : examples) {
    if (ex.features.size() != model.dimension_)
      throw ValidationError("fit: excerpt '" + ex.excerpt_id + "' has " +
                            std::to_string(ex.features.size()) + " features, expected " +
                            std::to_string(model.dimension_));
    if (ex.features.dictionary_id != model.dictionary_id_)
      throw ValidationError("fit: excerpt '" + ex.excerpt_id + "' was extracted with dictionary " +
                            ex.features.dictionary_id + ", expected " + model.dictionary_id_);
  }

  const std::size_t n = examples.size(), d = model.dimension_;
  model.mean_.assign(d, 0.0);
  model.inv_scale_.assign(d, 1.0);
  if (options.standardize) {
    for (const auto& ex : examples)
      for (std::size_t j = 0; j < d; ++j) model.mean_[j] += ex.features.values[j];
    for (double& m : model.mean_) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& ex : examples)
      for (std::size_t j = 0; j < d; ++j) {
        const double dv = ex.features.values[j] - model.mean_[j];
        var[j] += dv * dv;
      }
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(n));
      model.inv_scale_[j] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
  }

  model.examples_ = std::move(examples);
  model.points_.reserve(n * d);
  for (const auto& ex : model.examples_) {
    const auto t = model.transform(ex.features.values);
    model.points_.insert(model.points_.end(), t.begin(), t.end());
  }
  return model;
}

std::vector<double> NNModel::transform(std::span<const double> x) const {
  if (!options_.standardize) return {x.begin(), x.end()};
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean_[j]) * inv_scale_[j];
  return out;
}

Prediction NNModel::predict(const FeatureVector& x) const {
  if (examples_.empty()) throw ValidationError("predict: empty model");
  if (x.size() != dimension_)
    throw ValidationError("predict: query has " + std::to_string(x.size()) +
                          " features, model expects " + std::to_string(dimension_));
  if (!x.dictionary_id.empty() && !dictionary_id_.empty() && x.dictionary_id != dictionary_id_)
    throw ValidationError("predict: query extracted with dictionary " + x.dictionary_id +
                          ", model uses " + dictionary_id_);

  const auto q = transform(x.values);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const double* p = points_.data() + i * dimension_;
    double d2 = 0.0;
    for (std::size_t j = 0; j < dimension_; ++j) {
      const double diff = q[j] - p[j];
      d2 += diff * diff;
    }
    // Strict comparison keeps the earliest point on ties.
    if (d2 < best) {
      best = d2;
      best_i = i;
    }
  }
  return {examples_[best_i].label, std::sqrt(best), examples_[best_i].excerpt_id, best_i};
}

std::vector<Prediction> NNModel::predict_batch(std::span<const FeatureVector> xs,
                                               unsigned threads) const {
  std::vector<Prediction> out(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t i) { out[i] = predict(xs[i]); });
  return out;
}

FeatureTable to_feature_table(std::span<const LabeledVector> examples) {
  FeatureTable table;
  if (!examples.empty()) table.dictionary_id = examples.front().features.dictionary_id;
  for (const auto& ex : examples) table.rows.push_back({ex.excerpt_id, ex.label, ex.features.values});
  return table;
}

std::vector<LabeledVector> from_feature_table(const FeatureTable& table) {
  std::vector<LabeledVector> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows)
    out.push_back({FeatureVector{row.values, table.dictionary_id}, row.label, row.excerpt_id});
  return out;
}

void save_model(const NNModel& model, const std::filesystem::path& dir) {
  nlohmann::ordered_json header;
  header["format"] = "sonotex-nn";
  header["version"] = 1;
  header["dictionary_id"] = model.dictionary_id();
  header["metric"] = "euclidean";
  header["tie_break"] = kTieBreakRule;
  header["standardize"] = model.standardized();
  header["dimension"] = model.dimension();
  header["count"] = model.size();
  header["features"] = "train_features.csv";
  detail::write_text_file(dir / "model.json", header.dump(2) + "\n");
  save_features_csv(to_feature_table(model.examples()), dir / "train_features.csv");
}

NNModel load_model(const std::filesystem::path& dir) {
  const auto path = dir / "model.json";
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (header.value("format", "") != "sonotex-nn")
    throw FormatError(path.string() + ": not a sonotex model header");
  if (header.value("tie_break", "") != kTieBreakRule)
    throw FormatError(path.string() + ": unsupported tie-break rule '" +
                      header.value("tie_break", "") + "'");
  const auto table =
      load_features_csv(dir / header.value("features", std::string("train_features.csv")));
  const std::string dict_id = header.value("dictionary_id", "");
  if (table.dictionary_id != dict_id)
    throw ValidationError(path.string() + ": feature file dictionary " + table.dictionary_id +
                          " does not match model header " + dict_id);
  FitOptions opts;
  opts.standardize = header.value("standardize", false);
  auto model = NNModel::fit(from_feature_table(table), opts);
  if (model.dimension() != header.value("dimension", std::size_t{0}) ||
      model.size() != header.value("count", std::size_t{0}))
    throw FormatError(path.string() + ": shape disagrees with " +
                      header.value("features", std::string("train_features.csv")));
  return model;
}

}  // namespace sonotex
