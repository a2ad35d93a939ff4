// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sonotex/features.hpp"

namespace sonotex {

struct LabeledVector {
  FeatureVector features;
  std::string label;
  std::string excerpt_id;
};

struct Prediction {
  std::string label;
  double distance = 0.0;  // Euclidean, in the model's feature space
  std::string neighbor_id;
  std::size_t neighbor_index = 0;
};

struct FitOptions {
  // z-score every coordinate with training mean/std before matching.
  // Off by default; exists for ablations.
  bool standardize = false;
};

inline constexpr const char* kTieBreakRule = "earliest-insertion-v1";

// 1-nearest-neighbour model under Euclidean distance. Ties go to the
// training point inserted first. Immutable once fitted.
class NNModel {
 public:
  static NNModel fit(std::vector<LabeledVector> examples, FitOptions options = {});

  Prediction predict(const FeatureVector& x) const;
  std::vector<Prediction> predict_batch(std::span<const FeatureVector> xs,
                                        unsigned threads = 1) const;

  std::size_t size() const { return examples_.size(); }
  std::size_t dimension() const { return dimension_; }
  const std::string& dictionary_id() const { return dictionary_id_; }
  bool standardized() const { return options_.standardize; }
  const std::vector<LabeledVector>& examples() const { return examples_; }

 private:
  NNModel() = default;
  std::vector<double> transform(std::span<const double> x) const;

  std::vector<LabeledVector> examples_;
  FitOptions options_;
  std::size_t dimension_ = 0;
  std::string dictionary_id_;
  std::vector<double> mean_;
  std::vector<double> inv_scale_;
  std::vector<double> points_;  // transformed, row-major size() x dimension()
};

inline NNModel fit(std::vector<LabeledVector> examples, FitOptions options = {}) {
  return NNModel::fit(std::move(examples), options);
}

// Model on disk: <dir>/model.json (dictionary hash, tie-break rule,
// standardize flag, shape) next to <dir>/train_features.csv.
void save_model(const NNModel& model, const std::filesystem::path& dir);
NNModel load_model(const std::filesystem::path& dir);

FeatureTable to_feature_table(std::span<const LabeledVector> examples);
std::vector<LabeledVector> from_feature_table(const FeatureTable& table);

}  // namespace sonotex
