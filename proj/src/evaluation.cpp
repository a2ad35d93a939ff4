// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sonotex/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "sonotex/error.hpp"
#include "sonotex/parallel.hpp"
#include "sonotex/rng.hpp"

namespace sonotex {
namespace {

// Runs f, prefixing any library error with the pipeline stage it came from.
template <typename F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  const auto label = [&](const std::exception& e) {
    const std::string what = e.what();
    return what.starts_with(stage + ": ") ? what : stage + ": " + what;
  };
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(label(e));
  } catch (const ChecksumError& e) {
    throw ChecksumError(label(e));
  } catch (const FormatError& e) {
    throw FormatError(label(e));
  } catch (const IoError& e) {
    throw IoError(label(e));
  }
}

std::size_t excerpt_samples(double sample_rate, double excerpt_s) {
  if (!(excerpt_s > 0.0)) throw ValidationError("excerpt length must be positive");
  return static_cast<std::size_t>(std::llround(excerpt_s * sample_rate));
}

AudioClip slice_excerpt(const AudioClip& clip, std::size_t index, std::size_t len) {
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.label = clip.label;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(index * len),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>((index + 1) * len));
  return out;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

std::vector<std::string> sorted_labels(std::span<const Recording> dataset) {
  std::set<std::string> labels;
  for (const auto& r : dataset) labels.insert(r.class_label);
  return {labels.begin(), labels.end()};
}

}  // namespace

std::string excerpt_id(const std::string& recording_id, std::size_t index) {
  return recording_id + "#" + std::to_string(index);
}

std::size_t excerpt_count(const AudioClip& clip, double excerpt_s) {
  const std::size_t len = excerpt_samples(clip.sample_rate, excerpt_s);
  return len == 0 ? 0 : clip.samples.size() / len;
}

std::vector<Excerpt> segment_excerpts(const Recording& rec, double excerpt_s) {
  const std::size_t len = excerpt_samples(rec.clip.sample_rate, excerpt_s);
  const std::size_t n = excerpt_count(rec.clip, excerpt_s);
  std::vector<Excerpt> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Excerpt ex;
    ex.clip = slice_excerpt(rec.clip, i, len);
    ex.clip.source_id = excerpt_id(rec.recording_id, i);
    ex.clip.label = rec.class_label;
    ex.recording_id = rec.recording_id;
    ex.index = i;
    out.push_back(std::move(ex));
  }
  return out;
}

SplitPlan split_recordings(std::span<const Recording> dataset, std::size_t per_class,
                           double excerpt_s, std::uint64_t seed) {
  if (per_class < 1) throw ValidationError("split: per_class must be >= 1");
  if (dataset.empty()) throw ValidationError("split: empty dataset");

  std::map<std::string, std::vector<const Recording*>> by_class;
  std::set<std::string> seen_ids;
  for (const auto& rec : dataset) {
    if (!seen_ids.insert(rec.recording_id).second)
      throw ValidationError("split: duplicate recording id '" + rec.recording_id + "'");
    by_class[rec.class_label].push_back(&rec);
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.per_class = per_class;
  plan.excerpt_s = excerpt_s;
  std::vector<std::string> problems;

  for (auto& [label, recs] : by_class) {
    std::sort(recs.begin(), recs.end(),
              [](const Recording* a, const Recording* b) { return a->recording_id < b->recording_id; });
    if (recs.size() < 2) {
      problems.push_back("class '" + label + "' has " + std::to_string(recs.size()) +
                         " recording; at least 2 are needed for a recording-disjoint split");
      continue;
    }
    std::string key;
    for (const auto* r : recs) key += r->recording_id + '\n';
    Rng rng(seed, fnv1a64(key));
    shuffle(recs, rng);

    std::vector<ExcerptRef> train_pool, test_pool;
    std::size_t train_recs = 0;
    for (const auto* r : recs) {
      const std::size_t n = excerpt_count(r->clip, excerpt_s);
      auto& pool = train_pool.size() < per_class ? train_pool : test_pool;
      if (&pool == &train_pool) ++train_recs;
      for (std::size_t i = 0; i < n; ++i) pool.push_back({r->recording_id, label, i});
    }
    if (train_pool.size() < per_class || test_pool.size() < per_class) {
      problems.push_back("class '" + label + "': train pool " + std::to_string(train_pool.size()) +
                         " excerpts from " + std::to_string(train_recs) + " recordings, test pool " +
                         std::to_string(test_pool.size()) + " excerpts from " +
                         std::to_string(recs.size() - train_recs) + " recordings; need " +
                         std::to_string(per_class) + " per side");
      continue;
    }
    for (auto* pool : {&train_pool, &test_pool}) {
      for (std::size_t i = 0; i < per_class; ++i)
        std::swap((*pool)[i], (*pool)[i + rng.uniform_index(pool->size() - i)]);
      auto& dst = pool == &train_pool ? plan.train : plan.test;
      dst.insert(dst.end(), pool->begin(), pool->begin() + static_cast<std::ptrdiff_t>(per_class));
    }
  }
  if (!problems.empty()) {
    std::string msg = "split: infeasible request";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.test.begin(), plan.test.end());
  check_recording_disjoint(plan);
  return plan;
}

void check_recording_disjoint(const SplitPlan& plan) {
  std::set<std::string> train_ids;
  for (const auto& r : plan.train) train_ids.insert(r.recording_id);
  for (const auto& r : plan.test)
    if (train_ids.count(r.recording_id))
      throw ValidationError("split: recording '" + r.recording_id + "' appears in train and test");
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size(), classes_.size(), 0) {
  if (!std::is_sorted(classes_.begin(), classes_.end()) ||
      std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end())
    throw ValidationError("confusion matrix classes must be sorted and unique");
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  const auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
  if (it == classes_.end() || *it != label)
    throw ValidationError("confusion matrix: unknown class '" + label + "'");
  return static_cast<std::size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(const std::string& truth, const std::string& predicted) {
  ++counts_(index_of(truth), index_of(predicted));
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::size_t sum = 0;
  for (std::size_t v : counts_.row(truth)) sum += v;
  return sum;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (std::size_t v : counts_.flat()) sum += v;
  return sum;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < classes_.size(); ++i) sum += counts_(i, i);
  return sum;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

std::string ConfusionMatrix::to_csv() const {
  std::string out = "true/predicted";
  for (const auto& c : classes_) out += "," + c;
  out += '\n';
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    out += classes_[i];
    for (std::size_t v : counts_.row(i)) out += "," + std::to_string(v);
    out += '\n';
  }
  return out;
}

std::string ConfusionMatrix::to_rates_csv() const {
  std::string out = "true/predicted";
  for (const auto& c : classes_) out += "," + c;
  out += '\n';
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    out += classes_[i];
    const double n = static_cast<double>(row_total(i));
    for (std::size_t v : counts_.row(i)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.1f", n > 0 ? 100.0 * static_cast<double>(v) / n : 0.0);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void ExperimentConfig::validate() const {
  stft.validate();
  if (!(sample_rate > 0.0)) throw ValidationError("sample_rate must be positive");
  if (sizes.empty()) throw ValidationError("no block sizes");
  for (const auto& s : sizes)
    if (s.w < 1 || s.l < 1) throw ValidationError("invalid block size " + s.to_string());
  if (per_size < 1) throw ValidationError("per_size must be >= 1");
  if (per_class < 1) throw ValidationError("per_class must be >= 1");
  if (!(excerpt_s > 0.0)) throw ValidationError("excerpt_s must be positive");
}

PreparedData prepare_data(std::span<const Recording> dataset, const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<Recording> resampled(dataset.size());
  staged("resample", [&] {
    parallel_for(dataset.size(), cfg.threads, [&](std::size_t i) {
      resampled[i].clip = resample(dataset[i].clip, cfg.sample_rate);
      resampled[i].class_label = dataset[i].class_label;
      resampled[i].recording_id = dataset[i].recording_id;
    });
  });

  PreparedData data;
  data.plan = staged("split", [&] {
    return split_recordings(resampled, cfg.per_class, cfg.excerpt_s, cfg.split_seed);
  });

  std::unordered_map<std::string, const Recording*> by_id;
  for (const auto& r : resampled) by_id[r.recording_id] = &r;
  const std::size_t len = excerpt_samples(cfg.sample_rate, cfg.excerpt_s);

  auto spectrograms = [&](const std::vector<ExcerptRef>& refs) {
    std::vector<LogSpectrogram> out(refs.size());
    staged("spectrogram", [&] {
      parallel_for(refs.size(), cfg.threads, [&](std::size_t i) {
        AudioClip clip = slice_excerpt(by_id.at(refs[i].recording_id)->clip, refs[i].index, len);
        clip.source_id = refs[i].id();
        clip.label = refs[i].label;
        out[i] = compute_log_spectrogram(clip, cfg.stft);
      });
    });
    return out;
  };
  data.train = spectrograms(data.plan.train);
  data.test = spectrograms(data.plan.test);
  return data;
}

namespace {

FeatureTable make_table(const std::vector<ExcerptRef>& refs,
                        const std::vector<FeatureVector>& features, const std::string& dict_id) {
  FeatureTable table;
  table.dictionary_id = dict_id;
  table.rows.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i)
    table.rows.push_back({refs[i].id(), refs[i].label, features[i].values});
  return table;
}

// Fits on train_table, predicts test_table, fills the confusion matrix.
std::pair<std::vector<Prediction>, ConfusionMatrix> classify_tables(
    const FeatureTable& train_table, const FeatureTable& test_table,
    std::vector<std::string> classes, const ExperimentConfig& cfg) {
  const NNModel model = staged("classifier", [&] {
    return NNModel::fit(from_feature_table(train_table), FitOptions{cfg.standardize});
  });
  std::vector<FeatureVector> queries;
  queries.reserve(test_table.rows.size());
  for (const auto& row : test_table.rows)
    queries.push_back({row.values, test_table.dictionary_id});
  auto predictions = model.predict_batch(queries, cfg.threads);
  ConfusionMatrix cm(std::move(classes));
  for (std::size_t i = 0; i < predictions.size(); ++i)
    cm.add(test_table.rows[i].label, predictions[i].label);
  return {std::move(predictions), std::move(cm)};
}

}  // namespace

ExperimentResult run_experiment(std::span<const Recording> dataset, const ExperimentConfig& cfg) {
  PreparedData data = prepare_data(dataset, cfg);
  ExperimentResult result;
  result.dictionary = staged("dictionary", [&] {
    return sample_blocks(data.train, cfg.sizes, cfg.per_size, cfg.dictionary_seed, cfg.stft,
                         cfg.sample_rate);
  });
  const std::string dict_id = result.dictionary.id();
  staged("features", [&] {
    result.train_features = make_table(
        data.plan.train, extract_features_batch(data.train, result.dictionary, cfg.threads), dict_id);
    result.test_features = make_table(
        data.plan.test, extract_features_batch(data.test, result.dictionary, cfg.threads), dict_id);
  });
  auto [predictions, cm] =
      classify_tables(result.train_features, result.test_features, sorted_labels(dataset), cfg);
  result.predictions = std::move(predictions);
  result.confusion = std::move(cm);
  result.accuracy = result.confusion.accuracy();
  result.plan = std::move(data.plan);
  return result;
}

SweepResult sweep_features(std::span<const Recording> dataset, const ExperimentConfig& cfg,
                           std::span<const std::uint32_t> schedule) {
  if (schedule.empty()) throw ValidationError("sweep: empty per_size schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1) throw ValidationError("sweep: per_size values must be >= 1");
    if (i > 0 && schedule[i] <= schedule[i - 1])
      throw ValidationError("sweep: schedule must be strictly increasing");
  }
  ExperimentConfig full = cfg;
  full.per_size = schedule.back();
  PreparedData data = prepare_data(dataset, full);
  const Dictionary dictionary = staged("dictionary", [&] {
    return sample_blocks(data.train, full.sizes, full.per_size, full.dictionary_seed, full.stft,
                         full.sample_rate);
  });
  FeatureTable train_all, test_all;
  staged("features", [&] {
    const std::string id = dictionary.id();
    train_all = make_table(data.plan.train,
                           extract_features_batch(data.train, dictionary, full.threads), id);
    test_all = make_table(data.plan.test,
                          extract_features_batch(data.test, dictionary, full.threads), id);
  });

  const auto classes = sorted_labels(dataset);
  SweepResult result;
  for (const std::uint32_t per_size : schedule) {
    const std::size_t m = static_cast<std::size_t>(per_size) * full.sizes.size();
    const std::string id = dictionary.prefix(per_size).id();
    FeatureTable train = train_all.prefix(m);
    FeatureTable test = test_all.prefix(m);
    train.dictionary_id = id;
    test.dictionary_id = id;
    auto [predictions, cm] = classify_tables(train, test, classes, full);
    result.rows.push_back({per_size, m, cm.accuracy()});
    result.train_features.push_back(std::move(train));
    result.test_features.push_back(std::move(test));
  }
  return result;
}

std::vector<SweepSummaryRow> summarize_sweeps(std::span<const SweepResult> runs) {
  if (runs.empty()) return {};
  const std::size_t steps = runs.front().rows.size();
  std::vector<SweepSummaryRow> out(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    out[s].features = runs.front().rows[s].features;
    double sum = 0.0;
    for (const auto& run : runs) {
      if (run.rows.size() != steps || run.rows[s].features != out[s].features)
        throw ValidationError("summarize_sweeps: runs use different schedules");
      sum += run.rows[s].accuracy;
    }
    const double n = static_cast<double>(runs.size());
    out[s].mean_accuracy = sum / n;
    double var = 0.0;
    for (const auto& run : runs) {
      const double d = run.rows[s].accuracy - out[s].mean_accuracy;
      var += d * d;
    }
    out[s].std_accuracy = std::sqrt(var / n);
  }
  return out;
}

std::string sweep_to_csv(std::span<const SweepSummaryRow> rows) {
  std::string out = "M,mean_accuracy,std_accuracy\n";
  for (const auto& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", r.features, r.mean_accuracy, r.std_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace sonotex
