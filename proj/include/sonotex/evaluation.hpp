// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sonotex/audio.hpp"
#include "sonotex/classifier.hpp"
#include "sonotex/dictionary.hpp"
#include "sonotex/dsp.hpp"
#include "sonotex/features.hpp"
#include "sonotex/grid.hpp"

namespace sonotex {

struct Recording {
  AudioClip clip;
  std::string class_label;
  std::string recording_id;
};

// Fixed-length, non-overlapping slice of a recording.
struct Excerpt {
  AudioClip clip;  // clip.source_id == excerpt id, clip.label == class label
  std::string recording_id;
  std::size_t index = 0;
};

std::string excerpt_id(const std::string& recording_id, std::size_t index);

// Number of whole excerpts of `excerpt_s` seconds in a clip.
std::size_t excerpt_count(const AudioClip& clip, double excerpt_s);

// floor(duration / excerpt_s) contiguous excerpts; any remainder is dropped.
std::vector<Excerpt> segment_excerpts(const Recording& rec, double excerpt_s);

struct ExcerptRef {
  std::string recording_id;
  std::string label;
  std::size_t index = 0;

  std::string id() const { return excerpt_id(recording_id, index); }
  auto operator<=>(const ExcerptRef&) const = default;
};

// Train/test excerpt lists. No recording contributes to both sides. Both
// lists are sorted by (recording_id, index), independent of label names.
struct SplitPlan {
  std::vector<ExcerptRef> train;
  std::vector<ExcerptRef> test;
  std::uint64_t seed = 0;
  std::size_t per_class = 0;
  double excerpt_s = 0.0;
};

// Per class: shuffle its recordings, move them into the train pool until it
// holds per_class excerpts, leave the rest as the test pool, then draw
// per_class excerpts uniformly without replacement from each pool. The RNG
// stream of a class is keyed by the seed and its recording ids only.
// Throws ValidationError listing every infeasible class.
SplitPlan split_recordings(std::span<const Recording> dataset, std::size_t per_class,
                           double excerpt_s, std::uint64_t seed);

// Throws ValidationError when a recording id appears on both sides.
void check_recording_disjoint(const SplitPlan& plan);

// Rows are true labels, columns predicted labels; classes sorted.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> classes);

  void add(const std::string& truth, const std::string& predicted);

  const std::vector<std::string>& classes() const { return classes_; }
  const Grid<std::size_t>& counts() const { return counts_; }
  std::size_t count(std::size_t truth, std::size_t predicted) const {
    return counts_(truth, predicted);
  }
  std::size_t row_total(std::size_t truth) const;
  std::size_t total() const;
  std::size_t trace() const;
  double accuracy() const;

  // "true/predicted,<c1>,...,<cn>" header then one count row per class.
  std::string to_csv() const;
  // Same layout with row percentages (each row sums to 100).
  std::string to_rates_csv() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t index_of(const std::string& label) const;

  std::vector<std::string> classes_;
  Grid<std::size_t> counts_;
};

struct ExperimentConfig {
  StftConfig stft;
  double sample_rate = kDefaultSampleRate;
  std::vector<BlockSize> sizes = default_sizes();
  std::uint32_t per_size = 60;
  std::size_t per_class = 50;
  double excerpt_s = 5.0;
  std::uint64_t split_seed = 0;
  std::uint64_t dictionary_seed = 0;
  unsigned threads = 1;
  bool standardize = false;

  void validate() const;
};

struct ExperimentResult {
  SplitPlan plan;
  Dictionary dictionary;
  FeatureTable train_features;
  FeatureTable test_features;
  std::vector<Prediction> predictions;  // in test order
  ConfusionMatrix confusion;
  double accuracy = 0.0;
};

// Training-side state shared by `train`, `evaluate` and `sweep`: the split,
// the excerpt spectrograms of both sides, and the recordings at the analysis
// rate.
struct PreparedData {
  SplitPlan plan;
  std::vector<LogSpectrogram> train;
  std::vector<LogSpectrogram> test;
};

// Resamples, splits and computes log-spectrograms. Errors carry a stage
// prefix ("split: ", "spectrogram: ").
PreparedData prepare_data(std::span<const Recording> dataset, const ExperimentConfig& cfg);

// segment -> split -> spectrograms -> sample dictionary from training
// excerpts -> features -> 1-NN -> confusion matrix.
ExperimentResult run_experiment(std::span<const Recording> dataset, const ExperimentConfig& cfg);

struct SweepRow {
  std::uint32_t per_size = 0;
  std::size_t features = 0;  // M
  double accuracy = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // Feature tables per schedule step, to make the prefix property checkable.
  std::vector<FeatureTable> train_features;
  std::vector<FeatureTable> test_features;
};

// Accuracy at each per_size of a strictly increasing schedule. One dictionary
// is learned at the largest per_size; each step uses its leading
// per_size * |sizes| blocks, which equals learning that step from scratch.
SweepResult sweep_features(std::span<const Recording> dataset, const ExperimentConfig& cfg,
                           std::span<const std::uint32_t> per_size_schedule);

struct SweepSummaryRow {
  std::size_t features = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over seeds
};

std::vector<SweepSummaryRow> summarize_sweeps(std::span<const SweepResult> runs);
std::string sweep_to_csv(std::span<const SweepSummaryRow> rows);

struct SynthSpec {
  std::size_t classes = 4;  // 1..8
  std::size_t recordings_per_class = 4;
  double seconds_per_recording = 30.0;
  std::uint64_t seed = 0;
  double sample_rate = kDefaultSampleRate;

  void validate() const;
};

// Label of synthetic class `index` (0-based).
std::string synth_class_name(std::size_t index);

// Texture-distinct synthetic recordings: stable harmonic notes with sharp
// onsets, vibrato tones without onsets, percussive noise-burst trains and
// smooth broadband noise, plus four more variants for 8-class runs. Each
// recording draws its own base pitch and tempo. Samples are pre-quantized
// to 16-bit PCM so a written-and-reloaded dataset is bit-identical.
// recording_id is "<class>/<name>.wav".
std::vector<Recording> synth_dataset(const SynthSpec& spec);

// Reads <root>/<class>/<recording>.wav; recording_id is the path relative
// to root. Classes and files are sorted. When `required_classes` is given,
// each must exist as a directory. Throws ValidationError for a missing or
// empty tree.
std::vector<Recording> load_dataset(const std::filesystem::path& root,
                                    std::span<const std::string> required_classes = {});

// Writes recordings as 16-bit WAV under root/<recording_id>.
void write_dataset(const std::filesystem::path& root, std::span<const Recording> dataset);

}  // namespace sonotex
