// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "sonotex/error.hpp"
#include "sonotex/evaluation.hpp"

using namespace sonotex;
using namespace sonotex::testing;

namespace {

Recording tone_recording(std::string label, std::string id, double freq, double seconds,
                         double rate = 1000.0) {
  auto clip = sine_clip(freq, rate, static_cast<std::size_t>(std::llround(seconds * rate)));
  return {clip, std::move(label), std::move(id)};
}

// Recordings of `lengths[c][r]` seconds (1 s excerpts) at 100 Hz.
std::vector<Recording> layout(const std::vector<std::vector<int>>& lengths) {
  std::vector<Recording> out;
  for (std::size_t c = 0; c < lengths.size(); ++c)
    for (std::size_t r = 0; r < lengths[c].size(); ++r) {
      const std::string label = "c" + std::to_string(c);
      AudioClip clip;
      clip.sample_rate = 100.0;
      clip.samples.assign(100 * lengths[c][r], 0.1);
      out.push_back({clip, label, label + "/r" + std::to_string(r)});
    }
  return out;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.per_size = 4;
  cfg.per_class = 3;
  cfg.excerpt_s = 1.0;
  cfg.split_seed = 5;
  cfg.dictionary_seed = 6;
  return cfg;
}

std::vector<Recording> small_synth(std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.recordings_per_class = 3;
  spec.seconds_per_recording = 4.0;
  spec.seed = seed;
  return synth_dataset(spec);
}

}  // namespace

TEST_CASE("segmentation drops the remainder") {
  auto rec = tone_recording("a", "a/1.wav", 50.0, 17.0);
  auto ex = segment_excerpts(rec, 5.0);
  REQUIRE(ex.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ex[i].index == i);
    CHECK(ex[i].recording_id == "a/1.wav");
    CHECK(ex[i].clip.source_id == "a/1.wav#" + std::to_string(i));
    CHECK(ex[i].clip.label == "a");
    CHECK(ex[i].clip.samples.size() == 5000);
    CHECK(ex[i].clip.samples.front() == rec.clip.samples[i * 5000]);
    CHECK(ex[i].clip.samples.back() == rec.clip.samples[i * 5000 + 4999]);
  }

  auto five = tone_recording("a", "a/2.wav", 50.0, 5.0);
  const auto one = segment_excerpts(five, 5.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].clip.samples == five.clip.samples);

  CHECK(segment_excerpts(tone_recording("a", "a/3.wav", 50.0, 4.9), 5.0).empty());
  CHECK(excerpt_count(rec.clip, 5.0) == 3);
  CHECK_THROWS_AS(segment_excerpts(rec, 0.0), ValidationError);
}

TEST_CASE("two recordings split into one train and one test recording") {
  const auto data = layout({{4, 4}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto plan = split_recordings(data, 3, 1.0, seed);
    REQUIRE(plan.train.size() == 3);
    REQUIRE(plan.test.size() == 3);
    std::set<std::string> train_recs, test_recs;
    for (const auto& e : plan.train) train_recs.insert(e.recording_id);
    for (const auto& e : plan.test) test_recs.insert(e.recording_id);
    CHECK(train_recs.size() == 1);
    CHECK(test_recs.size() == 1);
    CHECK(*train_recs.begin() != *test_recs.begin());
    CHECK(std::is_sorted(plan.train.begin(), plan.train.end()));
  }
}

TEST_CASE("every split is recording-disjoint") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> len(0, 9), nrec(2, 6), ncls(1, 4), pc(1, 6);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::vector<int>> lengths(ncls(gen));
    for (auto& c : lengths) {
      c.resize(nrec(gen));
      for (int& l : c) l = len(gen);
    }
    const auto data = layout(lengths);
    const std::size_t per_class = pc(gen);
    try {
      const auto plan = split_recordings(data, per_class, 1.0, trial);
      ++feasible;
      std::set<std::string> train_recs;
      for (const auto& e : plan.train) train_recs.insert(e.recording_id);
      for (const auto& e : plan.test) CHECK(train_recs.count(e.recording_id) == 0);
      CHECK_NOTHROW(check_recording_disjoint(plan));
      CHECK(plan.train.size() == per_class * lengths.size());
      CHECK(plan.test.size() == per_class * lengths.size());
      std::set<ExcerptRef> unique(plan.train.begin(), plan.train.end());
      unique.insert(plan.test.begin(), plan.test.end());
      CHECK(unique.size() == 2 * per_class * lengths.size());
    } catch (const ValidationError&) {
    }
  }
  CHECK(feasible > 50);

  SplitPlan bad;
  bad.train = {{"x/1", "x", 0}};
  bad.test = {{"x/1", "x", 1}};
  CHECK_THROWS_WITH_AS(check_recording_disjoint(bad), doctest::Contains("x/1"), ValidationError);
}

TEST_CASE("infeasible splits name the class") {
  CHECK_THROWS_WITH_AS(split_recordings(layout({{4, 4}, {8}}), 2, 1.0, 0),
                       doctest::Contains("c1"), ValidationError);
  CHECK_THROWS_WITH_AS(split_recordings(layout({{4, 4}, {2, 2}}), 3, 1.0, 0),
                       doctest::Contains("c1"), ValidationError);
  CHECK_THROWS_AS(split_recordings({}, 1, 1.0, 0), ValidationError);
  CHECK_THROWS_AS(split_recordings(layout({{4, 4}}), 0, 1.0, 0), ValidationError);
}

TEST_CASE("splits are deterministic and depend on the seed") {
  const auto data = layout({{5, 3, 6, 2}, {4, 4, 4}});
  const auto a = split_recordings(data, 3, 1.0, 9);
  const auto b = split_recordings(data, 3, 1.0, 9);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  bool differs = false;
  for (std::uint64_t s = 10; s < 20 && !differs; ++s) {
    const auto c = split_recordings(data, 3, 1.0, s);
    differs = c.train != a.train || c.test != a.test;
  }
  CHECK(differs);
}

TEST_CASE("confusion matrix bookkeeping") {
  ConfusionMatrix cm({"a", "b", "c"});
  cm.add("a", "a");
  cm.add("a", "b");
  cm.add("b", "b");
  cm.add("c", "a");
  cm.add("c", "c");
  cm.add("c", "c");
  CHECK(cm.row_total(0) == 2);
  CHECK(cm.row_total(1) == 1);
  CHECK(cm.row_total(2) == 3);
  CHECK(cm.total() == 6);
  CHECK(cm.trace() == 4);
  CHECK(cm.accuracy() == doctest::Approx(4.0 / 6.0));
  CHECK(cm.to_csv() == "true/predicted,a,b,c\na,1,1,0\nb,0,1,0\nc,1,0,2\n");
  CHECK(cm.to_rates_csv() == "true/predicted,a,b,c\na,50.0,50.0,0.0\nb,0.0,100.0,0.0\nc,33.3,0.0,66.7\n");
  CHECK_THROWS_AS(cm.add("d", "a"), ValidationError);
  CHECK(ConfusionMatrix({"x"}).accuracy() == 0.0);
}

TEST_CASE("synthetic dataset shape and determinism") {
  SynthSpec spec;
  spec.seconds_per_recording = 30.0;
  const auto data = synth_dataset(spec);
  REQUIRE(data.size() == 16);
  std::size_t excerpts = 0;
  std::map<std::string, int> per_class;
  std::set<std::string> ids;
  for (const auto& r : data) {
    excerpts += excerpt_count(r.clip, 5.0);
    ++per_class[r.class_label];
    ids.insert(r.recording_id);
    CHECK(r.clip.sample_rate == 11025.0);
    CHECK(r.recording_id.starts_with(r.class_label + "/"));
    CHECK(std::all_of(r.clip.samples.begin(), r.clip.samples.end(),
                      [](double v) { return std::abs(v) <= 1.0; }));
  }
  CHECK(excerpts >= 96);
  CHECK(per_class.size() == 4);
  CHECK(ids.size() == 16);
  for (std::size_t c = 0; c < 4; ++c) CHECK(per_class[synth_class_name(c)] == 4);

  const auto again = synth_dataset(spec);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(again[i].clip.samples == data[i].clip.samples);
  spec.seed = 1;
  CHECK(synth_dataset(spec)[0].clip.samples != data[0].clip.samples);

  spec.classes = 9;
  CHECK_THROWS_AS(synth_dataset(spec), ValidationError);
  spec.classes = 8;
  spec.recordings_per_class = 1;
  spec.seconds_per_recording = 2.0;
  CHECK(synth_dataset(spec).size() == 8);
}

TEST_CASE("harmonic-note class has onset frames 6 dB above the median") {
  SynthSpec spec;
  spec.seconds_per_recording = 10.0;
  for (const auto& r : synth_dataset(spec)) {
    if (r.class_label != synth_class_name(0)) continue;
    const auto f = stft(r.clip, StftConfig{});
    std::vector<double> energy(f.values.rows(), 0.0);
    for (std::size_t l = 0; l < f.values.rows(); ++l)
      for (const auto& z : f.values.row(l)) energy[l] += std::norm(z);
    auto sorted = energy;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double peak = *std::max_element(energy.begin(), energy.end());
    CHECK_MESSAGE(10.0 * std::log10(peak / median) >= 6.0, r.recording_id);
  }
}

TEST_CASE("classes with distinct pure tones are classified perfectly") {
  std::vector<Recording> data;
  const double freqs[] = {440.0, 1250.0, 2600.0};
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r)
      data.push_back(tone_recording("tone" + std::to_string(c),
                                    "tone" + std::to_string(c) + "/" + std::to_string(r),
                                    freqs[c], 4.0, 11025.0));
  const auto result = run_experiment(data, small_config());
  CHECK(result.accuracy == 1.0);
  CHECK(result.dictionary.size() == 28);
  for (std::size_t c = 0; c < 3; ++c) CHECK(result.confusion.row_total(c) == 3);
}

TEST_CASE("experiments are deterministic and thread independent") {
  const auto data = small_synth();
  auto cfg = small_config();
  const auto a = run_experiment(data, cfg);
  cfg.threads = 3;
  const auto b = run_experiment(data, cfg);
  CHECK(a.confusion.to_csv() == b.confusion.to_csv());
  CHECK(a.train_features == b.train_features);
  CHECK(a.test_features == b.test_features);
  CHECK(a.dictionary.id() == b.dictionary.id());
  CHECK(a.train_features.dictionary_id == a.dictionary.id());
  CHECK(a.accuracy == a.confusion.accuracy());
  CHECK(a.predictions.size() == a.plan.test.size());
  for (std::size_t c = 0; c < a.confusion.classes().size(); ++c)
    CHECK(a.confusion.row_total(c) == cfg.per_class);
  CHECK_NOTHROW(check_recording_disjoint(a.plan));
}

TEST_CASE("relabeling classes permutes the confusion matrix") {
  const auto data = small_synth(2);
  const auto base = run_experiment(data, small_config());
  // Reverse the alphabetical order of the labels; recording ids stay put.
  std::map<std::string, std::string> rename;
  const auto& classes = base.confusion.classes();
  for (std::size_t i = 0; i < classes.size(); ++i)
    rename[classes[i]] = "z" + std::to_string(classes.size() - i);
  auto relabeled = data;
  for (auto& r : relabeled) r.class_label = rename[r.class_label];
  const auto other = run_experiment(relabeled, small_config());
  for (std::size_t t = 0; t < classes.size(); ++t)
    for (std::size_t p = 0; p < classes.size(); ++p) {
      const auto& oc = other.confusion.classes();
      const auto ti = std::find(oc.begin(), oc.end(), rename[classes[t]]) - oc.begin();
      const auto pi = std::find(oc.begin(), oc.end(), rename[classes[p]]) - oc.begin();
      CHECK(other.confusion.count(ti, pi) == base.confusion.count(t, p));
    }
}

TEST_CASE("sweep rows and prefix property") {
  const auto data = small_synth(3);
  auto cfg = small_config();
  const std::vector<std::uint32_t> schedule = {1, 2, 4};
  const auto sweep = sweep_features(data, cfg, schedule);
  REQUIRE(sweep.rows.size() == 3);
  CHECK(sweep.rows[0].features == 7);
  CHECK(sweep.rows[1].features == 14);
  CHECK(sweep.rows[2].features == 28);
  for (std::size_t s = 0; s + 1 < schedule.size(); ++s) {
    CHECK(sweep.train_features[s].rows ==
          sweep.train_features[s + 1].prefix(sweep.rows[s].features).rows);
    CHECK(sweep.test_features[s].rows == sweep.test_features[s + 1].prefix(sweep.rows[s].features).rows);
  }
  // The last step is exactly the full experiment at that size.
  const auto full = run_experiment(data, cfg);
  CHECK(sweep.rows[2].accuracy == full.accuracy);
  CHECK(sweep.test_features[2] == full.test_features);

  const std::vector<std::uint32_t> bad = {4, 2};
  CHECK_THROWS_AS(sweep_features(data, cfg, bad), ValidationError);

  const std::vector<SweepResult> runs = {sweep, sweep};
  const auto summary = summarize_sweeps(runs);
  CHECK(summary[1].std_accuracy == 0.0);
  CHECK(sweep_to_csv(summary).starts_with("M,mean_accuracy,std_accuracy\n7,"));
}

TEST_CASE("datasets round trip through a directory tree") {
  const auto dir = temp_dir("dataset");
  const auto data = small_synth(4);
  write_dataset(dir, data);
  const auto back = load_dataset(dir);
  REQUIRE(back.size() == data.size());
  std::map<std::string, const Recording*> by_id;
  for (const auto& r : back) by_id[r.recording_id] = &r;
  for (const auto& r : data) {
    REQUIRE(by_id.count(r.recording_id));
    CHECK(by_id[r.recording_id]->class_label == r.class_label);
    CHECK(by_id[r.recording_id]->clip.samples == r.clip.samples);
  }
  const std::vector<std::string> need = {synth_class_name(0), "missing_class"};
  CHECK_THROWS_WITH_AS(load_dataset(dir, need), doctest::Contains("missing_class"),
                       ValidationError);
  CHECK_THROWS_AS(load_dataset(dir / "nope"), ValidationError);
}
