// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sonotex/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>

#include "binio.hpp"
#include "sonotex/classifier.hpp"
#include "sonotex/dictionary.hpp"
#include "sonotex/error.hpp"
#include "sonotex/features.hpp"
#include "sonotex/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace sonotex {
namespace {

// --- config <-> JSON ---------------------------------------------------------

#define SONOTEX_CONFIG_FIELDS(X)                                                              \
  X(data) X(out) X(model) X(window_ms) X(hop_divisor) X(epsilon) X(sample_rate) X(sizes)     \
  X(per_size) X(per_class) X(excerpt_s) X(seed) X(threads) X(standardize) X(classes)         \
  X(schedule) X(seeds) X(synth_classes) X(recordings) X(seconds) X(force)

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
#define X(name) j[#name] = c.name;
  SONOTEX_CONFIG_FIELDS(X)
#undef X
  return j;
}

void merge_json(RunConfig& c, const ordered_json& j, const std::string& what) {
  if (!j.is_object()) throw ValidationError(what + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    try {
#define X(name)                                     \
  if (key == #name) {                               \
    c.name = value.get<decltype(RunConfig::name)>(); \
    known = true;                                   \
  }
      SONOTEX_CONFIG_FIELDS(X)
#undef X
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(what + ": field '" + key + "': " + e.what());
    }
    if (!known) throw ValidationError(what + ": unknown config field '" + key + "'");
  }
}

void merge_json_file(RunConfig& c, const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec))
    throw ValidationError("config file '" + path.string() + "' does not exist");
  ordered_json j;
  try {
    j = ordered_json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  merge_json(c, j, path.string());
}

// --- flag binding ------------------------------------------------------------

// Flags are parsed into private storage and copied onto the config only when
// given, so they override whatever the JSON config set.
class Flags {
 public:
  template <typename T>
  CLI::Option* option(CLI::App* app, const std::string& name, T RunConfig::*field,
                      const std::string& help) {
    auto storage = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *storage, help);
    bindings_.push_back({opt, [storage, field](RunConfig& c) { c.*field = *storage; }});
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& name, bool RunConfig::*field,
                    const std::string& help) {
    auto storage = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(name, *storage, help);
    bindings_.push_back({opt, [storage, field](RunConfig& c) { c.*field = *storage; }});
    return opt;
  }

  void apply(RunConfig& c) const {
    for (const auto& [opt, fn] : bindings_)
      if (opt->count() > 0) fn(c);
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> bindings_;
};

void add_pipeline_flags(CLI::App* app, Flags& f) {
  f.option(app, "--window-ms", &RunConfig::window_ms, "STFT window length in ms");
  f.option(app, "--hop-divisor", &RunConfig::hop_divisor, "hop = window / divisor");
  f.option(app, "--epsilon", &RunConfig::epsilon, "magnitude floor before the log");
  f.option(app, "--sample-rate", &RunConfig::sample_rate, "analysis sample rate (Hz)");
  f.option(app, "--sizes", &RunConfig::sizes, "block sizes, e.g. 16x16,8x8 (frames x bins)");
  f.option(app, "--per-size", &RunConfig::per_size, "blocks per size");
  f.option(app, "--per-class", &RunConfig::per_class, "excerpts per class on each side");
  f.option(app, "--excerpt-s", &RunConfig::excerpt_s, "excerpt length in seconds");
  f.option(app, "--seed", &RunConfig::seed, "seed for split and dictionary");
  f.option(app, "--threads", &RunConfig::threads, "worker threads (0 = all)");
  f.flag(app, "--standardize", &RunConfig::standardize, "z-score features before 1-NN");
  f.option(app, "--classes", &RunConfig::classes, "required class directories")->delimiter(',');
}

// --- helpers -------------------------------------------------------------------

void require_dir(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing --") + what);
  std::error_code ec;
  if (!fs::is_directory(path, ec))
    throw ValidationError(std::string(what) + " directory '" + path + "' does not exist");
}

fs::path make_out_dir(const std::string& path) {
  if (path.empty()) throw ValidationError("missing --out");
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError("cannot create " + path + ": " + ec.message());
  return path;
}

void echo_config(const RunConfig& c, const fs::path& dir, const char* name = "config.json") {
  detail::write_text_file(dir / name, to_json(c).dump(2) + "\n");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void print_confusion(std::ostream& out, const ConfusionMatrix& cm) {
  out << "confusion (row = true, % of row):\n";
  for (std::size_t i = 0; i < cm.classes().size(); ++i) {
    out << "  " << cm.classes()[i];
    const double n = static_cast<double>(cm.row_total(i));
    for (std::size_t j = 0; j < cm.classes().size(); ++j)
      out << ' ' << fmt("%5.1f", n > 0 ? 100.0 * static_cast<double>(cm.count(i, j)) / n : 0.0);
    out << '\n';
  }
}

// --- commands -------------------------------------------------------------------

int cmd_synth(const RunConfig& c, std::ostream& out) {
  if (c.out.empty()) throw ValidationError("missing --out");
  std::error_code ec;
  if (fs::exists(c.out, ec) && !fs::is_empty(c.out, ec) && !c.force)
    throw ValidationError("target '" + c.out + "' exists and is not empty (use --force)");
  SynthSpec spec;
  spec.classes = c.synth_classes;
  spec.recordings_per_class = c.recordings;
  spec.seconds_per_recording = c.seconds;
  spec.seed = c.seed;
  spec.sample_rate = c.sample_rate;
  const auto dataset = synth_dataset(spec);
  const fs::path root = make_out_dir(c.out);
  write_dataset(root, dataset);
  echo_config(c, root, "synth.json");
  out << "wrote " << dataset.size() << " recordings (" << spec.classes << " classes x "
      << spec.recordings_per_class << ") to " << root.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  require_dir(c.data, "data");
  const ExperimentConfig cfg = c.experiment();
  const auto dataset = load_dataset(c.data, c.classes);
  const PreparedData data = prepare_data(dataset, cfg);
  const Dictionary dict =
      sample_blocks(data.train, cfg.sizes, cfg.per_size, cfg.dictionary_seed, cfg.stft, cfg.sample_rate);
  const auto features = extract_features_batch(data.train, dict, cfg.threads);

  std::vector<LabeledVector> examples;
  for (std::size_t i = 0; i < features.size(); ++i)
    examples.push_back({features[i], data.plan.train[i].label, data.plan.train[i].id()});
  const NNModel model = NNModel::fit(examples, FitOptions{cfg.standardize});

  const fs::path dir = make_out_dir(c.out);
  save_dictionary(dict, dir / "dictionary.bin");
  save_model(model, dir);
  save_features_binary(to_feature_table(examples), dir / "train_features.bin");
  std::string manifest = "role,excerpt_id,recording_id,label\n";
  for (const auto* side : {&data.plan.train, &data.plan.test})
    for (const auto& r : *side)
      manifest += std::string(side == &data.plan.train ? "train" : "test") + "," + r.id() + "," +
                  r.recording_id + "," + r.label + "\n";
  detail::write_text_file(dir / "split.csv", manifest);
  echo_config(c, dir);

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : data.plan.train) ++counts[r.label].first;
  for (const auto& r : data.plan.test) ++counts[r.label].second;
  out << "dictionary: M=" << dict.size() << " (" << dict.sizes.size() << " sizes x "
      << dict.per_size << ") id=" << dict.id() << "\n";
  for (const auto& [label, n] : counts)
    out << "class " << label << ": train " << n.first << ", test " << n.second << "\n";
  out << "wrote " << dir.string() << "\n";
  return 0;
}

int cmd_classify(const RunConfig& c, const std::string& wav, std::ostream& out) {
  const fs::path dir = c.model;
  const Dictionary dict = load_dictionary(dir / "dictionary.bin");
  const NNModel model = load_model(dir);
  if (model.dictionary_id() != dict.id())
    throw ValidationError("model features were extracted with dictionary " +
                          model.dictionary_id() + " but " + (dir / "dictionary.bin").string() +
                          " is " + dict.id());

  std::error_code ec;
  if (!fs::is_regular_file(wav, ec)) throw ValidationError("input '" + wav + "' does not exist");
  Recording rec;
  rec.clip = resample(read_wav(wav), dict.sample_rate);
  rec.recording_id = wav;
  const auto excerpts = segment_excerpts(rec, c.excerpt_s);
  if (excerpts.empty())
    throw ValidationError("input '" + wav + "' is shorter than one " + fmt("%g", c.excerpt_s) +
                          " s excerpt");

  std::vector<LogSpectrogram> specs(excerpts.size());
  for (std::size_t i = 0; i < excerpts.size(); ++i)
    specs[i] = compute_log_spectrogram(excerpts[i].clip, dict.stft);
  const auto features = extract_features_batch(specs, dict, c.threads);
  const auto predictions = model.predict_batch(features, c.threads);

  std::map<std::string, std::size_t> votes;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    ++votes[p.label];
    out << "excerpt " << i << " [" << fmt("%.2f", static_cast<double>(i) * c.excerpt_s) << "s-"
        << fmt("%.2f", static_cast<double>(i + 1) * c.excerpt_s) << "s]: " << p.label
        << " distance=" << fmt("%.17g", p.distance) << " neighbor=" << p.neighbor_id << "\n";
  }
  // std::map iterates labels in lexicographic order, so the first label with
  // the top count is the earliest one.
  std::size_t top = 0;
  for (const auto& [label, n] : votes) top = std::max(top, n);
  std::vector<std::string> leaders;
  for (const auto& [label, n] : votes)
    if (n == top) leaders.push_back(label);
  out << "majority: " << leaders.front() << " (" << top << "/" << predictions.size() << ")";
  if (leaders.size() > 1) {
    out << " TIE among";
    for (std::size_t i = 0; i < leaders.size(); ++i) out << (i ? "," : " ") << leaders[i];
  }
  out << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& c, std::ostream& out) {
  require_dir(c.data, "data");
  const auto dataset = load_dataset(c.data, c.classes);
  const ExperimentResult result = run_experiment(dataset, c.experiment());
  const fs::path dir = make_out_dir(c.out);
  detail::write_text_file(dir / "confusion.csv", result.confusion.to_csv());
  detail::write_text_file(dir / "confusion_rates.csv", result.confusion.to_rates_csv());
  detail::write_text_file(dir / "accuracy.txt",
                          fmt("%.3f\n", result.accuracy) + std::to_string(result.confusion.trace()) +
                              "/" + std::to_string(result.confusion.total()) + "\n");
  std::string preds = "excerpt_id,true,predicted,distance,neighbor\n";
  for (std::size_t i = 0; i < result.predictions.size(); ++i) {
    const auto& p = result.predictions[i];
    const auto& row = result.test_features.rows[i];
    preds += row.excerpt_id + "," + row.label + "," + p.label + "," + fmt("%.17g", p.distance) +
             "," + p.neighbor_id + "\n";
  }
  detail::write_text_file(dir / "predictions.csv", preds);
  echo_config(c, dir);
  out << "M=" << result.dictionary.size() << " accuracy=" << fmt("%.3f", result.accuracy) << " ("
      << result.confusion.trace() << "/" << result.confusion.total() << ")\n";
  print_confusion(out, result.confusion);
  return 0;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  require_dir(c.data, "data");
  const auto schedule = parse_schedule(c.schedule);
  const auto seeds = c.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : parse_seeds(c.seeds);
  const auto dataset = load_dataset(c.data, c.classes);
  std::vector<SweepResult> runs;
  for (const std::uint64_t seed : seeds) {
    ExperimentConfig cfg = c.experiment();
    cfg.split_seed = seed;
    cfg.dictionary_seed = seed;
    runs.push_back(sweep_features(dataset, cfg, schedule));
    out << "seed " << seed << ":";
    for (const auto& row : runs.back().rows)
      out << " M=" << row.features << ":" << fmt("%.3f", row.accuracy);
    out << "\n";
  }
  const auto summary = summarize_sweeps(runs);
  const fs::path dir = make_out_dir(c.out);
  detail::write_text_file(dir / "sweep.csv", sweep_to_csv(summary));
  echo_config(c, dir);
  out << sweep_to_csv(summary);
  return 0;
}

}  // namespace

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig cfg;
  cfg.stft.window_ms = window_ms;
  cfg.stft.hop_divisor = hop_divisor;
  cfg.stft.epsilon = epsilon;
  cfg.sample_rate = sample_rate;
  cfg.sizes = parse_sizes(sizes);
  cfg.per_size = per_size;
  cfg.per_class = per_class;
  cfg.excerpt_s = excerpt_s;
  cfg.split_seed = seed;
  cfg.dictionary_seed = seed;
  cfg.threads = threads;
  cfg.standardize = standardize;
  cfg.validate();
  return cfg;
}

std::vector<std::uint32_t> parse_schedule(const std::string& text) {
  std::vector<std::uint32_t> out;
  for (const auto& seed : parse_seeds(text)) {
    if (seed < 1 || seed > 0xFFFFFFFFu)
      throw ValidationError("schedule entries must be between 1 and 2^32-1");
    out.push_back(static_cast<std::uint32_t>(seed));
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1])
      throw ValidationError("schedule '" + text + "' must be strictly increasing");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size() || item.empty())
      throw ValidationError("invalid integer '" + std::string(item) + "' in list '" + text + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ValidationError("empty integer list");
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrogram texture classification with random block dictionaries", "sonotex"};
  app.require_subcommand(1);
  std::string config_path;
  std::string wav_path;
  std::map<CLI::App*, Flags> flags;

  auto* synth = app.add_subcommand("synth", "write a synthetic WAV dataset");
  auto* train = app.add_subcommand("train", "learn a dictionary and 1-NN model");
  auto* classify = app.add_subcommand("classify", "classify a WAV file with a trained model");
  auto* evaluate = app.add_subcommand("evaluate", "run a split experiment, write confusion matrix");
  auto* sweep = app.add_subcommand("sweep", "accuracy versus number of features");

  for (auto* sub : {synth, train, classify, evaluate, sweep})
    sub->add_option("--config", config_path, "JSON config file (flags override it)");

  {
    Flags& f = flags[synth];
    f.option(synth, "--out", &RunConfig::out, "target dataset directory")->required();
    f.option(synth, "--classes", &RunConfig::synth_classes, "number of classes (1-8)");
    f.option(synth, "--recordings", &RunConfig::recordings, "recordings per class");
    f.option(synth, "--seconds", &RunConfig::seconds, "seconds per recording");
    f.option(synth, "--seed", &RunConfig::seed, "generator seed");
    f.option(synth, "--sample-rate", &RunConfig::sample_rate, "sample rate (Hz)");
    f.flag(synth, "--force", &RunConfig::force, "write into a non-empty directory");
  }
  for (auto* sub : {train, evaluate, sweep}) {
    Flags& f = flags[sub];
    f.option(sub, "--data", &RunConfig::data, "dataset root (<root>/<class>/<rec>.wav)");
    f.option(sub, "--out", &RunConfig::out, "output directory");
    add_pipeline_flags(sub, f);
  }
  flags[sweep].option(sweep, "--schedule", &RunConfig::schedule, "per-size steps, e.g. 5,20,60");
  flags[sweep].option(sweep, "--seeds", &RunConfig::seeds, "comma-separated seeds");
  {
    Flags& f = flags[classify];
    f.option(classify, "--model", &RunConfig::model, "directory written by train")->required();
    f.option(classify, "--threads", &RunConfig::threads, "worker threads (0 = all)");
    f.option(classify, "--excerpt-s", &RunConfig::excerpt_s, "excerpt length in seconds");
    classify->add_option("wav", wav_path, "input WAV file")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    RunConfig cfg;
    if (sub == classify) {
      // Start from the settings the model was trained with.
      RunConfig given;
      flags[classify].apply(given);
      require_dir(given.model, "model");
      const fs::path trained = fs::path(given.model) / "config.json";
      std::error_code ec;
      if (fs::is_regular_file(trained, ec)) merge_json_file(cfg, trained);
    }
    if (!config_path.empty()) merge_json_file(cfg, config_path);
    flags[sub].apply(cfg);

    if (sub == synth) return cmd_synth(cfg, out);
    if (sub == train) return cmd_train(cfg, out);
    if (sub == classify) return cmd_classify(cfg, wav_path, out);
    if (sub == evaluate) return cmd_evaluate(cfg, out);
    return cmd_sweep(cfg, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sonotex
