// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "../src/binio.hpp"
#include "oracles.hpp"
#include "sonotex/cli.hpp"
#include "sonotex/wav.hpp"

using namespace sonotex;
using namespace sonotex::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sonotex");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return detail::read_text_file(p); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// A small dataset shared by the tests below: 4 classes x 2 recordings x 3 s.
const fs::path& dataset() {
  static const fs::path dir = [] {
    const auto d = temp_dir("cli_data");
    const auto r = cli({"synth", "--out", d.string(), "--force", "--recordings", "2", "--seconds",
                        "3", "--seed", "4"});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::vector<std::string> small_flags() {
  return {"--excerpt-s", "1", "--per-class", "2", "--seed", "7"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("synth writes a 16-bit mono dataset deterministically") {
  const auto dir = temp_dir("cli_synth");
  const auto a = dir / "a";
  const auto r = cli({"synth", "--out", a.string(), "--recordings", "1", "--seconds", "2"});
  REQUIRE(r.code == 0);
  std::size_t class_dirs = 0;
  for (const auto& e : fs::directory_iterator(a)) class_dirs += e.is_directory();
  CHECK(class_dirs == 4);
  CHECK(fs::exists(a / "synth.json"));

  std::vector<fs::path> wavs;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.path().extension() == ".wav") wavs.push_back(e.path());
  REQUIRE(wavs.size() == 4);
  for (const auto& w : wavs) {
    const auto bytes = detail::read_file(w);
    std::uint16_t channels, bits;
    std::uint32_t rate;
    std::memcpy(&channels, bytes.data() + 22, 2);
    std::memcpy(&rate, bytes.data() + 24, 4);
    std::memcpy(&bits, bytes.data() + 34, 2);
    CHECK(channels == 1);
    CHECK(rate == 11025);
    CHECK(bits == 16);
    CHECK(read_wav(w).samples.size() == 22050);
  }

  const std::map<fs::path, std::string> before = [&] {
    std::map<fs::path, std::string> m;
    for (const auto& w : wavs) m[w] = slurp(w);
    return m;
  }();
  const auto again = cli({"synth", "--out", a.string(), "--recordings", "1", "--seconds", "2"});
  CHECK(again.code == 2);
  CHECK(again.err.find("--force") != std::string::npos);
  REQUIRE(cli({"synth", "--out", a.string(), "--recordings", "1", "--seconds", "2", "--force"})
              .code == 0);
  for (const auto& [w, bytes] : before) CHECK(slurp(w) == bytes);

  CHECK(cli({"synth", "--out", (dir / "b").string(), "--classes", "9"}).code == 2);
  CHECK(cli({"synth"}).code == 2);
}

TEST_CASE("train writes artifacts and is reproducible") {
  const auto dir = temp_dir("cli_train");
  const auto args = concat({"train", "--data", dataset().string(), "--per-size", "20"}, small_flags());
  const auto r = cli(concat(args, {"--out", (dir / "a").string()}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("M=140") != std::string::npos);
  CHECK(r.out.find("class tonal: train 2, test 2") != std::string::npos);
  for (const char* f : {"dictionary.bin", "model.json", "train_features.csv", "train_features.bin",
                        "split.csv", "config.json"})
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);
  CHECK(load_dictionary(dir / "a" / "dictionary.bin").size() == 140);

  REQUIRE(cli(concat(args, {"--out", (dir / "b").string(), "--threads", "3"})).code == 0);
  CHECK(slurp(dir / "a" / "dictionary.bin") == slurp(dir / "b" / "dictionary.bin"));
  CHECK(slurp(dir / "a" / "train_features.csv") == slurp(dir / "b" / "train_features.csv"));

  const auto missing = cli(concat(args, {"--out", (dir / "c").string(), "--classes",
                                         "tonal,no_such_class"}));
  CHECK(missing.code == 2);
  CHECK(missing.err.find("no_such_class") != std::string::npos);

  const auto no_data = cli({"train", "--data", (dir / "nope").string(), "--out", dir.string()});
  CHECK(no_data.code == 2);
  CHECK(no_data.err.find("nope") != std::string::npos);
}

TEST_CASE("config file values are overridden by flags") {
  const auto dir = temp_dir("cli_config");
  {
    std::ofstream(dir / "cfg.json") << R"({"per_size": 3, "per_class": 2, "excerpt_s": 1.0,
      "seed": 7, "sizes": "8x8,4x4"})";
  }
  auto r = cli({"train", "--config", (dir / "cfg.json").string(), "--data",
                dataset().string(), "--out", (dir / "a").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("M=6 ") != std::string::npos);
  r = cli({"train", "--config", (dir / "cfg.json").string(), "--data", dataset().string(),
           "--out", (dir / "b").string(), "--per-size", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("M=10 ") != std::string::npos);

  { std::ofstream(dir / "bad.json") << R"({"per_size": "many"})"; }
  CHECK(cli({"train", "--config", (dir / "bad.json").string(), "--data", dataset().string(),
             "--out", (dir / "c").string()})
            .code == 2);
  { std::ofstream(dir / "unknown.json") << R"({"per_sizes": 4})"; }
  CHECK(cli({"train", "--config", (dir / "unknown.json").string(), "--data",
             dataset().string(), "--out", (dir / "c").string()})
            .code == 2);
}

TEST_CASE("classify replays training excerpts and flags ties") {
  const auto dir = temp_dir("cli_classify");
  const auto model = dir / "model";
  REQUIRE(cli(concat({"train", "--data", dataset().string(), "--out", model.string(),
                      "--per-size", "3"},
                     small_flags()))
              .code == 0);

  // First training excerpt of two different classes, from split.csv.
  std::map<std::string, std::pair<std::string, std::size_t>> first_by_label;
  for (const auto& line : lines(slurp(model / "split.csv"))) {
    if (!line.starts_with("train,")) continue;
    std::vector<std::string> f;
    std::istringstream in(line);
    for (std::string s; std::getline(in, s, ',');) f.push_back(s);
    const auto hash = f[1].rfind('#');
    if (!first_by_label.count(f[3]))
      first_by_label[f[3]] = {f[2], std::stoul(f[1].substr(hash + 1))};
  }
  REQUIRE(first_by_label.size() == 4);
  auto excerpt_of = [&](const std::string& label) {
    const auto& [rec, index] = first_by_label.at(label);
    const auto clip = read_wav(dataset() / rec);
    return std::vector<double>(clip.samples.begin() + index * 11025,
                               clip.samples.begin() + (index + 1) * 11025);
  };

  AudioClip one;
  one.sample_rate = 11025;
  one.samples = excerpt_of("tonal");
  write_wav(dir / "one.wav", one);
  auto r = cli({"classify", "--model", model.string(), (dir / "one.wav").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto out = lines(r.out);
  REQUIRE(out.size() == 2);
  CHECK(out[0].starts_with("excerpt 0 [0.00s-1.00s]: tonal distance=0 neighbor=tonal/"));
  CHECK(out[1] == "majority: tonal (1/1)");

  AudioClip two = one;
  const auto other = excerpt_of("percussive");
  two.samples.insert(two.samples.begin(), other.begin(), other.end());
  write_wav(dir / "two.wav", two);
  r = cli({"classify", "--model", model.string(), (dir / "two.wav").string()});
  REQUIRE(r.code == 0);
  out = lines(r.out);
  REQUIRE(out.size() == 3);
  CHECK(out[0].find(": percussive distance=0 ") != std::string::npos);
  CHECK(out[1].find(": tonal distance=0 ") != std::string::npos);
  CHECK(out[2] == "majority: percussive (1/2) TIE among percussive,tonal");

  AudioClip twelve;
  twelve.sample_rate = 11025;
  twelve.samples.assign(12 * 11025, 0.0);
  for (std::size_t i = 0; i < twelve.samples.size(); ++i) twelve.samples[i] = 0.3 * std::sin(0.2 * i);
  write_wav(dir / "twelve.wav", twelve);
  r = cli({"classify", "--model", model.string(), "--excerpt-s", "5", (dir / "twelve.wav").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  out = lines(r.out);
  CHECK(out.size() == 3);
  CHECK(out[2].starts_with("majority: "));
  CHECK(out[2].find("/2)") != std::string::npos);

  AudioClip short_clip = twelve;
  short_clip.samples.resize(5000);
  write_wav(dir / "short.wav", short_clip);
  CHECK(cli({"classify", "--model", model.string(), (dir / "short.wav").string()}).code == 2);
  CHECK(cli({"classify", "--model", model.string(), (dir / "absent.wav").string()}).code == 2);

  // A model whose features no longer match the dictionary.
  const auto other_model = dir / "other";
  REQUIRE(cli(concat({"train", "--data", dataset().string(), "--out", other_model.string(),
                      "--per-size", "3", "--excerpt-s", "1", "--per-class", "2", "--seed", "8"},
                     {}))
              .code == 0);
  fs::copy_file(other_model / "dictionary.bin", model / "dictionary.bin",
                fs::copy_options::overwrite_existing);
  r = cli({"classify", "--model", model.string(), (dir / "one.wav").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("dictionary") != std::string::npos);
}

TEST_CASE("evaluate writes a confusion matrix independent of threads") {
  const auto dir = temp_dir("cli_evaluate");
  const auto args = concat({"evaluate", "--data", dataset().string(), "--per-size", "3"},
                           small_flags());
  const auto r = cli(concat(args, {"--out", (dir / "a").string(), "--threads", "1"}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  REQUIRE(cli(concat(args, {"--out", (dir / "b").string(), "--threads", "4"})).code == 0);
  const auto csv = slurp(dir / "a" / "confusion.csv");
  CHECK(csv == slurp(dir / "b" / "confusion.csv"));

  const auto rows = lines(csv);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "true/predicted,broadband,percussive,tonal,vibrato");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::string cell;
    std::getline(in, cell, ',');
    int sum = 0;
    while (std::getline(in, cell, ',')) sum += std::stoi(cell);
    CHECK(sum == 2);
  }
  const auto acc = lines(slurp(dir / "a" / "accuracy.txt"));
  REQUIRE(acc.size() == 2);
  CHECK(acc[0].size() == 5);
  CHECK(acc[1].ends_with("/8"));
  CHECK(fs::exists(dir / "a" / "predictions.csv"));
  CHECK(fs::exists(dir / "a" / "config.json"));
}

TEST_CASE("sweep reports one row per schedule step") {
  const auto dir = temp_dir("cli_sweep");
  auto r = cli(concat({"sweep", "--data", dataset().string(), "--out", (dir / "a").string(),
                       "--schedule", "5,20,60", "--per-class", "1", "--excerpt-s", "1",
                       "--seeds", "3"},
                      {}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rows = lines(slurp(dir / "a" / "sweep.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "M,mean_accuracy,std_accuracy");
  CHECK(rows[1].starts_with("35,"));
  CHECK(rows[2].starts_with("140,"));
  CHECK(rows[3].starts_with("420,"));
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].ends_with(",0.000000"));

  r = cli({"sweep", "--data", dataset().string(), "--out", (dir / "b").string(), "--schedule",
           "20,5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("increasing") != std::string::npos);
  CHECK(cli({"sweep", "--data", dataset().string(), "--out", (dir / "b").string(), "--schedule",
             "5,x"})
            .code == 2);
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string bin = SONOTEX_CLI_PATH;
  const auto dir = temp_dir("cli_binary");
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(bin + " --help") == 0);
  CHECK(status(bin + " frobnicate") == 2);
  CHECK(status(bin + " train --data " + (dir / "missing").string()) == 2);
  CHECK(status(bin + " synth --out " + (dir / "d").string() + " --recordings 1 --seconds 1") == 0);
  fs::create_directories(dir / "ro");
  fs::permissions(dir / "ro", fs::perms::owner_read | fs::perms::owner_exec);
  // Root ignores directory permissions, so only check when the write really fails.
  if (!std::ofstream(dir / "ro" / "probe"))
    CHECK(status(bin + " evaluate --data " + (dir / "d").string() + " --out " +
                 (dir / "ro" / "x").string() + " --per-class 1 --excerpt-s 0.5") == 1);
}
