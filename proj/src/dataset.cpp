// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cctype>

#include "sonotex/error.hpp"
#include "sonotex/evaluation.hpp"
#include "sonotex/wav.hpp"

namespace fs = std::filesystem;

namespace sonotex {
namespace {

bool is_wav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".wav";
}

}  // namespace

std::vector<Recording> load_dataset(const fs::path& root,
                                    std::span<const std::string> required_classes) {
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw ValidationError("dataset directory '" + root.string() + "' does not exist");
  for (const auto& cls : required_classes)
    if (!fs::is_directory(root / cls, ec))
      throw ValidationError("class directory '" + (root / cls).string() + "' does not exist");

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end());

  std::vector<Recording> out;
  for (const auto& dir : class_dirs) {
    const std::string label = dir.filename().string();
    if (!required_classes.empty() &&
        std::find(required_classes.begin(), required_classes.end(), label) == required_classes.end())
      continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && is_wav(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      Recording rec;
      rec.clip = read_wav(file);
      rec.class_label = label;
      rec.recording_id = fs::relative(file, root).generic_string();
      rec.clip.source_id = rec.recording_id;
      rec.clip.label = label;
      out.push_back(std::move(rec));
    }
  }
  if (out.empty())
    throw ValidationError("dataset directory '" + root.string() +
                          "' contains no <class>/<recording>.wav files");
  return out;
}

void write_dataset(const fs::path& root, std::span<const Recording> dataset) {
  for (const auto& rec : dataset) {
    const fs::path path = root / fs::path(rec.recording_id);
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    write_wav(path, rec.clip, SampleFormat::kPcm16);
  }
}

}  // namespace sonotex
