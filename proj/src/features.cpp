// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sonotex/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <limits>
#include <optional>

#include "binio.hpp"
#include "fft.hpp"
#include "sonotex/error.hpp"
#include "sonotex/parallel.hpp"

namespace sonotex {
namespace {

constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;

void check_fits(const Grid<double>& s, const Grid<double>& b, const char* op) {
  if (b.rows() == 0 || b.cols() == 0)
    throw ValidationError(std::string(op) + ": empty block");
  if (b.rows() > s.rows() || b.cols() > s.cols())
    throw ValidationError(std::string(op) + ": block " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + " larger than spectrogram " +
                          std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
}

// Per-spectrogram state reused across all blocks of a dictionary.
class Matcher {
 public:
  explicit Matcher(const Grid<double>& s)
      : s_(s), sat_(s.rows() + 1, s.cols() + 1, 0.0) {
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double run = 0.0;
      for (std::size_t c = 0; c < s.cols(); ++c) {
        const double v = s(r, c);
        run += v * v;
        sat_(r + 1, c + 1) = sat_(r, c + 1) + run;
        max_abs_ = std::max(max_abs_, std::abs(v));
      }
    }
    total_sq_ = sat_(s.rows(), s.cols());
  }

  // Fast energies for every placement of b, clamped at zero.
  void fast_map(const Grid<double>& b, Grid<double>& out) {
    const std::size_t w = b.rows(), l = b.cols();
    const std::size_t out_rows = s_.rows() - w + 1;
    const std::size_t out_cols = s_.cols() - l + 1;
    if (out.rows() != out_rows || out.cols() != out_cols) out = Grid<double>(out_rows, out_cols);

    double bb = 0.0;
    for (double v : b.flat()) bb += v * v;
    const double inv_area = 1.0 / static_cast<double>(w * l);

    const Grid<double>* fft_corr = nullptr;
    if (w * l > kDirectCorrelationMaxArea) {
      correlate_fft(b);
      fft_corr = &corr_;
    }
    acc_.resize(out_cols);
    for (std::size_t r = 0; r < out_rows; ++r) {
      double* acc = acc_.data();
      if (fft_corr) {
        const auto src = fft_corr->row(r);
        std::copy_n(src.begin(), out_cols, acc);
      } else {
        correlate_row(b, r, acc, out_cols);
      }
      auto dst = out.row(r);
      const auto top = sat_.row(r);
      const auto bottom = sat_.row(r + w);
      for (std::size_t c = 0; c < out_cols; ++c) {
        const double ss = bottom[c + l] - top[c + l] - bottom[c] + top[c];
        dst[c] = std::max(0.0, (ss - 2.0 * acc[c] + bb) * inv_area);
      }
    }
  }

  // Upper bound on |fast - exact| for any entry of the map of b.
  double error_bound(const Grid<double>& b) const {
    const std::size_t area = b.size();
    double bb = 0.0, b_abs = 0.0;
    for (double v : b.flat()) {
      bb += v * v;
      b_abs += std::abs(v);
    }
    const double u = kUnitRoundoff;
    const double ss_err = 8.0 * static_cast<double>(s_.rows() + s_.cols() + 2) * u * total_sq_;
    double cross_err;
    if (area > kDirectCorrelationMaxArea) {
      const double n = static_cast<double>(s_.size());
      cross_err = 2.0 * (16.0 * std::log2(n) + 16.0) * u * std::sqrt(total_sq_) *
                  std::sqrt(bb) * std::sqrt(n);
    } else {
      cross_err = 2.0 * static_cast<double>(area + 1) * u * max_abs_ * b_abs;
    }
    const double bb_err = static_cast<double>(area) * u * bb;
    const double combine_err = 4.0 * u * (total_sq_ + 2.0 * max_abs_ * b_abs + bb);
    return (ss_err + cross_err + bb_err + combine_err) / static_cast<double>(area) + 1e-300;
  }

  // Direct sum at one placement, same summation order as energy_map_naive.
  double exact_at(const Grid<double>& b, std::size_t r0, std::size_t c0) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < b.rows(); ++i) {
      const auto srow = s_.row(r0 + i);
      const auto brow = b.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        const double d = srow[c0 + j] - brow[j];
        sum += d * d;
      }
    }
    return sum / static_cast<double>(b.size());
  }

  // Exact minimum via fast screening plus direct recomputation of every
  // placement that could be the true arg-min.
  BestMatch refined_min(const Grid<double>& b) {
    fast_map(b, map_);
    const auto flat = map_.flat();
    const double fast_min = *std::min_element(flat.begin(), flat.end());
    const double band = fast_min + 2.0 * error_bound(b);
    BestMatch best{std::numeric_limits<double>::infinity(), 0, 0};
    for (std::size_t r = 0; r < map_.rows(); ++r) {
      const auto row = map_.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c] > band) continue;
        const double e = exact_at(b, r, c);
        if (e < best.energy) best = {e, r, c};
      }
    }
    return best;
  }

 private:
  void correlate_row(const Grid<double>& b, std::size_t r, double* __restrict acc,
                     std::size_t n) const {
    std::fill_n(acc, n, 0.0);
    for (std::size_t i = 0; i < b.rows(); ++i) {
      const double* srow = s_.row(r + i).data();
      const auto brow = b.row(i);
      for (std::size_t j = 0; j < brow.size(); ++j) {
        const double bv = brow[j];
        const double* __restrict sp = srow + j;
        for (std::size_t c = 0; c < n; ++c) acc[c] += bv * sp[c];
      }
    }
  }

  void correlate_fft(const Grid<double>& b) {
    if (!s_fft_) {
      s_fft_.emplace();
      detail::rfft2(s_, *s_fft_);
    }
    Grid<double> padded(s_.rows(), s_.cols(), 0.0);
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) padded(i, j) = b(i, j);
    Grid<std::complex<double>> b_fft;
    detail::rfft2(padded, b_fft);
    auto prod = b_fft.flat();
    const auto sf = s_fft_->flat();
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = sf[i] * std::conj(prod[i]);
    detail::irfft2(b_fft, s_.rows(), s_.cols(), corr_);
    const double scale = 1.0 / static_cast<double>(s_.size());
    for (double& v : corr_.flat()) v *= scale;
  }

  const Grid<double>& s_;
  Grid<double> sat_;
  double total_sq_ = 0.0;
  double max_abs_ = 0.0;
  std::optional<Grid<std::complex<double>>> s_fft_;
  Grid<double> corr_;
  Grid<double> map_;
  std::vector<double> acc_;
};

void check_dictionary_fits(const LogSpectrogram& s, const Dictionary& d) {
  for (std::size_t m = 0; m < d.blocks.size(); ++m) {
    const auto& b = d.blocks[m];
    if (b.values.rows() > s.frames() || b.values.cols() > s.bins())
      throw ValidationError("extract_features: block " + std::to_string(m) + " (" +
                            b.size.to_string() + ") does not fit spectrogram '" + s.source_id +
                            "' of " + std::to_string(s.frames()) + "x" +
                            std::to_string(s.bins()));
  }
}

FeatureVector extract_with_id(const LogSpectrogram& s, const Dictionary& d, std::string id) {
  check_dictionary_fits(s, d);
  Matcher matcher(s.values);
  FeatureVector fv;
  fv.dictionary_id = std::move(id);
  fv.values.resize(d.blocks.size());
  for (std::size_t m = 0; m < d.blocks.size(); ++m)
    fv.values[m] = matcher.refined_min(d.blocks[m].values).energy;
  return fv;
}

// --- CSV helpers -----------------------------------------------------------

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line, const std::string& what) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw FormatError(what + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw FormatError(what + ": invalid number '" + s + "'");
  return v;
}

constexpr char kFeatureMagic[4] = {'T', 'F', 'T', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

}  // namespace

EnergyMap energy_map_naive(const Grid<double>& s, const Grid<double>& b) {
  check_fits(s, b, "energy_map_naive");
  const std::size_t w = b.rows(), l = b.cols();
  EnergyMap map;
  map.values = Grid<double>(s.rows() - w + 1, s.cols() - l + 1);
  for (std::size_t r = 0; r < map.values.rows(); ++r) {
    for (std::size_t c = 0; c < map.values.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i < w; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
          const double d = s(r + i, c + j) - b(i, j);
          sum += d * d;
        }
      }
      map.values(r, c) = sum / static_cast<double>(w * l);
    }
  }
  return map;
}

EnergyMap energy_map_fast(const Grid<double>& s, const Grid<double>& b) {
  check_fits(s, b, "energy_map_fast");
  Matcher matcher(s);
  EnergyMap map;
  matcher.fast_map(b, map.values);
  return map;
}

double min_energy(const EnergyMap& map) {
  if (map.values.empty()) throw ValidationError("min_energy: empty energy map");
  const auto flat = map.values.flat();
  return *std::min_element(flat.begin(), flat.end());
}

BestMatch best_match(const EnergyMap& map) {
  if (map.values.empty()) throw ValidationError("best_match: empty energy map");
  BestMatch best{map.values(0, 0), 0, 0};
  for (std::size_t r = 0; r < map.values.rows(); ++r)
    for (std::size_t c = 0; c < map.values.cols(); ++c)
      if (map.values(r, c) < best.energy) best = {map.values(r, c), r, c};
  return best;
}

FeatureVector extract_features(const LogSpectrogram& s, const Dictionary& d) {
  return extract_with_id(s, d, d.id());
}

std::vector<BestMatch> locate_best_matches(const LogSpectrogram& s, const Dictionary& d) {
  check_dictionary_fits(s, d);
  Matcher matcher(s.values);
  std::vector<BestMatch> out;
  out.reserve(d.blocks.size());
  for (const auto& b : d.blocks) out.push_back(matcher.refined_min(b.values));
  return out;
}

std::vector<FeatureVector> extract_features_batch(std::span<const LogSpectrogram> spectrograms,
                                                  const Dictionary& d, unsigned threads) {
  const std::string id = d.id();
  std::vector<FeatureVector> out(spectrograms.size());
  parallel_for(spectrograms.size(), threads,
               [&](std::size_t i) { out[i] = extract_with_id(spectrograms[i], d, id); });
  return out;
}

FeatureTable FeatureTable::prefix(std::size_t m) const {
  FeatureTable out;
  out.dictionary_id = dictionary_id;
  out.rows.reserve(rows.size());
  for (const auto& row : rows) {
    if (m > row.values.size())
      throw ValidationError("feature prefix " + std::to_string(m) + " exceeds row width " +
                            std::to_string(row.values.size()));
    out.rows.push_back({row.excerpt_id, row.label,
                        std::vector<double>(row.values.begin(), row.values.begin() + m)});
  }
  return out;
}

std::string features_to_csv(const FeatureTable& table) {
  std::string out;
  if (!table.dictionary_id.empty()) out += "# dictionary_id=" + table.dictionary_id + "\n";
  out += "excerpt_id,label";
  for (std::size_t m = 0; m < table.dimension(); ++m) out += ",C" + std::to_string(m + 1);
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.values.size() != table.dimension())
      throw ValidationError("features_to_csv: ragged row '" + row.excerpt_id + "'");
    out += csv_field(row.excerpt_id);
    out += ',';
    out += csv_field(row.label);
    for (double v : row.values) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

FeatureTable features_from_csv(std::string_view text, const std::string& what) {
  FeatureTable table;
  std::size_t line_no = 0;
  std::optional<std::size_t> width;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.starts_with("# dictionary_id=")) {
      table.dictionary_id = std::string(line.substr(16));
      continue;
    }
    auto fields = split_csv_line(line, what);
    if (!width) {
      if (fields.size() < 2 || fields[0] != "excerpt_id" || fields[1] != "label")
        throw FormatError(what + ": missing 'excerpt_id,label,...' header");
      width = fields.size() - 2;
      continue;
    }
    if (fields.size() != *width + 2)
      throw FormatError(what + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(*width + 2));
    FeatureRow row;
    row.excerpt_id = std::move(fields[0]);
    row.label = std::move(fields[1]);
    row.values.reserve(*width);
    for (std::size_t m = 0; m < *width; ++m) row.values.push_back(parse_double(fields[m + 2], what));
    table.rows.push_back(std::move(row));
  }
  if (!width) throw FormatError(what + ": empty feature file");
  return table;
}

void save_features_csv(const FeatureTable& table, const std::filesystem::path& path) {
  detail::write_text_file(path, features_to_csv(table));
}

FeatureTable load_features_csv(const std::filesystem::path& path) {
  return features_from_csv(detail::read_text_file(path), path.string());
}

std::vector<std::uint8_t> serialize_features(const FeatureTable& table) {
  detail::ByteWriter out;
  out.put_bytes(kFeatureMagic, 4);
  out.put_u32(kFeatureVersion);
  out.put_u32(static_cast<std::uint32_t>(table.rows.size()));
  out.put_u32(static_cast<std::uint32_t>(table.dimension()));
  out.put_str(table.dictionary_id);
  for (const auto& row : table.rows) {
    if (row.values.size() != table.dimension())
      throw ValidationError("serialize_features: ragged row '" + row.excerpt_id + "'");
    out.put_str(row.excerpt_id);
    out.put_str(row.label);
    for (double v : row.values) out.put_f64(v);
  }
  out.put_u32(detail::crc32(out.bytes()));
  return std::move(out.bytes());
}

FeatureTable deserialize_features(std::span<const std::uint8_t> bytes, const std::string& what) {
  if (bytes.size() < 12) throw FormatError(what + ": truncated file");
  if (std::memcmp(bytes.data(), kFeatureMagic, 4) != 0)
    throw FormatError(what + ": not a feature file (bad magic)");
  detail::ByteReader head(bytes.subspan(4), what);
  const std::uint32_t version = head.get_u32();
  if (version != kFeatureVersion)
    throw FormatError(what + ": unsupported feature file version " + std::to_string(version));
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + body.size(), 4);
  if (detail::crc32(body) != stored_crc) throw ChecksumError(what + ": checksum mismatch");

  detail::ByteReader r(body.subspan(8), what);
  const std::uint32_t n_rows = r.get_u32();
  const std::uint32_t m = r.get_u32();
  FeatureTable table;
  table.dictionary_id = r.get_str();
  table.rows.resize(n_rows);
  for (auto& row : table.rows) {
    row.excerpt_id = r.get_str();
    row.label = r.get_str();
    row.values.resize(m);
    for (double& v : row.values) v = r.get_f64();
  }
  if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after last row");
  return table;
}

void save_features_binary(const FeatureTable& table, const std::filesystem::path& path) {
  detail::write_file(path, serialize_features(table));
}

FeatureTable load_features_binary(const std::filesystem::path& path) {
  return deserialize_features(detail::read_file(path), path.string());
}

}  // namespace sonotex
