// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sonotex/dictionary.hpp"
#include "sonotex/dsp.hpp"
#include "sonotex/grid.hpp"

namespace sonotex {

// Mean squared difference between a block and every fully interior placement
// in a spectrogram: values(l, k) for l < frames - w + 1, k < bins - l + 1.
struct EnergyMap {
  Grid<double> values;
  std::size_t block_index = 0;
};

// Minimum matching energies, one per dictionary block, in dictionary order.
struct FeatureVector {
  std::vector<double> values;
  std::string dictionary_id;

  std::size_t size() const { return values.size(); }
  bool operator==(const FeatureVector&) const = default;
};

struct BestMatch {
  double energy = 0.0;
  std::size_t frame = 0;
  std::size_t bin = 0;
};

// Blocks with more cells than this use FFT correlation for the cross term.
inline constexpr std::size_t kDirectCorrelationMaxArea = 256;

// Reference implementation: direct summation at every placement.
EnergyMap energy_map_naive(const Grid<double>& spectrogram, const Grid<double>& block);
inline EnergyMap energy_map_naive(const LogSpectrogram& s, const Block& b) {
  return energy_map_naive(s.values, b.values);
}

// sum (S - B)^2 expanded as sum S^2 - 2 sum S.B + sum B^2. The sliding
// sum S^2 comes from a summed-area table; the cross term is direct for
// blocks up to kDirectCorrelationMaxArea cells and FFT-based above.
EnergyMap energy_map_fast(const Grid<double>& spectrogram, const Grid<double>& block);
inline EnergyMap energy_map_fast(const LogSpectrogram& s, const Block& b) {
  return energy_map_fast(s.values, b.values);
}

double min_energy(const EnergyMap& map);

// Diagnostic arg-min; the first minimum in frame-major order.
BestMatch best_match(const EnergyMap& map);

// C[m] for every block of d. Each coordinate is located with the fast map
// and then recomputed by direct summation at every placement whose fast
// value lies within the rounding bound of the fast minimum, so the returned
// value is the exact direct-sum minimum.
FeatureVector extract_features(const LogSpectrogram& s, const Dictionary& d);

// Same minima plus their positions (for visualization).
std::vector<BestMatch> locate_best_matches(const LogSpectrogram& s, const Dictionary& d);

// extract_features over many spectrograms on up to `threads` workers.
// Output order follows input order for any thread count.
std::vector<FeatureVector> extract_features_batch(std::span<const LogSpectrogram> spectrograms,
                                                  const Dictionary& d, unsigned threads = 1);

// One labelled feature row per excerpt.
struct FeatureRow {
  std::string excerpt_id;
  std::string label;
  std::vector<double> values;

  bool operator==(const FeatureRow&) const = default;
};

struct FeatureTable {
  std::string dictionary_id;
  std::vector<FeatureRow> rows;

  std::size_t dimension() const { return rows.empty() ? 0 : rows.front().values.size(); }
  // Copy keeping only the first m columns.
  FeatureTable prefix(std::size_t m) const;
  bool operator==(const FeatureTable&) const = default;
};

// CSV: optional "# dictionary_id=<hex>" line, header
// "excerpt_id,label,C1,...,CM", one row per excerpt. Values are printed
// with 17 significant digits so they parse back to the same doubles.
std::string features_to_csv(const FeatureTable& table);
FeatureTable features_from_csv(std::string_view text, const std::string& what);
void save_features_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable load_features_csv(const std::filesystem::path& path);

// Binary mirror of the dictionary format:
//   "TFTF" | version u32 | rows u32 | M u32 | dictionary_id str
//   | rows x (excerpt_id str, label str, M f64) | CRC32 u32
std::vector<std::uint8_t> serialize_features(const FeatureTable& table);
FeatureTable deserialize_features(std::span<const std::uint8_t> bytes, const std::string& what);
void save_features_binary(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable load_features_binary(const std::filesystem::path& path);

}  // namespace sonotex
