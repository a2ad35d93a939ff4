// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sonotex/dsp.hpp"
#include "sonotex/grid.hpp"

namespace sonotex {

// Block extent: w time frames by l frequency bins.
struct BlockSize {
  std::uint32_t w = 0;
  std::uint32_t l = 0;

  std::size_t area() const { return static_cast<std::size_t>(w) * l; }
  std::string to_string() const;
  auto operator<=>(const BlockSize&) const = default;
};

// A w x l patch copied out of a log-spectrogram (rows are frames).
struct Block {
  BlockSize size;
  Grid<double> values;
  std::string source_id;
  std::uint32_t origin_frame = 0;
  std::uint32_t origin_bin = 0;

  bool operator==(const Block&) const = default;
};

// Ordered, immutable set of sampled blocks.
//
// Blocks are interleaved by size: entry j * sizes.size() + s is the j-th draw
// for sizes[s]. Each size has its own RNG stream, so the dictionary learned
// with per_size = p is exactly the first p * sizes.size() entries of any
// dictionary learned with a larger per_size and the same seed.
struct Dictionary {
  std::vector<Block> blocks;
  std::vector<BlockSize> sizes;
  std::uint32_t per_size = 0;
  std::uint64_t seed = 0;
  StftConfig stft;
  double sample_rate = kDefaultSampleRate;

  std::size_t size() const { return blocks.size(); }

  // Smallest spectrogram (frames, bins) every block fits inside.
  BlockSize max_extent() const;

  // Provenance hash: hex FNV-1a 64 of the serialized form.
  std::string id() const;

  // Dictionary learned with a smaller per_size (the leading entries).
  Dictionary prefix(std::uint32_t new_per_size) const;

  bool operator==(const Dictionary&) const = default;
};

// (16,16), (16,8), (8,16), (8,8), (8,4), (4,8), (4,4) as (w, l).
std::vector<BlockSize> default_sizes();

// Parses "16x16,16x8,..." (time x frequency). Throws ValidationError.
std::vector<BlockSize> parse_sizes(std::string_view text);
std::string format_sizes(std::span<const BlockSize> sizes);

// Draws per_size blocks for each size. Every draw picks a training
// spectrogram uniformly, then a top-left corner uniformly among the valid
// placements, and copies the patch. Deterministic in (training order, seed).
// `stft` and `sample_rate` are recorded for provenance only.
Dictionary sample_blocks(std::span<const LogSpectrogram> training,
                         std::span<const BlockSize> sizes, std::uint32_t per_size,
                         std::uint64_t seed, const StftConfig& stft = {},
                         double sample_rate = kDefaultSampleRate);

// Binary format, little-endian:
//   "TFTX" | version u32 | M u32 | seed u64 | window_ms f64 | hop_divisor u32
//   | epsilon f64 | sample_rate f64 | per_size u32 | n_sizes u32
//   | n_sizes x (w u32, l u32)
//   | M x (w u32, l u32, origin_frame u32, origin_bin u32,
//          source_id (u32 length + UTF-8), w*l f64 time-major)
//   | CRC32 u32 of every preceding byte
std::vector<std::uint8_t> serialize_dictionary(const Dictionary& d);
Dictionary deserialize_dictionary(std::span<const std::uint8_t> bytes,
                                  const std::string& what);

void save_dictionary(const Dictionary& d, const std::filesystem::path& path);
Dictionary load_dictionary(const std::filesystem::path& path);

}  // namespace sonotex
