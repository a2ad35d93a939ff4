// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sonotex/dictionary.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <cstdio>

#include "binio.hpp"
#include "sonotex/error.hpp"
#include "sonotex/rng.hpp"

namespace sonotex {
namespace {

constexpr char kMagic[4] = {'T', 'F', 'T', 'X'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t parse_u32(std::string_view s, std::string_view context) {
  std::uint32_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ValidationError("invalid block size '" + std::string(context) + "'");
  return v;
}

}  // namespace

std::string BlockSize::to_string() const {
  return std::to_string(w) + "x" + std::to_string(l);
}

BlockSize Dictionary::max_extent() const {
  BlockSize ext;
  for (const auto& s : sizes) {
    ext.w = std::max(ext.w, s.w);
    ext.l = std::max(ext.l, s.l);
  }
  return ext;
}

std::string Dictionary::id() const {
  const auto bytes = serialize_dictionary(*this);
  const std::uint64_t h = fnv1a64({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dictionary Dictionary::prefix(std::uint32_t new_per_size) const {
  if (new_per_size > per_size)
    throw ValidationError("prefix: per_size " + std::to_string(new_per_size) +
                          " exceeds dictionary per_size " + std::to_string(per_size));
  Dictionary out = *this;
  out.per_size = new_per_size;
  out.blocks.resize(static_cast<std::size_t>(new_per_size) * sizes.size());
  return out;
}

std::vector<BlockSize> default_sizes() {
  return {{16, 16}, {16, 8}, {8, 16}, {8, 8}, {8, 4}, {4, 8}, {4, 4}};
}

std::vector<BlockSize> parse_sizes(std::string_view text) {
  std::vector<BlockSize> sizes;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const auto x = item.find_first_of("xX");
    if (x == std::string_view::npos)
      throw ValidationError("invalid block size '" + std::string(item) + "', expected WxL");
    const BlockSize s{parse_u32(item.substr(0, x), item), parse_u32(item.substr(x + 1), item)};
    if (s.w < 1 || s.l < 1)
      throw ValidationError("block size '" + std::string(item) + "' must be at least 1x1");
    sizes.push_back(s);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) throw ValidationError("trailing comma in block size list");
  }
  if (sizes.empty()) throw ValidationError("empty block size list");
  return sizes;
}

std::string format_sizes(std::span<const BlockSize> sizes) {
  std::string out;
  for (const auto& s : sizes) {
    if (!out.empty()) out += ',';
    out += s.to_string();
  }
  return out;
}

Dictionary sample_blocks(std::span<const LogSpectrogram> training,
                         std::span<const BlockSize> sizes, std::uint32_t per_size,
                         std::uint64_t seed, const StftConfig& stft, double sample_rate) {
  if (training.empty()) throw ValidationError("sample_blocks: empty training set");
  if (sizes.empty()) throw ValidationError("sample_blocks: no block sizes");
  if (per_size < 1) throw ValidationError("sample_blocks: per_size must be >= 1");

  Dictionary d;
  d.sizes.assign(sizes.begin(), sizes.end());
  d.per_size = per_size;
  d.seed = seed;
  d.stft = stft;
  d.sample_rate = sample_rate;

  const BlockSize need = d.max_extent();
  for (const auto& s : d.sizes)
    if (s.w < 1 || s.l < 1) throw ValidationError("sample_blocks: block size " + s.to_string());
  for (const auto& spec : training) {
    if (spec.frames() < need.w || spec.bins() < need.l)
      throw ValidationError("sample_blocks: spectrogram '" + spec.source_id + "' is " +
                            std::to_string(spec.frames()) + "x" + std::to_string(spec.bins()) +
                            ", smaller than block extent " + need.to_string());
  }

  const std::size_t n_sizes = d.sizes.size();
  d.blocks.resize(n_sizes * per_size);
  for (std::size_t s = 0; s < n_sizes; ++s) {
    const BlockSize size = d.sizes[s];
    Rng rng(seed, s);
    for (std::uint32_t j = 0; j < per_size; ++j) {
      const auto& spec = training[rng.uniform_index(training.size())];
      const std::size_t rows = spec.frames() - size.w + 1;
      const std::size_t cols = spec.bins() - size.l + 1;
      const std::uint64_t pos = rng.uniform_index(rows * cols);
      Block& b = d.blocks[j * n_sizes + s];
      b.size = size;
      b.origin_frame = static_cast<std::uint32_t>(pos / cols);
      b.origin_bin = static_cast<std::uint32_t>(pos % cols);
      b.source_id = spec.source_id;
      b.values = spec.values.sub(b.origin_frame, b.origin_bin, size.w, size.l);
    }
  }
  return d;
}

std::vector<std::uint8_t> serialize_dictionary(const Dictionary& d) {
  detail::ByteWriter out;
  out.put_bytes(kMagic, 4);
  out.put_u32(kVersion);
  out.put_u32(static_cast<std::uint32_t>(d.blocks.size()));
  out.put_u64(d.seed);
  out.put_f64(d.stft.window_ms);
  out.put_u32(d.stft.hop_divisor);
  out.put_f64(d.stft.epsilon);
  out.put_f64(d.sample_rate);
  out.put_u32(d.per_size);
  out.put_u32(static_cast<std::uint32_t>(d.sizes.size()));
  for (const auto& s : d.sizes) {
    out.put_u32(s.w);
    out.put_u32(s.l);
  }
  for (const auto& b : d.blocks) {
    out.put_u32(b.size.w);
    out.put_u32(b.size.l);
    out.put_u32(b.origin_frame);
    out.put_u32(b.origin_bin);
    out.put_str(b.source_id);
    for (double v : b.values.flat()) out.put_f64(v);
  }
  out.put_u32(detail::crc32(out.bytes()));
  return std::move(out.bytes());
}

Dictionary deserialize_dictionary(std::span<const std::uint8_t> bytes, const std::string& what) {
  if (bytes.size() < 12) throw FormatError(what + ": truncated file");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(what + ": not a dictionary file (bad magic)");
  detail::ByteReader in(bytes.subspan(4), what);
  const std::uint32_t version = in.get_u32();
  if (version != kVersion)
    throw FormatError(what + ": unsupported dictionary version " + std::to_string(version));
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + body.size(), 4);
  if (detail::crc32(body) != stored_crc) throw ChecksumError(what + ": checksum mismatch");

  detail::ByteReader r(body.subspan(8), what);
  Dictionary d;
  const std::uint32_t m = r.get_u32();
  d.seed = r.get_u64();
  d.stft.window_ms = r.get_f64();
  d.stft.hop_divisor = r.get_u32();
  d.stft.epsilon = r.get_f64();
  d.sample_rate = r.get_f64();
  d.per_size = r.get_u32();
  const std::uint32_t n_sizes = r.get_u32();
  if (static_cast<std::uint64_t>(n_sizes) * d.per_size != m)
    throw FormatError(what + ": block count " + std::to_string(m) + " != " +
                      std::to_string(n_sizes) + " sizes x " + std::to_string(d.per_size));
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    BlockSize s;
    s.w = r.get_u32();
    s.l = r.get_u32();
    d.sizes.push_back(s);
  }
  d.blocks.resize(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    Block& b = d.blocks[i];
    b.size.w = r.get_u32();
    b.size.l = r.get_u32();
    if (b.size != d.sizes[i % n_sizes])
      throw FormatError(what + ": block " + std::to_string(i) + " has shape " +
                        b.size.to_string() + ", expected " + d.sizes[i % n_sizes].to_string());
    b.origin_frame = r.get_u32();
    b.origin_bin = r.get_u32();
    b.source_id = r.get_str();
    std::vector<double> values(b.size.area());
    for (double& v : values) v = r.get_f64();
    b.values = Grid<double>(b.size.w, b.size.l, std::move(values));
  }
  if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after last block");
  return d;
}

void save_dictionary(const Dictionary& d, const std::filesystem::path& path) {
  detail::write_file(path, serialize_dictionary(d));
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  return deserialize_dictionary(detail::read_file(path), path.string());
}

}  // namespace sonotex
