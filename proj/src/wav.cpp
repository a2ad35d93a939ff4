// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sonotex/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "binio.hpp"
#include "sonotex/error.hpp"

namespace sonotex {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

bool tag_is(const char (&tag)[4], const char* expected) {
  return std::memcmp(tag, expected, 4) == 0;
}

double read_sample(const std::uint8_t* p, const FmtChunk& fmt) {
  switch (fmt.bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32: {
      if (fmt.format == kFormatFloat) {
        float f;
        std::memcpy(&f, p, 4);
        return f;
      }
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v / 2147483648.0;
    }
  }
  return 0.0;
}

std::uint16_t bits_of(SampleFormat format) {
  switch (format) {
    case SampleFormat::kPcm8: return 8;
    case SampleFormat::kPcm16: return 16;
    case SampleFormat::kPcm24: return 24;
    case SampleFormat::kPcm32:
    case SampleFormat::kFloat32: return 32;
  }
  return 16;
}

std::int64_t to_int(double x, int bits) {
  const double scale = std::ldexp(1.0, bits - 1);
  const auto lo = static_cast<std::int64_t>(-scale);
  const auto hi = static_cast<std::int64_t>(scale) - 1;
  const auto v = static_cast<std::int64_t>(std::llround(x * scale));
  return std::clamp(v, lo, hi);
}

}  // namespace

double quantize_pcm16(double x) { return static_cast<double>(to_int(x, 16)) / 32768.0; }

AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id) {
  detail::ByteReader in(bytes, source_id);
  char riff[4], wave[4];
  in.get_bytes(riff, 4);
  in.get_u32();
  in.get_bytes(wave, 4);
  if (!tag_is(riff, "RIFF") || !tag_is(wave, "WAVE"))
    throw FormatError(source_id + ": not a RIFF/WAVE file");

  FmtChunk fmt;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;
  while (in.remaining() >= 8 && !have_data) {
    char id[4];
    in.get_bytes(id, 4);
    const std::uint32_t size = in.get_u32();
    const std::size_t start = in.position();
    if (tag_is(id, "fmt ")) {
      if (size < 16) throw FormatError(source_id + ": fmt chunk too small");
      fmt.format = in.get<std::uint16_t>();
      fmt.channels = in.get<std::uint16_t>();
      fmt.sample_rate = in.get_u32();
      in.get_u32();  // byte rate
      fmt.block_align = in.get<std::uint16_t>();
      fmt.bits = in.get<std::uint16_t>();
      if (fmt.format == kFormatExtensible) {
        if (size < 40) throw FormatError(source_id + ": extensible fmt chunk too small");
        in.get<std::uint16_t>();  // cbSize
        in.get<std::uint16_t>();  // valid bits
        in.get_u32();             // channel mask
        fmt.format = in.get<std::uint16_t>();  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (tag_is(id, "data")) {
      const std::size_t n = std::min<std::size_t>(size, in.remaining());
      data = bytes.subspan(start, n);
      have_data = true;
      break;
    }
    const std::size_t consumed = in.position() - start;
    const std::size_t skip = size + (size & 1u) - consumed;
    if (skip > in.remaining()) break;
    std::vector<std::uint8_t> sink(skip);
    in.get_bytes(sink.data(), skip);
  }
  if (!have_fmt) throw FormatError(source_id + ": missing fmt chunk");
  if (!have_data) throw FormatError(source_id + ": missing data chunk");

  const bool int_ok = fmt.format == kFormatPcm &&
                      (fmt.bits == 8 || fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
  const bool float_ok = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!int_ok && !float_ok)
    throw FormatError(source_id + ": unsupported encoding (format " +
                      std::to_string(fmt.format) + ", " + std::to_string(fmt.bits) +
                      " bits)");
  if (fmt.channels == 0 || fmt.sample_rate == 0)
    throw FormatError(source_id + ": zero channels or sample rate");
  const std::size_t frame_bytes = static_cast<std::size_t>(fmt.channels) * (fmt.bits / 8);

  AudioClip clip;
  clip.sample_rate = fmt.sample_rate;
  clip.source_id = std::move(source_id);
  const std::size_t frames = data.size() / frame_bytes;
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* p = data.data() + i * frame_bytes;
    double sum = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) sum += read_sample(p + c * (fmt.bits / 8), fmt);
    clip.samples[i] = sum / fmt.channels;
  }
  return clip;
}

AudioClip read_wav(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_wav(bytes, path.string());
}

std::vector<std::uint8_t> encode_wav(std::span<const std::vector<double>> channels,
                                     std::uint32_t sample_rate, SampleFormat format) {
  if (channels.empty()) throw ValidationError("encode_wav: no channels");
  const std::size_t frames = channels.front().size();
  for (const auto& ch : channels)
    if (ch.size() != frames) throw ValidationError("encode_wav: channel length mismatch");

  const std::uint16_t bits = bits_of(format);
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t block_align = n_ch * (bits / 8);
  const auto data_bytes = static_cast<std::uint32_t>(frames * block_align);

  detail::ByteWriter out;
  out.put_bytes("RIFF", 4);
  out.put_u32(36 + data_bytes + (data_bytes & 1u));
  out.put_bytes("WAVE", 4);
  out.put_bytes("fmt ", 4);
  out.put_u32(16);
  out.put_u16(format == SampleFormat::kFloat32 ? kFormatFloat : kFormatPcm);
  out.put_u16(n_ch);
  out.put_u32(sample_rate);
  out.put_u32(sample_rate * block_align);
  out.put_u16(block_align);
  out.put_u16(bits);
  out.put_bytes("data", 4);
  out.put_u32(data_bytes);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& ch : channels) {
      const double x = ch[i];
      switch (format) {
        case SampleFormat::kPcm8: {
          const auto v = static_cast<std::uint8_t>(to_int(x, 8) + 128);
          out.put_bytes(&v, 1);
          break;
        }
        case SampleFormat::kPcm16:
          out.put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(to_int(x, 16))));
          break;
        case SampleFormat::kPcm24: {
          const auto v = static_cast<std::uint32_t>(static_cast<std::int32_t>(to_int(x, 24)));
          const std::uint8_t b[3] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                                     static_cast<std::uint8_t>(v >> 16)};
          out.put_bytes(b, 3);
          break;
        }
        case SampleFormat::kPcm32:
          out.put_u32(static_cast<std::uint32_t>(static_cast<std::int32_t>(to_int(x, 32))));
          break;
        case SampleFormat::kFloat32: {
          const auto f = static_cast<float>(x);
          out.put_bytes(&f, 4);
          break;
        }
      }
    }
  }
  if (data_bytes & 1u) out.put_bytes("\0", 1);
  return std::move(out.bytes());
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, SampleFormat format) {
  validate(clip);
  const double rate = std::round(clip.sample_rate);
  if (rate != clip.sample_rate)
    throw ValidationError("write_wav: sample rate must be a whole number of Hz");
  const std::vector<double> mono[1] = {clip.samples};
  detail::write_file(path, encode_wav(mono, static_cast<std::uint32_t>(rate), format));
}

}  // namespace sonotex
