// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sonotex/audio.hpp"

namespace sonotex {

enum class SampleFormat { kPcm8, kPcm16, kPcm24, kPcm32, kFloat32 };

// Decodes a RIFF/WAVE buffer. Integer PCM (8/16/24/32-bit), IEEE float32 and
// WAVE_FORMAT_EXTENSIBLE wrappers of those are accepted. Multi-channel input
// is averaged to mono. Throws FormatError on malformed data.
AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id);

// Reads and decodes a file; source_id is the path as given.
AudioClip read_wav(const std::filesystem::path& path);

// Interleaves `channels` (all the same length) into a WAVE buffer.
std::vector<std::uint8_t> encode_wav(std::span<const std::vector<double>> channels,
                                     std::uint32_t sample_rate, SampleFormat format);

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               SampleFormat format = SampleFormat::kPcm16);

// Value a sample takes after a round trip through 16-bit PCM.
double quantize_pcm16(double x);

}  // namespace sonotex
