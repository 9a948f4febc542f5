// Copyright 2026 The sunac-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sunac/error.hpp"
#include "sunac/io.hpp"

namespace sunac {

/// Mono waveform.
struct AudioBuffer {
  std::vector<float> samples;
  std::uint32_t sample_rate = 16000;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }

  bool all_finite() const {
    return std::all_of(samples.begin(), samples.end(), [](float v) { return std::isfinite(v); });
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;
};

inline double rms(const AudioBuffer& a) {
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (float v : a.samples) acc += static_cast<double>(v) * v;
  return std::sqrt(acc / static_cast<double>(a.size()));
}

namespace wav {

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Serializes as a canonical 44-byte-header RIFF/WAVE, 16-bit PCM mono.
/// Samples are clipped to [-1, 1] and rounded to the nearest integer step.
inline std::vector<std::uint8_t> encode(const AudioBuffer& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);  // PCM
  detail::put_u16(out, 1);  // mono
  detail::put_u32(out, audio.sample_rate);
  detail::put_u32(out, audio.sample_rate * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_u32(out, data_bytes);
  for (float v : audio.samples) {
    const double clipped = std::clamp(static_cast<double>(v), -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
    detail::put_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

/// Parses a RIFF/WAVE file holding 16-bit PCM mono. Unknown chunks are skipped.
inline AudioBuffer decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw AudioFormatError("not a RIFF/WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  AudioBuffer audio;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t len = detail::get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw AudioFormatError("truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) throw AudioFormatError("fmt chunk too short");
      const std::uint16_t format = detail::get_u16(bytes.data() + body);
      const std::uint16_t channels = detail::get_u16(bytes.data() + body + 2);
      audio.sample_rate = detail::get_u32(bytes.data() + body + 4);
      const std::uint16_t bits = detail::get_u16(bytes.data() + body + 14);
      if (format != 1) throw AudioFormatError("WAV is not integer PCM");
      if (channels != 1) throw AudioFormatError("WAV must be mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw AudioFormatError("WAV must be 16-bit, got " + std::to_string(bits));
      if (audio.sample_rate == 0) throw AudioFormatError("WAV sample rate is zero");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw AudioFormatError("data chunk precedes fmt chunk");
      audio.samples.resize(len / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(detail::get_u16(bytes.data() + body + 2 * i));
        audio.samples[i] = static_cast<float>(raw) / 32767.0f;
      }
      return audio;
    }
    pos = body + len + (len & 1u);
  }
  throw AudioFormatError("WAV has no data chunk");
}

inline AudioBuffer read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioFormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

inline void write(const std::filesystem::path& path, const AudioBuffer& audio) {
  io::write_file_atomic(path, encode(audio));
}

}  // namespace wav

}  // namespace sunac
