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

// .snac code stream.
//
//   "SNAC" | u16 version | u32 sample_rate | u16 n_codebooks | u16 bits_per_code
//   | u16 n_sources | u32 n_frames | u64 original_len | u8 prompt tag x n_sources
//   | u16 code x (n_sources * n_codebooks * n_frames), row-major (source, codebook, frame)
//
// All integers little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sunac/error.hpp"
#include "sunac/extractor.hpp"
#include "sunac/io.hpp"
#include "sunac/rvq.hpp"

namespace sunac {

inline constexpr std::string_view kStreamMagic = "SNAC";
inline constexpr std::uint16_t kStreamVersion = 1;
inline constexpr std::size_t kStreamFixedHeader = 28;

struct CodeStream {
  std::uint32_t sample_rate = 16000;
  std::uint16_t n_codebooks = 0;
  std::uint16_t bits_per_code = 0;
  std::uint32_t n_frames = 0;
  std::uint64_t original_len = 0;
  PromptSpec prompts;
  std::vector<CodeGrid> sources;  // one grid per prompt

  std::size_t n_sources() const noexcept { return prompts.size(); }
  std::size_t n_entries() const noexcept { return n_sources() * n_codebooks * std::size_t{n_frames}; }
  std::size_t byte_size() const noexcept { return kStreamFixedHeader + n_sources() + 2 * n_entries(); }

  void validate() const {
    if (bits_per_code == 0 || bits_per_code > 16) throw CorruptStream("corrupt stream: bits_per_code must be in [1, 16]");
    if (prompts.empty()) throw CorruptStream("corrupt stream: no sources");
    if (sources.size() != prompts.size()) throw ContractViolation("code stream: grids and prompts differ in count");
    const std::uint32_t limit = 1u << bits_per_code;
    for (const CodeGrid& g : sources) {
      if (g.n_codebooks != n_codebooks || g.n_frames != n_frames)
        throw ContractViolation("code stream: grid shape disagrees with header");
      for (std::uint32_t c : g.codes)
        if (c >= limit) throw CorruptStream("corrupt stream: code " + std::to_string(c) + " exceeds bits_per_code");
    }
  }

  friend bool operator==(const CodeStream&, const CodeStream&) = default;
};

inline std::vector<std::uint8_t> serialize_stream(const CodeStream& s) {
  s.validate();
  io::ByteWriter w;
  w.raw(kStreamMagic);
  w.u16(kStreamVersion);
  w.u32(s.sample_rate);
  w.u16(s.n_codebooks);
  w.u16(s.bits_per_code);
  w.u16(static_cast<std::uint16_t>(s.n_sources()));
  w.u32(s.n_frames);
  w.u64(s.original_len);
  for (PromptType p : s.prompts) w.u8(static_cast<std::uint8_t>(p));
  for (const CodeGrid& g : s.sources)
    for (std::uint32_t c : g.codes) w.u16(static_cast<std::uint16_t>(c));
  return w.take();
}

inline CodeStream deserialize_stream(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes);
  if (r.raw(kStreamMagic.size()) != kStreamMagic) throw CorruptStream("corrupt stream: bad magic");
  const std::uint16_t version = r.u16();
  if (version != kStreamVersion) throw CorruptStream("corrupt stream: unsupported version " + std::to_string(version));
  CodeStream s;
  s.sample_rate = r.u32();
  s.n_codebooks = r.u16();
  s.bits_per_code = r.u16();
  const std::uint16_t n_sources = r.u16();
  s.n_frames = r.u32();
  s.original_len = r.u64();
  if (n_sources == 0) throw CorruptStream("corrupt stream: no sources");
  for (std::uint16_t i = 0; i < n_sources; ++i) s.prompts.push_back(prompt_from_tag(r.u8()));
  const std::size_t expected = 2ull * n_sources * s.n_codebooks * s.n_frames;
  if (r.remaining() != expected)
    throw CorruptStream("corrupt stream: payload has " + std::to_string(r.remaining()) + " bytes, header implies " +
                        std::to_string(expected));
  for (std::uint16_t i = 0; i < n_sources; ++i) {
    CodeGrid g(s.n_codebooks, s.n_frames);
    for (std::uint32_t& c : g.codes) c = r.u16();
    s.sources.push_back(std::move(g));
  }
  s.validate();
  return s;
}

inline void save_stream(const std::filesystem::path& path, const CodeStream& s) {
  io::write_file_atomic(path, serialize_stream(s));
}

inline CodeStream load_stream(const std::filesystem::path& path) { return deserialize_stream(io::read_file(path)); }

}  // namespace sunac
