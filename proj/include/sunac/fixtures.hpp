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

// Deterministic band-limited stand-ins for speech / music / SFX sources.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sunac/assignment.hpp"
#include "sunac/audio.hpp"
#include "sunac/error.hpp"
#include "sunac/extractor.hpp"
#include "sunac/rng.hpp"
#include "sunac/spectral.hpp"

namespace sunac {

enum class Generator { BandLimitedNoise, HarmonicTone, ChirpBurst };

inline std::string to_string(Generator g) {
  switch (g) {
    case Generator::BandLimitedNoise: return "band_limited_noise";
    case Generator::HarmonicTone: return "harmonic_tone";
    case Generator::ChirpBurst: return "chirp_burst";
  }
  return "?";
}

inline Generator parse_generator(const std::string& name) {
  const std::string n = lowercase(name);
  if (n == "band_limited_noise") return Generator::BandLimitedNoise;
  if (n == "harmonic_tone") return Generator::HarmonicTone;
  if (n == "chirp_burst") return Generator::ChirpBurst;
  throw ConfigError("unknown generator '" + name + "'");
}

struct FixtureSpec {
  PromptType prompt_type = PromptType::Speech;
  Generator generator = Generator::HarmonicTone;
  std::uint64_t seed = 0;
  double duration_s = 1.0;
  double band_low = 100.0;
  double band_high = 3400.0;
};

inline constexpr double kFixtureRms = 0.1;

/// Default band per type. Two speech sources split the speech band in two.
/// `speech_slot` is -1 for a lone speech source, 0 or 1 otherwise.
inline std::pair<double, double> default_band(PromptType type, int speech_slot = -1) {
  switch (type) {
    case PromptType::Speech:
      if (speech_slot == 0) return {100.0, 1600.0};
      if (speech_slot == 1) return {1800.0, 3400.0};
      return {100.0, 3400.0};
    case PromptType::Music: return {3600.0, 5400.0};
    case PromptType::Sfx: return {5600.0, 7600.0};
    case PromptType::Mix: break;
  }
  throw InvalidArgument("fixtures: <mix> is not a source type");
}

inline Generator default_generator(PromptType type) {
  return type == PromptType::Sfx ? Generator::ChirpBurst : Generator::HarmonicTone;
}

namespace detail {

inline std::vector<double> band_limited_noise(std::size_t n, double lo, double hi, std::uint32_t sr, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  if (n < 2) return x;
  auto spec = fft::rfft(x);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * sr / static_cast<double>(n);
    if (f < lo || f > hi) spec[k] = 0.0;
  }
  return fft::irfft(spec, n);
}

inline std::vector<double> harmonic_tone(std::size_t n, double lo, double hi, std::uint32_t sr, Rng& rng) {
  const double f0 = lo * 1.05 + rng.uniform() * 0.25 * (hi - lo);
  const double top = hi * 0.97;
  std::vector<std::pair<double, double>> partials;  // (freq, phase)
  for (int k = 1; k * f0 <= top; ++k) partials.emplace_back(k * f0, rng.uniform(0.0, 2.0 * std::numbers::pi));
  std::vector<double> x(n, 0.0);
  for (std::size_t p = 0; p < partials.size(); ++p) {
    const double amp = 1.0 / static_cast<double>(p + 1);
    const double w = 2.0 * std::numbers::pi * partials[p].first / sr;
    for (std::size_t i = 0; i < n; ++i) x[i] += amp * std::sin(w * static_cast<double>(i) + partials[p].second);
  }
  return x;
}

/// Hann-windowed linear chirps (50-150 ms) placed every ~200 ms with random jitter.
inline std::vector<double> chirp_burst(std::size_t n, double lo, double hi, std::uint32_t sr, Rng& rng) {
  const double margin = std::max(0.05 * (hi - lo), 60.0);
  const double f_lo = lo + margin;
  const double f_hi = std::max(hi - margin, f_lo);
  std::vector<double> x(n, 0.0);
  const auto period = static_cast<std::size_t>(0.2 * sr);
  for (std::size_t start = static_cast<std::size_t>(rng.uniform() * 0.05 * sr); start < n;
       start += period / 2 + static_cast<std::size_t>(rng.uniform() * period)) {
    const auto len = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform(0.05, 0.15) * sr), n - start);
    if (len < 2) break;
    const double fa = rng.uniform(f_lo, f_hi);
    const double fb = rng.uniform(f_lo, f_hi);
    const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double dur = static_cast<double>(len) / sr;
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / sr;
      const double phase = phase0 + 2.0 * std::numbers::pi * (fa * t + 0.5 * (fb - fa) / dur * t * t);
      const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len - 1));
      x[start + i] += env * std::sin(phase);
    }
  }
  return x;
}

}  // namespace detail

inline void validate(const FixtureSpec& spec, std::uint32_t sample_rate) {
  if (!(spec.duration_s > 0.0)) throw ConfigError("fixture: duration must be > 0");
  if (!(spec.band_low > 0.0 && spec.band_low < spec.band_high && spec.band_high < sample_rate / 2.0))
    throw ConfigError("fixture: band must satisfy 0 < low < high < sample_rate/2");
  if (spec.prompt_type == PromptType::Mix) throw ConfigError("fixture: <mix> is not a source type");
}

/// Deterministic per (spec, sample_rate); RMS normalized to 0.1.
inline AudioBuffer generate(const FixtureSpec& spec, std::uint32_t sample_rate = 16000) {
  validate(spec, sample_rate);
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * sample_rate));
  if (n == 0) throw ConfigError("fixture: duration shorter than one sample");
  // seed mixes in the generator so the same seed gives unrelated signals across generators
  Rng rng(spec.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(spec.generator) + 1);
  std::vector<double> x;
  switch (spec.generator) {
    case Generator::BandLimitedNoise: x = detail::band_limited_noise(n, spec.band_low, spec.band_high, sample_rate, rng); break;
    case Generator::HarmonicTone: x = detail::harmonic_tone(n, spec.band_low, spec.band_high, sample_rate, rng); break;
    case Generator::ChirpBurst: x = detail::chirp_burst(n, spec.band_low, spec.band_high, sample_rate, rng); break;
  }
  double energy = 0.0;
  for (double v : x) energy += v * v;
  const double r = std::sqrt(energy / static_cast<double>(n));
  if (r == 0.0) throw ConfigError("fixture: generator produced silence");
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<float>(x[i] * kFixtureRms / r);
  return out;
}

/// Checks the source-type constraints: at most two speech, one music and one SFX,
/// no <mix>, and N <= 3 unless `allow_four_sources`.
inline void check_mixture_constraints(const std::vector<PromptType>& types, bool allow_four_sources) {
  if (types.empty()) throw InvalidArgument("mixture: at least one source is required");
  std::size_t counts[kPromptTypeCount] = {};
  for (PromptType t : types) ++counts[static_cast<std::size_t>(t)];
  if (counts[static_cast<std::size_t>(PromptType::Mix)] > 0) throw InvalidArgument("mixture: <mix> is not a source type");
  if (counts[static_cast<std::size_t>(PromptType::Speech)] > 2)
    throw InvalidArgument("mixture: the number of <speech> sources never exceeds two");
  if (counts[static_cast<std::size_t>(PromptType::Music)] > 1) throw InvalidArgument("mixture: <music> cannot be repeated");
  if (counts[static_cast<std::size_t>(PromptType::Sfx)] > 1) throw InvalidArgument("mixture: <sfx> cannot be repeated");
  const std::size_t limit = allow_four_sources ? 4 : 3;
  if (types.size() > limit)
    throw InvalidArgument("mixture: " + std::to_string(types.size()) + " sources exceeds the limit of " +
                          std::to_string(limit));
}

inline SourceSet make_mixture(const std::vector<FixtureSpec>& specs, std::uint32_t sample_rate = 16000,
                              bool allow_four_sources = false) {
  std::vector<PromptType> types;
  for (const FixtureSpec& s : specs) types.push_back(s.prompt_type);
  check_mixture_constraints(types, allow_four_sources);

  SourceSet set;
  set.types = types;
  for (const FixtureSpec& s : specs) set.sources.push_back(generate(s, sample_rate));
  AudioBuffer mix;
  mix.sample_rate = sample_rate;
  mix.samples.assign(set.sources.front().size(), 0.0f);
  for (const AudioBuffer& s : set.sources) {
    if (s.size() != mix.size()) throw InvalidArgument("mixture: all sources must have the same duration");
    for (std::size_t i = 0; i < s.size(); ++i) mix.samples[i] += s.samples[i];
  }
  set.mixture = std::move(mix);
  set.validate();
  return set;
}

struct FixtureManifest {
  std::uint32_t sample_rate = 16000;
  bool allow_four_sources = false;
  std::vector<FixtureSpec> sources;
};

/// Reads a manifest; per-source "band", "generator", "duration_s" and "seed" are optional.
inline FixtureManifest fixture_manifest_from_json(const nlohmann::json& j) {
  try {
    FixtureManifest m;
    if (j.contains("sample_rate")) j.at("sample_rate").get_to(m.sample_rate);
    if (j.contains("allow_four_sources")) j.at("allow_four_sources").get_to(m.allow_four_sources);
    const double duration = j.value("duration_s", 1.0);
    const auto& list = j.at("sources");
    std::size_t n_speech = 0;
    for (const auto& s : list)
      if (parse_prompt(s.at("prompt").get<std::string>()) == PromptType::Speech) ++n_speech;
    int speech_slot = 0;
    std::uint64_t index = 0;
    for (const auto& s : list) {
      FixtureSpec f;
      f.prompt_type = parse_prompt(s.at("prompt").get<std::string>());
      f.generator = s.contains("generator") ? parse_generator(s.at("generator").get<std::string>())
                                            : default_generator(f.prompt_type);
      f.seed = s.value("seed", index + 1);
      f.duration_s = s.value("duration_s", duration);
      int slot = -1;
      if (f.prompt_type == PromptType::Speech && n_speech > 1) slot = speech_slot++;
      if (s.contains("band")) {
        f.band_low = s.at("band").at(0).get<double>();
        f.band_high = s.at("band").at(1).get<double>();
      } else if (f.prompt_type != PromptType::Mix) {
        std::tie(f.band_low, f.band_high) = default_band(f.prompt_type, slot);
      }
      m.sources.push_back(f);
      ++index;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("fixture manifest: ") + e.what());
  }
}

}  // namespace sunac
