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

// STFT / inverse STFT and HTK mel filterbanks. FFTs are delegated to FFTW.

#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "sunac/audio.hpp"
#include "sunac/error.hpp"
#include "sunac/tensor.hpp"

namespace sunac {

namespace fft {

namespace detail {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

/// Plans are created once per size and shared; FFTW's planner is not
/// thread-safe but executing an existing plan on new arrays is.
inline PlanPair plans_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<fftw_complex> spec(n / 2 + 1);
  PlanPair p;
  const int len = static_cast<int>(n);
  p.forward = fftw_plan_dft_r2c_1d(len, real.data(), spec.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_1d(len, spec.data(), real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(n, p);
  return p;
}

}  // namespace detail

/// Real-to-complex DFT, n/2 + 1 bins, unnormalized.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  if (x.empty()) throw InvalidArgument("rfft: empty input");
  const detail::PlanPair p = detail::plans_for(x.size());
  std::vector<double> in = x;
  std::vector<std::complex<double>> out(x.size() / 2 + 1);
  fftw_execute_dft_r2c(p.forward, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

/// Inverse of rfft including the 1/n factor.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n) {
  if (spec.size() != n / 2 + 1) throw ContractViolation("irfft: bin count does not match length");
  const detail::PlanPair p = detail::plans_for(n);
  std::vector<std::complex<double>> in = spec;  // c2r overwrites its input
  std::vector<double> out(n);
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace fft

enum class WindowKind { Hann, Rectangular };

struct StftConfig {
  std::size_t n_fft = 512;
  std::size_t hop = 128;  // 75% overlap
  WindowKind window = WindowKind::Hann;
};

/// Periodic window of length n.
inline std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowKind::Hann)
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

struct ComplexSpectrogram {
  std::size_t n_bins = 0;
  std::size_t n_frames = 0;
  Matrix real;  // [n_bins x n_frames]
  Matrix imag;

  double magnitude(std::size_t bin, std::size_t frame) const { return std::hypot(real(bin, frame), imag(bin, frame)); }
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Frames for a centered STFT: n_fft/2 zeros on the left, frames at every hop
/// until the last sample has been the center of (or passed) a frame.
inline std::size_t stft_frame_count(std::size_t length, std::size_t hop) { return 1 + (length + hop - 1) / hop; }

inline void validate_stft(const StftConfig& cfg) {
  if (!is_power_of_two(cfg.n_fft)) throw InvalidArgument("stft: n_fft must be a power of two");
  if (cfg.hop == 0 || cfg.hop > cfg.n_fft) throw InvalidArgument("stft: hop must be in (0, n_fft]");
}

inline ComplexSpectrogram stft(const AudioBuffer& audio, const StftConfig& cfg = {}) {
  validate_stft(cfg);
  if (audio.empty()) throw InvalidArgument("stft: empty audio");
  const std::size_t n = cfg.n_fft;
  const std::size_t frames = stft_frame_count(audio.size(), cfg.hop);
  const std::size_t offset = n / 2;
  const std::vector<double> window = make_window(cfg.window, n);

  ComplexSpectrogram spec;
  spec.n_bins = n / 2 + 1;
  spec.n_frames = frames;
  spec.real = Matrix(spec.n_bins, frames);
  spec.imag = Matrix(spec.n_bins, frames);
  std::vector<double> frame(n);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto pos = static_cast<std::ptrdiff_t>(f * cfg.hop + i) - static_cast<std::ptrdiff_t>(offset);
      const double s = (pos >= 0 && pos < static_cast<std::ptrdiff_t>(audio.size())) ? audio.samples[pos] : 0.0;
      frame[i] = s * window[i];
    }
    const auto bins = fft::rfft(frame);
    for (std::size_t b = 0; b < spec.n_bins; ++b) {
      spec.real(b, f) = static_cast<float>(bins[b].real());
      spec.imag(b, f) = static_cast<float>(bins[b].imag());
    }
  }
  return spec;
}

/// Weighted overlap-add inverse of `stft`, trimmed to `length` samples.
inline AudioBuffer istft(const ComplexSpectrogram& spec, std::size_t length, std::uint32_t sample_rate,
                         const StftConfig& cfg = {}) {
  validate_stft(cfg);
  const std::size_t n = cfg.n_fft;
  if (spec.n_bins != n / 2 + 1) throw ContractViolation("istft: bin count does not match n_fft");
  const std::vector<double> window = make_window(cfg.window, n);
  const std::size_t total = (spec.n_frames - 1) * cfg.hop + n;
  std::vector<double> acc(total, 0.0);
  std::vector<double> norm(total, 0.0);
  std::vector<std::complex<double>> bins(spec.n_bins);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    for (std::size_t b = 0; b < spec.n_bins; ++b) bins[b] = {spec.real(b, f), spec.imag(b, f)};
    const std::vector<double> frame = fft::irfft(bins, n);
    for (std::size_t i = 0; i < n; ++i) {
      acc[f * cfg.hop + i] += frame[i] * window[i];
      norm[f * cfg.hop + i] += window[i] * window[i];
    }
  }
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.assign(length, 0.0f);
  const std::size_t offset = n / 2;
  for (std::size_t i = 0; i < length && i + offset < total; ++i) {
    const double w = norm[i + offset];
    out.samples[i] = w > 1e-10 ? static_cast<float>(acc[i + offset] / w) : 0.0f;
  }
  return out;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// HTK-style triangular filterbank [n_mels x (n_fft/2 + 1)] spanning 0 .. sample_rate/2, unnormalized.
inline Matrix mel_filterbank(std::size_t n_mels, std::size_t n_fft, std::uint32_t sample_rate) {
  const std::size_t n_bins = n_fft / 2 + 1;
  if (n_mels == 0 || n_mels >= n_bins) throw InvalidArgument("mel: n_mels must be in [1, n_fft/2 + 1)");
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  Matrix fb(n_mels, n_bins);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m];
    const double mid = edges[m + 1];
    const double hi = edges[m + 2];
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb(m, b) = static_cast<float>(w);
    }
  }
  return fb;
}

inline constexpr double kMelFloor = 1e-5;

/// Mel power spectrogram [n_mels x n_frames], floored at kMelFloor.
inline Matrix mel_spectrogram(const AudioBuffer& audio, std::size_t n_fft, std::size_t hop, std::size_t n_mels) {
  const StftConfig cfg{n_fft, hop, WindowKind::Hann};
  validate_stft(cfg);
  const Matrix fb = mel_filterbank(n_mels, n_fft, audio.sample_rate);
  const ComplexSpectrogram spec = stft(audio, cfg);
  Matrix mel(n_mels, spec.n_frames);
  std::vector<double> power(spec.n_bins);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    for (std::size_t b = 0; b < spec.n_bins; ++b) {
      const double re = spec.real(b, f);
      const double im = spec.imag(b, f);
      power[b] = re * re + im * im;
    }
    for (std::size_t m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      const std::span<const float> row = fb.row(m);
      for (std::size_t b = 0; b < spec.n_bins; ++b) acc += row[b] * power[b];
      mel(m, f) = static_cast<float>(std::max(acc, kMelFloor));
    }
  }
  return mel;
}

/// log10 of mel_spectrogram; all-zero audio maps to log10(kMelFloor) = -5 everywhere.
inline Matrix log_mel_spectrogram(const AudioBuffer& audio, std::size_t n_fft, std::size_t hop, std::size_t n_mels) {
  Matrix mel = mel_spectrogram(audio, n_fft, hop, n_mels);
  for (float& v : mel.values()) v = static_cast<float>(std::log10(static_cast<double>(v)));
  return mel;
}

}  // namespace sunac
