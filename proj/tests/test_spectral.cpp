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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"

using namespace sunac;

TEST(Fft, MatchesNaiveDft) {
  Rng rng(1);
  for (std::size_t n : {8u, 64u, 100u, 512u}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    const auto a = fft::rfft(x);
    const auto b = oracle::dft(x);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LT(std::abs(a[k] - b[k]), 1e-9 * n);
    const auto back = fft::irfft(a, n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
  }
}

TEST(Stft, BinCenterSineStaysInHannMainLobe) {
  AudioBuffer a;
  const std::size_t bin = 32;
  a.samples.resize(8192);
  for (std::size_t i = 0; i < a.size(); ++i)
    a.samples[i] = static_cast<float>(std::sin(2.0 * std::numbers::pi * bin * i / 512.0));
  const ComplexSpectrogram s = stft(a, {512, 128});
  const std::size_t f = s.n_frames / 2;
  double others = 0.0;
  for (std::size_t b = 0; b < s.n_bins; ++b)
    if (b + 1 < bin || b > bin + 1) others = std::max(others, s.magnitude(b, f));
  EXPECT_NEAR(s.magnitude(bin, f), 128.0, 1e-3);  // amplitude * sum(window) / 2
  EXPECT_NEAR(s.magnitude(bin - 1, f), 64.0, 1e-3);
  EXPECT_LT(others, 1e-3);
}

TEST(Stft, ZeroInZeroOut) {
  AudioBuffer a;
  a.samples.assign(1000, 0.0f);
  const ComplexSpectrogram s = stft(a);
  for (float v : s.real.values()) EXPECT_EQ(v, 0.0f);
  for (float v : s.imag.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(s.n_frames, stft_frame_count(1000, 128));
}

TEST(Stft, RoundTripOneSecond) {
  Rng rng(2);
  const AudioBuffer a = oracle::random_audio(16000, rng);
  for (const StftConfig cfg : {StftConfig{512, 128}, StftConfig{1024, 256}, StftConfig{2048, 512}}) {
    const AudioBuffer b = istft(stft(a, cfg), a.size(), a.sample_rate, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) err += std::pow(double(a.samples[i]) - b.samples[i], 2);
    EXPECT_LT(std::sqrt(err / a.size()), 1e-4);
  }
}

TEST(Stft, Linearity) {
  Rng rng(3);
  const AudioBuffer x = oracle::random_audio(3000, rng);
  const AudioBuffer y = oracle::random_audio(3000, rng);
  AudioBuffer z = x;
  for (std::size_t i = 0; i < z.size(); ++i) z.samples[i] = 0.5f * x.samples[i] - 2.0f * y.samples[i];
  const ComplexSpectrogram sx = stft(x), sy = stft(y), sz = stft(z);
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < sz.real.size(); ++i) {
    const double re = 0.5 * sx.real.values()[i] - 2.0 * sy.real.values()[i];
    const double im = 0.5 * sx.imag.values()[i] - 2.0 * sy.imag.values()[i];
    scale = std::max(scale, std::hypot(re, im));
    err = std::max(err, std::hypot(re - sz.real.values()[i], im - sz.imag.values()[i]));
  }
  EXPECT_LT(err, 1e-6 * scale);
}

TEST(Stft, Errors) {
  EXPECT_THROW(stft(AudioBuffer{}), InvalidArgument);
  AudioBuffer a;
  a.samples.assign(100, 0.0f);
  EXPECT_THROW(stft(a, {500, 100}), InvalidArgument);
  EXPECT_THROW(stft(a, {512, 0}), InvalidArgument);
  EXPECT_THROW(stft(a, {512, 1024}), InvalidArgument);
}

TEST(Mel, ZeroAudioIsLogFloor) {
  AudioBuffer a;
  a.samples.assign(4000, 0.0f);
  const Matrix m = log_mel_spectrogram(a, 512, 128, 40);
  for (float v : m.values()) EXPECT_FLOAT_EQ(v, static_cast<float>(std::log10(kMelFloor)));
  const Matrix power = mel_spectrogram(a, 512, 128, 40);
  for (float v : power.values()) EXPECT_EQ(v, static_cast<float>(kMelFloor));
}

TEST(Mel, DoublingAmplitudeRaisesEveryEntry) {
  Rng rng(4);
  const AudioBuffer a = oracle::random_audio(8000, rng);
  AudioBuffer b = a;
  for (float& v : b.samples) v *= 2.0f;
  const Matrix la = log_mel_spectrogram(a, 512, 128, 40);
  const Matrix lb = log_mel_spectrogram(b, 512, 128, 40);
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_GT(lb.values()[i], la.values()[i]);
}

TEST(Mel, WhiteNoiseMatchesDenseFilterbankOracle) {
  Rng rng(5);
  const AudioBuffer a = oracle::random_audio(4000, rng, 0.01);
  const Matrix m = mel_spectrogram(a, 512, 128, 40);
  const oracle::Grid expect = oracle::mel_power(a.samples, 512, 128, 40, 16000);
  EXPECT_LT(oracle::max_abs(expect, m), 1e-5);
}

TEST(Mel, FilterbankShapeAndPrecondition) {
  const Matrix fb = mel_filterbank(40, 512, 16000);
  EXPECT_EQ(fb.rows(), 40u);
  EXPECT_EQ(fb.cols(), 257u);
  EXPECT_LT(oracle::max_abs(oracle::mel_matrix(40, 512, 16000), fb), 1e-6);
  EXPECT_THROW(mel_filterbank(257, 512, 16000), InvalidArgument);
}
