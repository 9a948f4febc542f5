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

// Waveform encoder and decoder.
//
// Encoder: conv(1 -> C, k7), then per stride s a block of residual units at C
// channels followed by a strided conv (C -> 2C, k = 2s), then Snake and a k3
// conv to the latent dimension, then optional Transformer layers along time.
// Decoder: optional Transformer layers, conv(F -> C, k7), then per stride a
// transposed conv (C -> C/2, k = 2s) followed by residual units, then Snake,
// conv(-> 1, k7) and tanh.

#pragma once

#include <cmath>
#include <string>

#include "sunac/audio.hpp"
#include "sunac/config.hpp"
#include "sunac/error.hpp"
#include "sunac/numerics.hpp"
#include "sunac/tensor.hpp"
#include "sunac/weights.hpp"

namespace sunac {

/// F x T continuous latent (rows are features, columns are frames).
using FeatureMap = Matrix;

/// Number of latent frames for `length` samples under right zero-padding.
inline std::size_t frame_count(std::size_t length, const ModelConfig& config) {
  const std::size_t hop = config.hop_length();
  return (length + hop - 1) / hop;
}

namespace detail {

inline Matrix residual_unit(const Matrix& x, const WeightStore& w, const std::string& prefix, std::size_t dilation) {
  Matrix y = snake(x, w.vec(prefix + ".snake1"));
  y = conv1d(y, bind_conv(w, prefix + ".conv1"), {.stride = 1, .padding = 3 * dilation, .dilation = dilation});
  y = snake(y, w.vec(prefix + ".snake2"));
  y = conv1d(y, bind_conv(w, prefix + ".conv2"));
  for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] += x.values()[i];
  return y;
}

inline Matrix transformer_stack(Matrix x, const WeightStore& w, const std::string& prefix, std::uint32_t n_layers,
                                std::uint32_t n_heads) {
  for (std::uint32_t k = 0; k < n_layers; ++k)
    x = transformer_block(x, bind_transformer(w, prefix + std::to_string(k), n_heads, static_cast<int>(k)), true);
  return x;
}

inline void check_finite(const Matrix& m, const char* stage) {
  if (!m.all_finite()) throw NumericError(std::string(stage) + ": non-finite activation", -1);
}

}  // namespace detail

/// Convolutional part of the encoder only (no Transformer layers).
inline FeatureMap encode_conv(const AudioBuffer& audio, const ModelConfig& config, const WeightStore& weights) {
  if (audio.sample_rate != config.sample_rate)
    throw InvalidArgument("encode: audio is " + std::to_string(audio.sample_rate) + " Hz, model expects " +
                          std::to_string(config.sample_rate) + " Hz");
  const std::size_t hop = config.hop_length();
  if (audio.size() < hop)
    throw InvalidArgument("encode: need at least " + std::to_string(hop) + " samples, got " +
                          std::to_string(audio.size()));
  if (!audio.all_finite()) throw InvalidArgument("encode: non-finite input samples");

  Matrix x(1, frame_count(audio.size(), config) * hop, 0.0f);
  std::copy(audio.samples.begin(), audio.samples.end(), x.values().begin());

  x = conv1d(x, bind_conv(weights, "enc.conv_in"), {.padding = 3});
  for (std::size_t i = 0; i < config.strides.size(); ++i) {
    const std::size_t s = config.strides[i];
    const std::string blk = "enc.block" + std::to_string(i);
    for (std::size_t j = 0; j < config.dilations.size(); ++j)
      x = detail::residual_unit(x, weights, blk + ".res" + std::to_string(j), config.dilations[j]);
    x = snake(x, weights.vec(blk + ".snake"));
    x = conv1d(x, bind_conv(weights, blk + ".down"), {.stride = s, .padding = (s + 1) / 2});
  }
  x = snake(x, weights.vec("enc.snake_out"));
  x = conv1d(x, bind_conv(weights, "enc.conv_out"), {.padding = 1});
  detail::check_finite(x, "encoder");
  return x;
}

/// Waveform -> F x ceil(L / hop) latent. Input is right-padded with zeros to a multiple of the hop.
inline FeatureMap encode(const AudioBuffer& audio, const ModelConfig& config, const WeightStore& weights) {
  FeatureMap x = encode_conv(audio, config, weights);
  return detail::transformer_stack(std::move(x), weights, "enc.tf", config.n_enc_transformer, config.n_heads);
}

/// F x T latent -> T * hop samples.
inline AudioBuffer decode(const FeatureMap& features, const ModelConfig& config, const WeightStore& weights) {
  if (features.rows() != config.latent_dim)
    throw ContractViolation("decode: feature dim " + std::to_string(features.rows()) + " != latent_dim " +
                            std::to_string(config.latent_dim));
  if (features.cols() == 0) throw InvalidArgument("decode: empty feature map");

  Matrix x = detail::transformer_stack(features, weights, "dec.tf", config.n_dec_transformer, config.n_heads);
  x = conv1d(x, bind_conv(weights, "dec.conv_in"), {.padding = 3});
  for (std::size_t i = 0; i < config.strides.size(); ++i) {
    const std::size_t s = config.strides[config.strides.size() - 1 - i];
    const std::string blk = "dec.block" + std::to_string(i);
    x = snake(x, weights.vec(blk + ".snake"));
    const std::size_t pad = (s + 1) / 2;
    x = conv1d(x, bind_conv(weights, blk + ".up", true),
               {.stride = s, .padding = pad, .output_padding = 2 * pad - s, .transposed = true});
    for (std::size_t j = 0; j < config.dilations.size(); ++j)
      x = detail::residual_unit(x, weights, blk + ".res" + std::to_string(j), config.dilations[j]);
  }
  x = snake(x, weights.vec("dec.snake_out"));
  x = conv1d(x, bind_conv(weights, "dec.conv_out"), {.padding = 3});
  detail::check_finite(x, "decoder");

  AudioBuffer out;
  out.sample_rate = config.sample_rate;
  out.samples.resize(x.cols());
  for (std::size_t t = 0; t < x.cols(); ++t) out.samples[t] = std::tanh(x(0, t));
  return out;
}

/// decode() truncated back to the pre-padding length.
inline AudioBuffer decode(const FeatureMap& features, const ModelConfig& config, const WeightStore& weights,
                          std::size_t original_length) {
  AudioBuffer out = decode(features, config, weights);
  if (original_length > out.size())
    throw ContractViolation("decode: original length exceeds decoded length");
  out.samples.resize(original_length);
  return out;
}

}  // namespace sunac
