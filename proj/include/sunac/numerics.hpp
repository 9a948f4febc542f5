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

// Dense forward kernels shared by the codec, extractor and quantizer:
// strided / dilated / transposed 1-D convolution, linear maps, layer norm,
// Snake and GELU activations, rotary position encoding and a pre-norm
// Transformer layer. Everything operates on 32-bit reals with 64-bit
// accumulation of dot products.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sunac/error.hpp"
#include "sunac/tensor.hpp"

namespace sunac {

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t dilation = 1;
  std::size_t output_padding = 0;  // transposed only
  bool transposed = false;
};

/// Convolution kernel bank.
///
/// Forward layout is [out_channels, in_channels, kernel]; transposed layout is
/// [in_channels, out_channels, kernel]. `bias` is empty or has out_channels entries.
struct ConvWeights {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel = 0;
  std::span<const float> weight;
  std::span<const float> bias;
};

inline std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dOptions& opt) {
  if (opt.stride == 0) throw InvalidArgument("conv1d: stride must be >= 1");
  if (opt.dilation == 0) throw InvalidArgument("conv1d: dilation must be >= 1");
  if (length == 0) throw InvalidArgument("conv1d: empty input");
  const std::size_t span = opt.dilation * (kernel - 1) + 1;
  if (opt.transposed) {
    const std::size_t full = (length - 1) * opt.stride + span + opt.output_padding;
    if (full <= 2 * opt.padding) throw InvalidArgument("conv1d: padding consumes the whole output");
    return full - 2 * opt.padding;
  }
  const std::size_t padded = length + 2 * opt.padding;
  if (padded < span) throw InvalidArgument("conv1d: kernel longer than padded input");
  return (padded - span) / opt.stride + 1;
}

/// 1-D convolution of a [C_in x L] signal.
///
/// Forward: L_out = floor((L + 2p - d(K-1) - 1)/s) + 1.
/// Transposed: L_out = (L-1)s - 2p + d(K-1) + 1 + output_padding.
inline Matrix conv1d(const Matrix& input, const ConvWeights& w, const Conv1dOptions& opt = {}) {
  if (w.kernel == 0) throw InvalidArgument("conv1d: kernel size must be >= 1");
  if (input.rows() != w.in_channels) {
    throw ContractViolation("conv1d: input has " + std::to_string(input.rows()) + " channels, kernels expect " +
                            std::to_string(w.in_channels));
  }
  if (w.weight.size() != w.out_channels * w.in_channels * w.kernel)
    throw ContractViolation("conv1d: weight size does not match declared shape");
  if (!w.bias.empty() && w.bias.size() != w.out_channels)
    throw ContractViolation("conv1d: bias size does not match out_channels");

  const std::size_t length = input.cols();
  const std::size_t out_len = conv1d_output_length(length, w.kernel, opt);
  const auto pad = static_cast<std::ptrdiff_t>(opt.padding);
  Matrix out(w.out_channels, out_len);
  std::vector<double> acc(out_len);

  for (std::size_t co = 0; co < w.out_channels; ++co) {
    std::fill(acc.begin(), acc.end(), w.bias.empty() ? 0.0 : static_cast<double>(w.bias[co]));
    for (std::size_t ci = 0; ci < w.in_channels; ++ci) {
      const std::span<const float> x = input.row(ci);
      for (std::size_t k = 0; k < w.kernel; ++k) {
        const auto tap = static_cast<std::ptrdiff_t>(k * opt.dilation);
        if (!opt.transposed) {
          const double wk = w.weight[(co * w.in_channels + ci) * w.kernel + k];
          if (wk == 0.0) continue;
          // output t reads x[t*s + tap - pad]; restrict t to in-range reads
          const std::ptrdiff_t offset = tap - pad;
          const auto s = static_cast<std::ptrdiff_t>(opt.stride);
          std::ptrdiff_t t0 = offset >= 0 ? 0 : (-offset + s - 1) / s;
          std::ptrdiff_t t1 = static_cast<std::ptrdiff_t>(length) - offset;  // exclusive bound on t*s
          t1 = t1 <= 0 ? 0 : (t1 + s - 1) / s;
          t1 = std::min<std::ptrdiff_t>(t1, static_cast<std::ptrdiff_t>(out_len));
          if (opt.stride == 1) {
            const float* src = x.data() + offset;
            for (std::ptrdiff_t t = t0; t < t1; ++t) acc[t] += wk * static_cast<double>(src[t]);
          } else {
            for (std::ptrdiff_t t = t0; t < t1; ++t) acc[t] += wk * static_cast<double>(x[t * s + offset]);
          }
        } else {
          const double wk = w.weight[(ci * w.out_channels + co) * w.kernel + k];
          if (wk == 0.0) continue;
          // input t writes out[t*s + tap - pad]
          for (std::size_t t = 0; t < length; ++t) {
            const std::ptrdiff_t o = static_cast<std::ptrdiff_t>(t * opt.stride) + tap - pad;
            if (o < 0) continue;
            if (o >= static_cast<std::ptrdiff_t>(out_len)) break;
            acc[o] += wk * static_cast<double>(x[t]);
          }
        }
      }
    }
    std::span<float> dst = out.row(co);
    for (std::size_t t = 0; t < out_len; ++t) dst[t] = static_cast<float>(acc[t]);
  }
  return out;
}

/// y = W x + b applied to every column of a [D_in x T] matrix. W is [D_out x D_in].
inline Matrix linear(const Matrix& x, MatrixView w, std::span<const float> bias = {}) {
  if (x.rows() != w.cols)
    throw ContractViolation("linear: input dim " + std::to_string(x.rows()) + " != " + std::to_string(w.cols));
  if (!bias.empty() && bias.size() != w.rows) throw ContractViolation("linear: bias size mismatch");
  const Matrix xt = x.transposed();
  Matrix out(w.rows, x.cols());
  for (std::size_t o = 0; o < w.rows; ++o) {
    const std::span<const float> wr = w.row(o);
    const double b = bias.empty() ? 0.0 : bias[o];
    for (std::size_t t = 0; t < x.cols(); ++t) {
      const std::span<const float> xr = xt.row(t);
      double acc = b;
      for (std::size_t i = 0; i < wr.size(); ++i) acc += static_cast<double>(wr[i]) * xr[i];
      out(o, t) = static_cast<float>(acc);
    }
  }
  return out;
}

/// Matrix-vector product W v + b.
inline std::vector<float> linear(std::span<const float> v, MatrixView w, std::span<const float> bias = {}) {
  if (v.size() != w.cols) throw ContractViolation("linear: vector length mismatch");
  if (!bias.empty() && bias.size() != w.rows) throw ContractViolation("linear: bias size mismatch");
  std::vector<float> out(w.rows);
  for (std::size_t o = 0; o < w.rows; ++o) {
    double acc = bias.empty() ? 0.0 : bias[o];
    const std::span<const float> wr = w.row(o);
    for (std::size_t i = 0; i < v.size(); ++i) acc += static_cast<double>(wr[i]) * v[i];
    out[o] = static_cast<float>(acc);
  }
  return out;
}

/// Snake activation x + sin^2(alpha x) / alpha with one alpha per channel (row).
inline Matrix snake(const Matrix& x, std::span<const float> alpha) {
  if (alpha.size() != x.rows()) throw ContractViolation("snake: alpha size != channels");
  Matrix y(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.rows(); ++c) {
    const double a = alpha[c];
    const double inv = 1.0 / (a + 1e-9);
    const std::span<const float> src = x.row(c);
    std::span<float> dst = y.row(c);
    for (std::size_t t = 0; t < src.size(); ++t) {
      const double s = std::sin(a * src[t]);
      dst[t] = static_cast<float>(src[t] + inv * s * s);
    }
  }
  return y;
}

inline float gelu(float v) {
  return static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)));
}

/// Normalizes each column (token) over the feature axis.
inline Matrix layer_norm(const Matrix& x, std::span<const float> gain, std::span<const float> bias,
                         double eps = 1e-5) {
  if (gain.size() != x.rows() || bias.size() != x.rows()) throw ContractViolation("layer_norm: parameter size");
  Matrix y(x.rows(), x.cols());
  const auto n = static_cast<double>(x.rows());
  for (std::size_t t = 0; t < x.cols(); ++t) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, t);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) var += (x(r, t) - mean) * (x(r, t) - mean);
    const double inv = 1.0 / std::sqrt(var / n + eps);
    for (std::size_t r = 0; r < x.rows(); ++r)
      y(r, t) = static_cast<float>((x(r, t) - mean) * inv * gain[r] + bias[r]);
  }
  return y;
}

/// Rotates query/key features of each head in place (pairs i and i + d_head/2).
///
/// `x` is token-major [T x hidden]; token t sits at sequence position t.
inline void apply_rope(Matrix& x, std::size_t n_heads, double base = 10000.0) {
  const std::size_t hidden = x.cols();
  const std::size_t d_head = hidden / n_heads;
  const std::size_t half = d_head / 2;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    for (std::size_t i = 0; i < half; ++i) {
      const double freq = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(d_head));
      const double angle = static_cast<double>(t) * freq;
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      for (std::size_t h = 0; h < n_heads; ++h) {
        float& a = x(t, h * d_head + i);
        float& b = x(t, h * d_head + i + half);
        const double a0 = a;
        const double b0 = b;
        a = static_cast<float>(a0 * c - b0 * s);
        b = static_cast<float>(a0 * s + b0 * c);
      }
    }
  }
}

/// Views into one pre-norm Transformer layer's parameters.
///
/// Projection matrices are [out x in]; `w1` is [ffn x hidden], `w2` is [hidden x ffn].
struct TransformerLayerWeights {
  std::size_t hidden_dim = 0;
  std::size_t n_heads = 0;
  std::size_t ffn_dim = 0;
  int layer_index = 0;
  std::span<const float> ln1_gain, ln1_bias;
  MatrixView wq, wk, wv, wo;
  std::span<const float> bq, bk, bv, bo;
  std::span<const float> ln2_gain, ln2_bias;
  MatrixView w1, w2;
  std::span<const float> b1, b2;

  void validate() const {
    if (n_heads == 0 || hidden_dim % n_heads != 0)
      throw ContractViolation("transformer: hidden_dim must be divisible by n_heads");
    if ((hidden_dim / n_heads) % 2 != 0) throw ContractViolation("transformer: head dim must be even for rotary encoding");
    auto square = [&](const MatrixView& m, const char* name) {
      if (m.rows != hidden_dim || m.cols != hidden_dim)
        throw ContractViolation(std::string("transformer: ") + name + " must be hidden x hidden");
    };
    square(wq, "wq");
    square(wk, "wk");
    square(wv, "wv");
    square(wo, "wo");
    if (w1.rows != ffn_dim || w1.cols != hidden_dim || w2.rows != hidden_dim || w2.cols != ffn_dim)
      throw ContractViolation("transformer: feed-forward shapes inconsistent with hidden/ffn dims");
    if (ln1_gain.size() != hidden_dim || ln2_gain.size() != hidden_dim)
      throw ContractViolation("transformer: norm parameter size");
  }
};

/// Per-head attention probabilities captured during a forward pass ([T x T] each, rows are queries).
struct AttentionTrace {
  std::vector<Matrix> heads;
};

namespace detail {

/// Token-major linear: x [T x in], w [out x in] -> [T x out].
inline Matrix linear_tokens(const Matrix& x, MatrixView w, std::span<const float> bias) {
  Matrix out(x.rows(), w.rows);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const std::span<const float> xr = x.row(t);
    for (std::size_t o = 0; o < w.rows; ++o) {
      const std::span<const float> wr = w.row(o);
      double acc = bias.empty() ? 0.0 : bias[o];
      for (std::size_t i = 0; i < xr.size(); ++i) acc += static_cast<double>(wr[i]) * xr[i];
      out(t, o) = static_cast<float>(acc);
    }
  }
  return out;
}

inline Matrix layer_norm_tokens(const Matrix& x, std::span<const float> gain, std::span<const float> bias) {
  Matrix y(x.rows(), x.cols());
  const auto n = static_cast<double>(x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const std::span<const float> r = x.row(t);
    double mean = 0.0;
    for (float v : r) mean += v;
    mean /= n;
    double var = 0.0;
    for (float v : r) var += (v - mean) * (v - mean);
    const double inv = 1.0 / std::sqrt(var / n + 1e-5);
    for (std::size_t i = 0; i < r.size(); ++i) y(t, i) = static_cast<float>((r[i] - mean) * inv * gain[i] + bias[i]);
  }
  return y;
}

}  // namespace detail

/// One pre-norm Transformer layer applied along time to a [F x T] feature map:
///   h = x + Wo * MHA(LN1(x)),  out = h + W2 * GELU(W1 * LN2(h)).
/// Rotary position encoding (when enabled) rotates queries and keys only.
inline Matrix transformer_block(const Matrix& input, const TransformerLayerWeights& w, bool use_rope = true,
                                AttentionTrace* trace = nullptr) {
  w.validate();
  if (input.rows() != w.hidden_dim)
    throw ContractViolation("transformer: input has " + std::to_string(input.rows()) + " features, layer expects " +
                            std::to_string(w.hidden_dim));
  if (input.cols() == 0) throw InvalidArgument("transformer: sequence must have at least one token");

  const std::size_t seq = input.cols();
  const std::size_t d = w.hidden_dim;
  const std::size_t d_head = d / w.n_heads;
  Matrix x = input.transposed();  // [T x d]

  const Matrix normed = detail::layer_norm_tokens(x, w.ln1_gain, w.ln1_bias);
  Matrix q = detail::linear_tokens(normed, w.wq, w.bq);
  Matrix k = detail::linear_tokens(normed, w.wk, w.bk);
  const Matrix v = detail::linear_tokens(normed, w.wv, w.bv);
  if (use_rope) {
    apply_rope(q, w.n_heads);
    apply_rope(k, w.n_heads);
  }

  if (trace != nullptr) trace->heads.assign(w.n_heads, Matrix(seq, seq));
  Matrix context(seq, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_head));
  std::vector<double> scores(seq);
  for (std::size_t h = 0; h < w.n_heads; ++h) {
    const std::size_t off = h * d_head;
    for (std::size_t i = 0; i < seq; ++i) {
      double peak = -INFINITY;
      for (std::size_t j = 0; j < seq; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d_head; ++c) acc += static_cast<double>(q(i, off + c)) * k(j, off + c);
        scores[j] = acc * scale;
        peak = std::max(peak, scores[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < seq; ++j) {
        scores[j] = std::exp(scores[j] - peak);
        total += scores[j];
      }
      for (std::size_t j = 0; j < seq; ++j) scores[j] /= total;
      if (trace != nullptr)
        for (std::size_t j = 0; j < seq; ++j) trace->heads[h](i, j) = static_cast<float>(scores[j]);
      for (std::size_t c = 0; c < d_head; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < seq; ++j) acc += scores[j] * v(j, off + c);
        context(i, off + c) = static_cast<float>(acc);
      }
    }
  }

  const Matrix attn_out = detail::linear_tokens(context, w.wo, w.bo);
  for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += attn_out.values()[i];

  const Matrix normed2 = detail::layer_norm_tokens(x, w.ln2_gain, w.ln2_bias);
  Matrix hidden = detail::linear_tokens(normed2, w.w1, w.b1);
  for (float& val : hidden.values()) val = gelu(val);
  const Matrix ff = detail::linear_tokens(hidden, w.w2, w.b2);
  for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += ff.values()[i];

  if (!x.all_finite()) throw NumericError("transformer: non-finite activation", w.layer_index);
  return x.transposed();
}

}  // namespace sunac
