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

// Residual vector quantizer with a shared down/up projection.
//
// Each frame is projected F -> code_dim; layer i picks the codebook entry
// nearest (Euclidean, lowest index on ties) to the running residual and
// subtracts it. The quantized latent is the up-projection of the sum of the
// selected entries, so decoding codes is a telescoping sum.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sunac/codec.hpp"
#include "sunac/error.hpp"
#include "sunac/numerics.hpp"
#include "sunac/tensor.hpp"
#include "sunac/weights.hpp"

namespace sunac {

struct RvqWeights {
  MatrixView down;  // code_dim x F
  std::span<const float> down_bias;
  MatrixView up;  // F x code_dim
  std::span<const float> up_bias;
  std::vector<MatrixView> codebooks;  // each n_entries x code_dim

  std::size_t code_dim() const noexcept { return down.rows; }
  std::size_t feature_dim() const noexcept { return down.cols; }
  std::size_t n_codebooks() const noexcept { return codebooks.size(); }

  void validate() const {
    if (codebooks.empty()) throw ConfigError("rvq: no codebooks");
    if (up.rows != down.cols || up.cols != down.rows) throw ContractViolation("rvq: projection shapes inconsistent");
    for (const MatrixView& cb : codebooks) {
      if (cb.rows == 0) throw ConfigError("rvq: empty codebook");
      if (cb.cols != code_dim()) throw ContractViolation("rvq: codebook width != code_dim");
    }
  }
};

/// Binds quantizer stack `index` ("rvq0", "rvq1", ...).
inline RvqWeights bind_rvq(const WeightStore& store, const ModelConfig& config, std::uint32_t index = 0) {
  const std::string p = "rvq" + std::to_string(index);
  RvqWeights w{store.mat(p + ".down.w"), store.vec(p + ".down.b"), store.mat(p + ".up.w"), store.vec(p + ".up.b"), {}};
  for (std::uint32_t i = 0; i < config.n_codebooks; ++i) w.codebooks.push_back(store.mat(p + ".codebook" + std::to_string(i)));
  return w;
}

/// n_codebooks x T code indices, row-major.
struct CodeGrid {
  std::size_t n_codebooks = 0;
  std::size_t n_frames = 0;
  std::vector<std::uint32_t> codes;

  CodeGrid() = default;
  CodeGrid(std::size_t nq, std::size_t t) : n_codebooks(nq), n_frames(t), codes(nq * t, 0) {}

  std::uint32_t& operator()(std::size_t q, std::size_t t) { return codes[q * n_frames + t]; }
  std::uint32_t operator()(std::size_t q, std::size_t t) const { return codes[q * n_frames + t]; }

  friend bool operator==(const CodeGrid&, const CodeGrid&) = default;
};

struct QuantizeResult {
  FeatureMap quantized;
  CodeGrid codes;
  /// Frobenius norm over all frames of the projected residual after each layer.
  std::vector<double> residual_norms;
};

/// Index of the entry nearest to `target`; squared distances accumulate in double, ties keep the lowest index.
inline std::size_t nearest_entry(std::span<const double> target, const MatrixView& codebook) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < codebook.rows; ++j) {
    const std::span<const float> e = codebook.row(j);
    double d = 0.0;
    for (std::size_t c = 0; c < e.size(); ++c) {
      const double diff = target[c] - static_cast<double>(e[c]);
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

namespace detail {

inline void check_active(const RvqWeights& rvq, std::size_t n_active) {
  rvq.validate();
  if (n_active < 1 || n_active > rvq.n_codebooks())
    throw InvalidArgument("rvq: n_active must be in [1, " + std::to_string(rvq.n_codebooks()) + "]");
}

/// up * sum + bias for one frame.
inline void write_up_projection(const RvqWeights& rvq, const std::vector<double>& sum, FeatureMap& out, std::size_t t) {
  std::vector<float> s(sum.size());
  for (std::size_t c = 0; c < sum.size(); ++c) s[c] = static_cast<float>(sum[c]);
  const std::vector<float> col = linear(s, rvq.up, rvq.up_bias);
  out.set_column(t, col);
}

/// Visits every (layer, frame) selection: fn(layer, frame, residual_before, entry_index).
template <typename Fn>
void scan(const FeatureMap& features, const RvqWeights& rvq, std::size_t n_active, Fn&& fn) {
  check_active(rvq, n_active);
  if (features.rows() != rvq.feature_dim())
    throw ContractViolation("rvq: feature dim " + std::to_string(features.rows()) + " != " +
                            std::to_string(rvq.feature_dim()));
  const std::size_t cd = rvq.code_dim();
  std::vector<double> residual(cd);
  for (std::size_t t = 0; t < features.cols(); ++t) {
    const std::vector<float> z = linear(features.column(t), rvq.down, rvq.down_bias);
    for (std::size_t c = 0; c < cd; ++c) residual[c] = z[c];
    for (std::size_t i = 0; i < n_active; ++i) {
      const std::size_t j = nearest_entry(residual, rvq.codebooks[i]);
      fn(i, t, std::span<const double>(residual), j);
      const std::span<const float> e = rvq.codebooks[i].row(j);
      for (std::size_t c = 0; c < cd; ++c) residual[c] -= e[c];
    }
  }
}

}  // namespace detail

inline QuantizeResult quantize(const FeatureMap& features, const RvqWeights& rvq, std::size_t n_active) {
  const std::size_t cd = rvq.code_dim();
  QuantizeResult res{FeatureMap(features.rows(), features.cols()), CodeGrid(n_active, features.cols()),
                     std::vector<double>(n_active, 0.0)};
  std::vector<double> sum(cd, 0.0);
  std::size_t current_frame = std::numeric_limits<std::size_t>::max();
  auto flush = [&](std::size_t t) {
    detail::write_up_projection(rvq, sum, res.quantized, t);
    std::fill(sum.begin(), sum.end(), 0.0);
  };
  detail::scan(features, rvq, n_active, [&](std::size_t i, std::size_t t, std::span<const double> r, std::size_t j) {
    if (t != current_frame) {
      if (current_frame != std::numeric_limits<std::size_t>::max()) flush(current_frame);
      current_frame = t;
    }
    res.codes(i, t) = static_cast<std::uint32_t>(j);
    const std::span<const float> e = rvq.codebooks[i].row(j);
    double sq = 0.0;
    for (std::size_t c = 0; c < cd; ++c) {
      sum[c] += e[c];
      const double after = r[c] - e[c];
      sq += after * after;
    }
    res.residual_norms[i] += sq;
  });
  if (current_frame != std::numeric_limits<std::size_t>::max()) flush(current_frame);
  for (double& n : res.residual_norms) n = std::sqrt(n);
  return res;
}

/// Up-projection of the sum of indexed entries (rows beyond codes.n_codebooks are unused).
inline FeatureMap codes_to_features(const CodeGrid& codes, const RvqWeights& rvq) {
  rvq.validate();
  if (codes.n_codebooks < 1 || codes.n_codebooks > rvq.n_codebooks())
    throw ContractViolation("rvq: code grid has " + std::to_string(codes.n_codebooks) + " layers, quantizer has " +
                            std::to_string(rvq.n_codebooks()));
  const std::size_t cd = rvq.code_dim();
  FeatureMap out(rvq.feature_dim(), codes.n_frames);
  std::vector<double> sum(cd);
  for (std::size_t t = 0; t < codes.n_frames; ++t) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t i = 0; i < codes.n_codebooks; ++i) {
      const std::uint32_t j = codes(i, t);
      if (j >= rvq.codebooks[i].rows)
        throw CorruptStream("corrupt stream: code " + std::to_string(j) + " out of range for codebook " +
                            std::to_string(i));
      const std::span<const float> e = rvq.codebooks[i].row(j);
      for (std::size_t c = 0; c < cd; ++c) sum[c] += e[c];
    }
    detail::write_up_projection(rvq, sum, out, t);
  }
  return out;
}

struct CodebookLosses {
  double codebook = 0.0;
  double commitment = 0.0;
};

/// Forward values of the codebook and commitment terms: for each active layer
/// the mean (over frames and code dims) squared distance between the layer's
/// input residual and its selected entry, summed over layers. Without
/// gradients the two stop-gradient placements give the same number.
inline CodebookLosses codebook_losses(const FeatureMap& features, const RvqWeights& rvq, std::size_t n_active) {
  std::vector<double> per_layer(n_active, 0.0);
  detail::scan(features, rvq, n_active, [&](std::size_t i, std::size_t, std::span<const double> r, std::size_t j) {
    const std::span<const float> e = rvq.codebooks[i].row(j);
    for (std::size_t c = 0; c < e.size(); ++c) {
      const double d = r[c] - e[c];
      per_layer[i] += d * d;
    }
  });
  const double denom = static_cast<double>(features.cols() * rvq.code_dim());
  CodebookLosses l;
  for (double v : per_layer) l.codebook += denom > 0 ? v / denom : 0.0;
  l.commitment = l.codebook;
  return l;
}

}  // namespace sunac
