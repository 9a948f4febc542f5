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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sunac/config.hpp"
#include "sunac/error.hpp"
#include "sunac/io.hpp"
#include "sunac/numerics.hpp"
#include "sunac/rng.hpp"
#include "sunac/tensor.hpp"

namespace sunac {

/// How a tensor is filled by init_weights.
enum class InitKind {
  FanIn,     // uniform in [-a, a], a = sqrt(1 / fan_in)
  Ones,      // Snake alpha, norm gains
  Zeros,     // norm biases
  Codebook,  // FanIn over code_dim, row 0 forced to the zero vector
};

struct TensorSpec {
  std::string name;
  std::vector<std::uint32_t> dims;
  InitKind init = InitKind::FanIn;
  std::uint32_t fan_in = 1;
};

namespace layout {

inline void conv(std::vector<TensorSpec>& out, const std::string& prefix, std::uint32_t c_out, std::uint32_t c_in,
                 std::uint32_t k) {
  out.push_back({prefix + ".w", {c_out, c_in, k}, InitKind::FanIn, c_in * k});
  out.push_back({prefix + ".b", {c_out}, InitKind::FanIn, c_in * k});
}

/// Transposed kernels are stored [c_in, c_out, k].
inline void conv_transposed(std::vector<TensorSpec>& out, const std::string& prefix, std::uint32_t c_in,
                            std::uint32_t c_out, std::uint32_t k) {
  out.push_back({prefix + ".w", {c_in, c_out, k}, InitKind::FanIn, c_in * k});
  out.push_back({prefix + ".b", {c_out}, InitKind::FanIn, c_in * k});
}

inline void snake(std::vector<TensorSpec>& out, const std::string& name, std::uint32_t c) {
  out.push_back({name, {c}, InitKind::Ones, 1});
}

inline void linear(std::vector<TensorSpec>& out, const std::string& prefix, std::uint32_t d_out, std::uint32_t d_in) {
  out.push_back({prefix + ".w", {d_out, d_in}, InitKind::FanIn, d_in});
  out.push_back({prefix + ".b", {d_out}, InitKind::FanIn, d_in});
}

inline void residual_unit(std::vector<TensorSpec>& out, const std::string& prefix, std::uint32_t dim) {
  snake(out, prefix + ".snake1", dim);
  conv(out, prefix + ".conv1", dim, dim, 7);
  snake(out, prefix + ".snake2", dim);
  conv(out, prefix + ".conv2", dim, dim, 1);
}

inline void transformer(std::vector<TensorSpec>& out, const std::string& prefix, std::uint32_t d, std::uint32_t ffn) {
  out.push_back({prefix + ".ln1.g", {d}, InitKind::Ones, 1});
  out.push_back({prefix + ".ln1.b", {d}, InitKind::Zeros, 1});
  linear(out, prefix + ".q", d, d);
  linear(out, prefix + ".k", d, d);
  linear(out, prefix + ".v", d, d);
  linear(out, prefix + ".o", d, d);
  out.push_back({prefix + ".ln2.g", {d}, InitKind::Ones, 1});
  out.push_back({prefix + ".ln2.b", {d}, InitKind::Zeros, 1});
  linear(out, prefix + ".ff1", ffn, d);
  linear(out, prefix + ".ff2", d, ffn);
}

}  // namespace layout

/// Every tensor the forward graph of `config` reads, in creation order.
inline std::vector<TensorSpec> weight_layout(const ModelConfig& config) {
  config.validate();
  std::vector<TensorSpec> out;
  const std::uint32_t F = config.latent_dim;
  const std::uint32_t ffn = config.transformer_ffn;

  // encoder convolutions
  std::uint32_t d = config.enc_base_dim;
  layout::conv(out, "enc.conv_in", d, 1, 7);
  for (std::size_t i = 0; i < config.strides.size(); ++i) {
    const std::uint32_t s = config.strides[i];
    const std::uint32_t half = d;
    d *= 2;
    const std::string blk = "enc.block" + std::to_string(i);
    for (std::size_t j = 0; j < config.dilations.size(); ++j) layout::residual_unit(out, blk + ".res" + std::to_string(j), half);
    layout::snake(out, blk + ".snake", half);
    layout::conv(out, blk + ".down", d, half, 2 * s);
  }
  layout::snake(out, "enc.snake_out", d);
  layout::conv(out, "enc.conv_out", F, d, 3);
  for (std::uint32_t k = 0; k < config.n_enc_transformer; ++k) layout::transformer(out, "enc.tf" + std::to_string(k), F, ffn);

  if (config.has_extractor()) {
    out.push_back({"prompt.bank", {4, F}, InitKind::FanIn, 1});
    for (std::uint32_t k = 0; k < config.n_cross_prompt_layers; ++k)
      layout::transformer(out, "xp.tf" + std::to_string(k), F, ffn);
    layout::linear(out, "film.f", F, F);
    layout::linear(out, "film.h", F, F);
    for (std::uint32_t k = 0; k < config.n_extraction_layers; ++k)
      layout::transformer(out, "ext.tf" + std::to_string(k), F, ffn);
  }

  for (std::uint32_t q = 0; q < config.n_quantizers(); ++q) {
    const std::string p = "rvq" + std::to_string(q);
    layout::linear(out, p + ".down", config.code_dim, F);
    layout::linear(out, p + ".up", F, config.code_dim);
    for (std::uint32_t i = 0; i < config.n_codebooks; ++i)
      out.push_back({p + ".codebook" + std::to_string(i), {config.codebook_size, config.code_dim}, InitKind::Codebook,
                     config.code_dim});
  }

  for (std::uint32_t k = 0; k < config.n_dec_transformer; ++k) layout::transformer(out, "dec.tf" + std::to_string(k), F, ffn);
  std::uint32_t c = config.dec_base_dim;
  layout::conv(out, "dec.conv_in", c, F, 7);
  for (std::size_t i = 0; i < config.strides.size(); ++i) {
    const std::uint32_t s = config.strides[config.strides.size() - 1 - i];
    const std::string blk = "dec.block" + std::to_string(i);
    layout::snake(out, blk + ".snake", c);
    layout::conv_transposed(out, blk + ".up", c, c / 2, 2 * s);
    c /= 2;
    for (std::size_t j = 0; j < config.dilations.size(); ++j) layout::residual_unit(out, blk + ".res" + std::to_string(j), c);
  }
  layout::snake(out, "dec.snake_out", c);
  layout::conv(out, "dec.conv_out", 1, c, 7);
  return out;
}

/// Named tensors of one model instance plus the seed they were drawn from.
class WeightStore {
 public:
  WeightStore() = default;
  explicit WeightStore(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  void add(std::string name, Tensor t) {
    if (index_.contains(name)) throw ContractViolation("weight store: duplicate tensor " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(t));
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  const Tensor& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractViolation("weight store: missing tensor " + name);
    return entries_[it->second].second;
  }

  Tensor& at(const std::string& name) {
    return const_cast<Tensor&>(static_cast<const WeightStore&>(*this).at(name));
  }

  std::span<const float> vec(const std::string& name) const { return at(name).span(); }
  MatrixView mat(const std::string& name) const { return at(name).as_matrix(); }

  const std::vector<std::pair<std::string, Tensor>>& entries() const noexcept { return entries_; }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
  }

  /// FNV-1a over names, shapes and raw float bits.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
      }
    };
    for (const auto& [name, t] : entries_) {
      mix(name.data(), name.size());
      mix(t.dims.data(), t.dims.size() * sizeof(std::uint32_t));
      mix(t.data.data(), t.data.size() * sizeof(float));
    }
    return h;
  }

  /// Throws unless every tensor of the config's graph is present with the expected shape.
  void validate_against(const ModelConfig& config) const {
    for (const TensorSpec& spec : weight_layout(config)) {
      if (!contains(spec.name)) throw ContractViolation("weight store: missing tensor " + spec.name);
      if (at(spec.name).dims != spec.dims) throw ContractViolation("weight store: shape mismatch for " + spec.name);
    }
  }

  friend bool operator==(const WeightStore& a, const WeightStore& b) {
    return a.seed_ == b.seed_ && a.entries_ == b.entries_;
  }

 private:
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Deterministic random initialization; identical (config, seed) gives a bitwise-identical store.
inline WeightStore init_weights(const ModelConfig& config, std::uint64_t seed) {
  WeightStore store(seed);
  Rng rng(seed);
  for (const TensorSpec& spec : weight_layout(config)) {
    Tensor t(spec.dims);
    switch (spec.init) {
      case InitKind::Ones: std::fill(t.data.begin(), t.data.end(), 1.0f); break;
      case InitKind::Zeros: break;
      case InitKind::FanIn:
      case InitKind::Codebook: {
        const double a = std::sqrt(1.0 / static_cast<double>(spec.fan_in));
        for (float& v : t.data) v = static_cast<float>(rng.uniform(-a, a));
        if (spec.init == InitKind::Codebook) std::fill(t.data.begin(), t.data.begin() + spec.dims[1], 0.0f);
        break;
      }
    }
    store.add(spec.name, std::move(t));
  }
  return store;
}

/// Per-tensor element counts of the config's graph and their sum.
struct ParamCount {
  std::vector<std::pair<std::string, std::size_t>> per_tensor;
  std::size_t total = 0;

  /// Sum over tensors whose name starts with `prefix`.
  std::size_t under(const std::string& prefix) const {
    std::size_t n = 0;
    for (const auto& [name, c] : per_tensor)
      if (name.starts_with(prefix)) n += c;
    return n;
  }
};

inline ParamCount count_params(const ModelConfig& config) {
  ParamCount pc;
  for (const TensorSpec& spec : weight_layout(config)) {
    const std::size_t n = Tensor::element_count(spec.dims);
    pc.per_tensor.emplace_back(spec.name, n);
    pc.total += n;
  }
  return pc;
}

// SUWT: "SUWT", u16 version, u64 seed, then until EOF:
// u16 name length, name bytes, u8 rank, u32 dims[rank], f32 data (little endian).
inline constexpr std::uint16_t kWeightFileVersion = 1;

inline std::vector<std::uint8_t> serialize_weights(const WeightStore& store) {
  io::ByteWriter w;
  w.raw("SUWT");
  w.u16(kWeightFileVersion);
  w.u64(store.seed());
  for (const auto& [name, t] : store.entries()) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    w.u8(static_cast<std::uint8_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) w.u32(d);
    for (float v : t.data) w.f32(v);
  }
  return w.take();
}

inline WeightStore deserialize_weights(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != "SUWT") throw CorruptStream("weights: bad magic");
  if (const std::uint16_t v = r.u16(); v != kWeightFileVersion)
    throw CorruptStream("weights: unsupported version " + std::to_string(v));
  WeightStore store(r.u64());
  while (r.remaining() > 0) {
    const std::uint16_t len = r.u16();
    std::string name = r.raw(len);
    const std::uint8_t rank = r.u8();
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = r.u32();
    Tensor t(std::move(dims));
    if (t.size() * 4 > r.remaining()) throw CorruptStream("weights: truncated tensor " + name);
    for (float& v : t.data) v = r.f32();
    store.add(std::move(name), std::move(t));
  }
  return store;
}

inline void save_weights(const std::filesystem::path& path, const WeightStore& store) {
  io::write_file_atomic(path, serialize_weights(store));
}

inline WeightStore load_weights(const std::filesystem::path& path) { return deserialize_weights(io::read_file(path)); }

/// Binds the views of transformer layer `prefix` (e.g. "dec.tf0").
inline TransformerLayerWeights bind_transformer(const WeightStore& s, const std::string& prefix, std::uint32_t n_heads,
                                                int layer_index) {
  TransformerLayerWeights w;
  w.hidden_dim = s.at(prefix + ".ln1.g").size();
  w.n_heads = n_heads;
  w.ffn_dim = s.at(prefix + ".ff1.b").size();
  w.layer_index = layer_index;
  w.ln1_gain = s.vec(prefix + ".ln1.g");
  w.ln1_bias = s.vec(prefix + ".ln1.b");
  w.wq = s.mat(prefix + ".q.w");
  w.bq = s.vec(prefix + ".q.b");
  w.wk = s.mat(prefix + ".k.w");
  w.bk = s.vec(prefix + ".k.b");
  w.wv = s.mat(prefix + ".v.w");
  w.bv = s.vec(prefix + ".v.b");
  w.wo = s.mat(prefix + ".o.w");
  w.bo = s.vec(prefix + ".o.b");
  w.ln2_gain = s.vec(prefix + ".ln2.g");
  w.ln2_bias = s.vec(prefix + ".ln2.b");
  w.w1 = s.mat(prefix + ".ff1.w");
  w.b1 = s.vec(prefix + ".ff1.b");
  w.w2 = s.mat(prefix + ".ff2.w");
  w.b2 = s.vec(prefix + ".ff2.b");
  return w;
}

inline ConvWeights bind_conv(const WeightStore& s, const std::string& prefix, bool transposed = false) {
  const Tensor& w = s.at(prefix + ".w");
  ConvWeights c;
  c.out_channels = transposed ? w.dims[1] : w.dims[0];
  c.in_channels = transposed ? w.dims[0] : w.dims[1];
  c.kernel = w.dims[2];
  c.weight = w.span();
  c.bias = s.vec(prefix + ".b");
  return c;
}

}  // namespace sunac
