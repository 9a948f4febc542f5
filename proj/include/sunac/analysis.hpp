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

// Symbolic parameter and multiply-accumulate accounting.
//
// An ArchSpec is a flat list of layers along the signal path. Each layer
// carries its channel dims, its time resolution (samples per step, relative
// to the input sample rate) and a sharing tag: `Const` layers run once per
// input mixture, `PerSource` layers run once per requested source. The total
// cost for N sources is const + per_source * N.
//
// Conventions: conv = C_out*C_in*K*L_out; transposed conv = C_in*C_out*K*L_in;
// linear = D_out*D_in*T; attention = 4*T*d^2 (q, k, v, o) + 2*T^2*d (scores
// and context); feed-forward = 2*T*d*ffn. Norms, activations and bias adds
// are not counted.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sunac/config.hpp"
#include "sunac/error.hpp"

namespace sunac {

enum class LayerKind { Conv1d, TransposedConv1d, Linear, Attention, FeedForward, Film, RvqScan, Snake, LayerNorm, Embedding };
enum class Sharing { Const, PerSource };

inline std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::TransposedConv1d: return "transposed_conv1d";
    case LayerKind::Linear: return "linear";
    case LayerKind::Attention: return "attention";
    case LayerKind::FeedForward: return "feed_forward";
    case LayerKind::Film: return "film";
    case LayerKind::RvqScan: return "rvq_scan";
    case LayerKind::Snake: return "snake";
    case LayerKind::LayerNorm: return "layer_norm";
    case LayerKind::Embedding: return "embedding";
  }
  return "?";
}

inline std::string to_string(Sharing s) { return s == Sharing::Const ? "const" : "per_source"; }

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Linear;
  Sharing sharing = Sharing::PerSource;
  std::uint64_t in_dim = 0;
  std::uint64_t out_dim = 0;
  std::uint64_t kernel = 1;
  std::uint64_t stride = 1;
  std::uint64_t rate_in = 1;   // input samples per step of this layer's input
  std::uint64_t rate_out = 1;  // input samples per step of this layer's output
  std::uint64_t heads = 0;     // attention
  std::uint64_t ffn = 0;       // feed_forward
  std::uint64_t entries = 0;   // rvq_scan: entries per codebook; embedding: rows
  std::uint64_t codebooks = 0; // rvq_scan
  std::uint64_t code_dim = 0;  // rvq_scan
  std::uint64_t instances = 1; // parameter copies (e.g. per-domain quantizers); MACs are per use
  bool on_main_path = true;    // participates in the dim / rate chain check
};

struct ArchSpec {
  std::string name;
  std::uint32_t hop = 320;  // samples per latent frame
  std::vector<LayerSpec> layers;
};

namespace detail {

/// Appends layers while tracking the running (dim, rate) along the signal path.
class SpecBuilder {
 public:
  SpecBuilder(ArchSpec& spec, std::uint64_t dim, std::uint64_t rate) : spec_(spec), dim_(dim), rate_(rate) {}

  Sharing sharing = Sharing::PerSource;

  std::uint64_t dim() const { return dim_; }

  void conv(const std::string& name, std::uint64_t out, std::uint64_t k, std::uint64_t stride = 1) {
    push({.name = name, .kind = LayerKind::Conv1d, .in_dim = dim_, .out_dim = out, .kernel = k, .stride = stride,
          .rate_in = rate_, .rate_out = rate_ * stride});
  }
  void conv_transposed(const std::string& name, std::uint64_t out, std::uint64_t k, std::uint64_t stride) {
    push({.name = name, .kind = LayerKind::TransposedConv1d, .in_dim = dim_, .out_dim = out, .kernel = k,
          .stride = stride, .rate_in = rate_, .rate_out = rate_ / stride});
  }
  void snake(const std::string& name) {
    push({.name = name, .kind = LayerKind::Snake, .in_dim = dim_, .out_dim = dim_, .rate_in = rate_, .rate_out = rate_});
  }
  void residual_unit(const std::string& name) {
    snake(name + ".snake1");
    conv(name + ".conv1", dim_, 7);
    snake(name + ".snake2");
    conv(name + ".conv2", dim_, 1);
  }
  void transformer(const std::string& name, std::uint64_t heads, std::uint64_t ffn) {
    push({.name = name + ".ln1", .kind = LayerKind::LayerNorm, .in_dim = dim_, .out_dim = dim_, .rate_in = rate_, .rate_out = rate_});
    push({.name = name + ".attn", .kind = LayerKind::Attention, .in_dim = dim_, .out_dim = dim_, .rate_in = rate_,
          .rate_out = rate_, .heads = heads});
    push({.name = name + ".ln2", .kind = LayerKind::LayerNorm, .in_dim = dim_, .out_dim = dim_, .rate_in = rate_, .rate_out = rate_});
    push({.name = name + ".ffn", .kind = LayerKind::FeedForward, .in_dim = dim_, .out_dim = dim_, .rate_in = rate_,
          .rate_out = rate_, .ffn = ffn});
  }
  void film(const std::string& name) {
    push({.name = name, .kind = LayerKind::Film, .in_dim = dim_, .out_dim = dim_, .rate_in = rate_, .rate_out = rate_});
  }
  void rvq(const std::string& name, std::uint64_t codebooks, std::uint64_t entries, std::uint64_t code_dim,
           std::uint64_t instances) {
    push({.name = name, .kind = LayerKind::RvqScan, .in_dim = dim_, .out_dim = dim_, .rate_in = rate_,
          .rate_out = rate_, .entries = entries, .codebooks = codebooks, .code_dim = code_dim, .instances = instances});
  }
  void embedding(const std::string& name, std::uint64_t rows, std::uint64_t dim) {
    push({.name = name, .kind = LayerKind::Embedding, .in_dim = 0, .out_dim = dim, .rate_in = rate_, .rate_out = rate_,
          .entries = rows, .on_main_path = false});
  }

 private:
  void push(LayerSpec l) {
    l.sharing = sharing;
    if (l.on_main_path) {
      dim_ = l.out_dim;
      rate_ = l.rate_out;
    }
    spec_.layers.push_back(std::move(l));
  }

  ArchSpec& spec_;
  std::uint64_t dim_;
  std::uint64_t rate_;
};

}  // namespace detail

/// Layer list of a codec configuration. With `include_decoder = false` the
/// spec stops after quantization (encoding-side cost only).
inline ArchSpec arch_spec_from_config(const ModelConfig& c, const std::string& name, bool include_decoder = true) {
  c.validate();
  ArchSpec spec{name, c.hop_length(), {}};
  detail::SpecBuilder b(spec, 1, 1);
  const bool separated = c.has_extractor() || c.n_quantizers() > 1;
  b.sharing = separated ? Sharing::Const : Sharing::PerSource;

  b.conv("enc.conv_in", c.enc_base_dim, 7);
  for (std::size_t i = 0; i < c.strides.size(); ++i) {
    const std::string blk = "enc.block" + std::to_string(i);
    for (std::size_t j = 0; j < c.dilations.size(); ++j) b.residual_unit(blk + ".res" + std::to_string(j));
    b.snake(blk + ".snake");
    b.conv(blk + ".down", 2 * b.dim(), 2 * c.strides[i], c.strides[i]);
  }
  b.snake("enc.snake_out");
  b.conv("enc.conv_out", c.latent_dim, 3);
  for (std::uint32_t k = 0; k < c.n_enc_transformer; ++k)
    b.transformer("enc.tf" + std::to_string(k), c.n_heads, c.transformer_ffn);

  if (c.has_extractor()) {
    b.embedding("prompt.bank", 4, c.latent_dim);
    for (std::uint32_t k = 0; k < c.n_cross_prompt_layers; ++k)
      b.transformer("xp.tf" + std::to_string(k), c.n_heads, c.transformer_ffn);
    b.sharing = Sharing::PerSource;
    b.film("film");
    for (std::uint32_t k = 0; k < c.n_extraction_layers; ++k)
      b.transformer("ext.tf" + std::to_string(k), c.n_heads, c.transformer_ffn);
  }

  b.sharing = Sharing::PerSource;
  b.rvq("rvq", c.n_codebooks, c.codebook_size, c.code_dim, c.n_quantizers());
  if (!include_decoder) return spec;

  for (std::uint32_t k = 0; k < c.n_dec_transformer; ++k)
    b.transformer("dec.tf" + std::to_string(k), c.n_heads, c.transformer_ffn);
  b.conv("dec.conv_in", c.dec_base_dim, 7);
  for (std::size_t i = 0; i < c.strides.size(); ++i) {
    const std::uint64_t s = c.strides[c.strides.size() - 1 - i];
    const std::string blk = "dec.block" + std::to_string(i);
    b.snake(blk + ".snake");
    b.conv_transposed(blk + ".up", b.dim() / 2, 2 * s, s);
    for (std::size_t j = 0; j < c.dilations.size(); ++j) b.residual_unit(blk + ".res" + std::to_string(j));
  }
  b.snake("dec.snake_out");
  b.conv("dec.conv_out", 1, 7);
  return spec;
}

/// Specs in comparison-report row order, followed by the encoding-only SUNAC path.
inline std::vector<ArchSpec> builtin_specs() {
  return {arch_spec_from_config(preset("dac"), "DAC"),
          arch_spec_from_config(preset("dact"), "DACT"),
          arch_spec_from_config(preset("sdcodec"), "SDCodec"),
          arch_spec_from_config(preset("sdcodect"), "SDCodecT"),
          arch_spec_from_config(preset("sunac"), "SUNAC"),
          arch_spec_from_config(preset("sunac"), "SUNAC-encoder-only", false)};
}

inline const ArchSpec& find_spec(const std::vector<ArchSpec>& specs, const std::string& name) {
  for (const ArchSpec& s : specs)
    if (lowercase(s.name) == lowercase(name)) return s;
  throw InvalidArgument("unknown architecture '" + name + "'");
}

enum class Scaling { None, Linear, Quadratic };

inline std::string to_string(Scaling s) {
  switch (s) {
    case Scaling::None: return "none";
    case Scaling::Linear: return "linear";
    case Scaling::Quadratic: return "quadratic";
  }
  return "?";
}

struct LayerCost {
  std::string name;
  LayerKind kind = LayerKind::Linear;
  Sharing sharing = Sharing::PerSource;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  Scaling scaling = Scaling::None;  // how MACs grow with duration
};

struct MacReport {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t const_macs = 0;
  std::uint64_t per_source_macs = 0;
  std::vector<LayerCost> layers;

  std::uint64_t total(std::uint64_t n_sources) const { return const_macs + per_source_macs * n_sources; }
};

inline std::uint64_t layer_params(const LayerSpec& l) {
  std::uint64_t p = 0;
  switch (l.kind) {
    case LayerKind::Conv1d:
    case LayerKind::TransposedConv1d: p = l.in_dim * l.out_dim * l.kernel + l.out_dim; break;
    case LayerKind::Linear: p = l.in_dim * l.out_dim + l.out_dim; break;
    case LayerKind::Attention: p = 4 * (l.in_dim * l.in_dim + l.in_dim); break;
    case LayerKind::FeedForward: p = 2 * l.in_dim * l.ffn + l.ffn + l.in_dim; break;
    case LayerKind::Film: p = 2 * (l.in_dim * l.in_dim + l.in_dim); break;
    case LayerKind::RvqScan:
      p = (l.code_dim * l.in_dim + l.code_dim) + (l.in_dim * l.code_dim + l.in_dim) + l.codebooks * l.entries * l.code_dim;
      break;
    case LayerKind::Snake: p = l.in_dim; break;
    case LayerKind::LayerNorm: p = 2 * l.in_dim; break;
    case LayerKind::Embedding: p = l.entries * l.out_dim; break;
  }
  return p * l.instances;
}

namespace detail {

inline void check_layer(const LayerSpec& l) {
  auto fail = [&](const std::string& why) { throw SpecError("layer " + l.name + ": " + why); };
  if (l.instances == 0) fail("instances must be >= 1");
  if (l.rate_in == 0 || l.rate_out == 0) fail("time resolution must be positive");
  switch (l.kind) {
    case LayerKind::Conv1d:
      if (l.kernel == 0 || l.stride == 0 || l.in_dim == 0 || l.out_dim == 0) fail("conv dims must be positive");
      if (l.rate_out != l.rate_in * l.stride) fail("conv output rate must be input rate x stride");
      break;
    case LayerKind::TransposedConv1d:
      if (l.kernel == 0 || l.stride == 0 || l.in_dim == 0 || l.out_dim == 0) fail("conv dims must be positive");
      if (l.rate_out * l.stride != l.rate_in) fail("transposed conv output rate must be input rate / stride");
      break;
    case LayerKind::Attention:
      if (l.in_dim != l.out_dim || l.heads == 0 || l.in_dim % l.heads != 0) fail("attention dim must split into heads");
      break;
    case LayerKind::FeedForward:
      if (l.in_dim != l.out_dim || l.ffn == 0) fail("feed-forward needs equal in/out dims and ffn > 0");
      break;
    case LayerKind::RvqScan:
      if (l.codebooks == 0 || l.entries < 2 || l.code_dim == 0) fail("rvq needs codebooks, >= 2 entries and code_dim");
      break;
    case LayerKind::Snake:
    case LayerKind::LayerNorm:
    case LayerKind::Film:
      if (l.in_dim != l.out_dim) fail("elementwise layer must preserve dims");
      break;
    default: break;
  }
  if (l.kind != LayerKind::Conv1d && l.kind != LayerKind::TransposedConv1d && l.rate_in != l.rate_out)
    fail("only convolutions change the time resolution");
}

}  // namespace detail

/// Parameters and MACs for `duration_s` of audio. The input is right-padded to
/// whole latent frames, as the encoder does.
inline MacReport count_macs(const ArchSpec& spec, double duration_s, std::uint32_t sample_rate = 16000) {
  if (!(duration_s > 0.0)) throw InvalidArgument("count_macs: duration must be > 0");
  if (spec.hop == 0) throw SpecError(spec.name + ": hop must be positive");
  const auto samples = static_cast<std::uint64_t>(std::llround(duration_s * sample_rate));
  const std::uint64_t padded = (samples + spec.hop - 1) / spec.hop * spec.hop;

  MacReport rep;
  rep.name = spec.name;
  std::uint64_t dim = 1;
  std::uint64_t rate = 1;
  for (const LayerSpec& l : spec.layers) {
    detail::check_layer(l);
    if (l.on_main_path) {
      if (l.in_dim != dim || l.rate_in != rate)
        throw SpecError(spec.name + ": layer " + l.name + " expects " + std::to_string(l.in_dim) + " channels at rate " +
                        std::to_string(l.rate_in) + ", previous layer gives " + std::to_string(dim) + " at rate " +
                        std::to_string(rate));
      dim = l.out_dim;
      rate = l.rate_out;
    }
    const std::uint64_t steps_in = padded / l.rate_in;
    const std::uint64_t steps_out = padded / l.rate_out;
    LayerCost cost{l.name, l.kind, l.sharing, layer_params(l), 0, Scaling::Linear};
    switch (l.kind) {
      case LayerKind::Conv1d: cost.macs = l.out_dim * l.in_dim * l.kernel * steps_out; break;
      case LayerKind::TransposedConv1d: cost.macs = l.in_dim * l.out_dim * l.kernel * steps_in; break;
      case LayerKind::Linear: cost.macs = l.out_dim * l.in_dim * steps_out; break;
      case LayerKind::Attention:
        cost.macs = 4 * steps_out * l.in_dim * l.in_dim + 2 * steps_out * steps_out * l.in_dim;
        cost.scaling = Scaling::Quadratic;
        break;
      case LayerKind::FeedForward: cost.macs = 2 * steps_out * l.in_dim * l.ffn; break;
      case LayerKind::Film: cost.macs = 2 * l.in_dim * l.in_dim + steps_out * l.in_dim; break;
      case LayerKind::RvqScan:
        cost.macs = steps_out * (2 * l.in_dim * l.code_dim + l.codebooks * l.entries * l.code_dim);
        break;
      case LayerKind::Snake:
      case LayerKind::LayerNorm:
      case LayerKind::Embedding: cost.scaling = Scaling::None; break;
    }
    rep.params += cost.params;
    (l.sharing == Sharing::Const ? rep.const_macs : rep.per_source_macs) += cost.macs;
    rep.layers.push_back(std::move(cost));
  }
  return rep;
}

struct ReportRow {
  MacReport report;
  std::uint64_t total_macs = 0;
};

/// One row per builtin spec with totals for `n_sources`.
inline std::vector<ReportRow> compare_report(double duration_s, std::uint64_t n_sources, std::uint32_t sample_rate = 16000) {
  if (n_sources < 1) throw InvalidArgument("compare_report: n_sources must be >= 1");
  std::vector<ReportRow> rows;
  for (const ArchSpec& spec : builtin_specs()) {
    MacReport r = count_macs(spec, duration_s, sample_rate);
    const std::uint64_t total = r.total(n_sources);
    rows.push_back({std::move(r), total});
  }
  return rows;
}

inline std::string format_report_text(const std::vector<ReportRow>& rows, double duration_s, std::uint64_t n_sources) {
  std::ostringstream os;
  os << "MACs per " << std::fixed << std::setprecision(2) << duration_s << " s, " << n_sources << " source(s)\n";
  os << std::left << std::setw(20) << "Method" << std::right << std::setw(12) << "Params (M)" << std::setw(12)
     << "Const [G]" << std::setw(16) << "Per source [G]" << std::setw(12) << "Total [G]" << '\n';
  for (const ReportRow& row : rows) {
    const MacReport& r = row.report;
    os << std::left << std::setw(20) << r.name << std::right << std::setw(12) << r.params / 1e6 << std::setw(12)
       << r.const_macs / 1e9 << std::setw(16) << r.per_source_macs / 1e9 << std::setw(12) << row.total_macs / 1e9
       << '\n';
  }
  return os.str();
}

inline nlohmann::json report_to_json(const std::vector<ReportRow>& rows, double duration_s, std::uint64_t n_sources,
                                     bool with_layers = false) {
  nlohmann::json out{{"duration_s", duration_s}, {"n_sources", n_sources}, {"rows", nlohmann::json::array()}};
  for (const ReportRow& row : rows) {
    const MacReport& r = row.report;
    nlohmann::json j{{"name", r.name},
                     {"params", r.params},
                     {"const_macs", r.const_macs},
                     {"per_source_macs", r.per_source_macs},
                     {"total_macs", row.total_macs}};
    if (with_layers) {
      j["layers"] = nlohmann::json::array();
      for (const LayerCost& l : r.layers)
        j["layers"].push_back({{"name", l.name},
                               {"kind", to_string(l.kind)},
                               {"sharing", to_string(l.sharing)},
                               {"params", l.params},
                               {"macs", l.macs},
                               {"scaling", to_string(l.scaling)}});
    }
    out["rows"].push_back(std::move(j));
  }
  return out;
}

}  // namespace sunac
