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

// Prompt-conditioned feature extraction in the latent space.
//
// Prompt vectors are prepended to the encoded features along time, a
// cross-prompt Transformer mixes them, and the first N tokens are split back
// off as transformed prompts P'. Each P'_n then modulates the transformed
// features X' through a residual FiLM block, and a shared Transformer stack
// refines the result into one feature map per prompt.

#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sunac/codec.hpp"
#include "sunac/config.hpp"
#include "sunac/error.hpp"
#include "sunac/numerics.hpp"
#include "sunac/tensor.hpp"
#include "sunac/weights.hpp"

namespace sunac {

enum class PromptType : std::uint8_t { Speech = 0, Music = 1, Sfx = 2, Mix = 3 };

inline constexpr std::size_t kPromptTypeCount = 4;

inline std::string to_string(PromptType p) {
  switch (p) {
    case PromptType::Speech: return "speech";
    case PromptType::Music: return "music";
    case PromptType::Sfx: return "sfx";
    case PromptType::Mix: return "mix";
  }
  return "?";
}

inline PromptType parse_prompt(const std::string& token) {
  const std::string t = lowercase(token);
  if (t == "speech") return PromptType::Speech;
  if (t == "music") return PromptType::Music;
  if (t == "sfx") return PromptType::Sfx;
  if (t == "mix") return PromptType::Mix;
  throw InvalidArgument("unknown prompt '" + token + "' (expected speech, music, sfx or mix)");
}

inline PromptType prompt_from_tag(std::uint8_t tag) {
  if (tag >= kPromptTypeCount) throw CorruptStream("corrupt stream: prompt tag " + std::to_string(tag));
  return static_cast<PromptType>(tag);
}

/// Ordered prompt list; duplicates are allowed.
using PromptSpec = std::vector<PromptType>;

/// Parses "speech,Music,sfx" (case-insensitive, surrounding spaces ignored).
inline PromptSpec parse_prompt_list(const std::string& list) {
  PromptSpec out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw InvalidArgument("empty prompt in list '" + list + "'");
    out.push_back(parse_prompt(item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw InvalidArgument("prompt list is empty");
  return out;
}

inline std::string format_prompt_list(const PromptSpec& prompts) {
  std::string s;
  for (std::size_t i = 0; i < prompts.size(); ++i) s += (i ? "," : "") + to_string(prompts[i]);
  return s;
}

/// One learnable F-dim vector per PromptType (rows of a [4 x F] matrix).
struct PromptBank {
  MatrixView vectors;

  std::size_t dim() const noexcept { return vectors.cols; }
  std::span<const float> operator[](PromptType p) const { return vectors.row(static_cast<std::size_t>(p)); }
};

/// f(p) = Wf p + bf and h(p) = Wh p + bh, shared across prompts.
struct FilmWeights {
  MatrixView f_w;
  std::span<const float> f_b;
  MatrixView h_w;
  std::span<const float> h_b;
};

struct ExtractorWeights {
  PromptBank bank;
  std::vector<TransformerLayerWeights> cross_prompt;
  FilmWeights film;
  std::vector<TransformerLayerWeights> extraction;
};

inline ExtractorWeights bind_extractor(const WeightStore& store, const ModelConfig& config) {
  if (!config.has_extractor()) throw ConfigError("config " + to_string(config.arch_family) + " has no extractor");
  ExtractorWeights w;
  w.bank.vectors = store.mat("prompt.bank");
  for (std::uint32_t k = 0; k < config.n_cross_prompt_layers; ++k)
    w.cross_prompt.push_back(bind_transformer(store, "xp.tf" + std::to_string(k), config.n_heads, static_cast<int>(k)));
  w.film = {store.mat("film.f.w"), store.vec("film.f.b"), store.mat("film.h.w"), store.vec("film.h.b")};
  for (std::uint32_t k = 0; k < config.n_extraction_layers; ++k)
    w.extraction.push_back(bind_transformer(store, "ext.tf" + std::to_string(k), config.n_heads, static_cast<int>(k)));
  return w;
}

struct CrossPromptOutput {
  FeatureMap x_prime;  // F x T
  Matrix p_prime;      // F x N
};

/// Runs [P_1..P_N, X_1..X_T] through the cross-prompt layers and splits the sequence back.
inline CrossPromptOutput cross_prompt(const FeatureMap& features, const PromptSpec& prompts, const ExtractorWeights& w) {
  if (prompts.empty()) throw InvalidArgument("cross_prompt: at least one prompt is required");
  const std::size_t F = features.rows();
  if (F != w.bank.dim())
    throw ContractViolation("cross_prompt: feature dim " + std::to_string(F) + " != prompt dim " +
                            std::to_string(w.bank.dim()));
  const std::size_t N = prompts.size();
  const std::size_t T = features.cols();
  Matrix seq(F, N + T);
  for (std::size_t n = 0; n < N; ++n) seq.set_column(n, w.bank[prompts[n]]);
  for (std::size_t r = 0; r < F; ++r)
    for (std::size_t t = 0; t < T; ++t) seq(r, N + t) = features(r, t);

  for (const TransformerLayerWeights& layer : w.cross_prompt) seq = transformer_block(seq, layer, true);

  CrossPromptOutput out{FeatureMap(F, T), Matrix(F, N)};
  for (std::size_t r = 0; r < F; ++r) {
    for (std::size_t n = 0; n < N; ++n) out.p_prime(r, n) = seq(r, n);
    for (std::size_t t = 0; t < T; ++t) out.x_prime(r, t) = seq(r, N + t);
  }
  return out;
}

/// X' + f(P'_n) (.) X' + h(P'_n), with the F-vectors broadcast over time.
inline FeatureMap film(const FeatureMap& x_prime, std::span<const float> p_prime_n, const FilmWeights& w) {
  const std::size_t F = x_prime.rows();
  if (p_prime_n.size() != F || w.f_w.rows != F || w.f_w.cols != F || w.h_w.rows != F || w.h_w.cols != F)
    throw ContractViolation("film: dimension mismatch");
  const std::vector<float> scale = linear(p_prime_n, w.f_w, w.f_b);
  const std::vector<float> shift = linear(p_prime_n, w.h_w, w.h_b);
  FeatureMap out(F, x_prime.cols());
  for (std::size_t r = 0; r < F; ++r) {
    const double g = scale[r];
    const double b = shift[r];
    for (std::size_t t = 0; t < x_prime.cols(); ++t) {
      const double x = x_prime(r, t);
      out(r, t) = static_cast<float>(x + (g * x + b));
    }
  }
  return out;
}

/// Records which parameter objects were used for each prompt.
struct ExtractionTrace {
  Matrix p_prime;
  std::vector<const FilmWeights*> film_used;
  std::vector<const std::vector<TransformerLayerWeights>*> layers_used;
};

/// Extraction stack applied to one conditioned map.
inline FeatureMap extract_one(const FeatureMap& x_prime, std::span<const float> p_prime_n, const ExtractorWeights& w) {
  FeatureMap y = film(x_prime, p_prime_n, w.film);
  for (const TransformerLayerWeights& layer : w.extraction) y = transformer_block(y, layer, true);
  return y;
}

/// One F x T feature map per prompt, in prompt order.
inline std::vector<FeatureMap> extract(const FeatureMap& features, const PromptSpec& prompts, const ExtractorWeights& w,
                                       ExtractionTrace* trace = nullptr) {
  const CrossPromptOutput cp = cross_prompt(features, prompts, w);
  std::vector<FeatureMap> out;
  out.reserve(prompts.size());
  for (std::size_t n = 0; n < prompts.size(); ++n) {
    const std::vector<float> p = cp.p_prime.column(n);
    out.push_back(extract_one(cp.x_prime, p, w));
    if (trace != nullptr) {
      trace->film_used.push_back(&w.film);
      trace->layers_used.push_back(&w.extraction);
    }
  }
  if (trace != nullptr) trace->p_prime = cp.p_prime;
  return out;
}

}  // namespace sunac
