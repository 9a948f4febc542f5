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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sunac/error.hpp"

namespace sunac {

enum class ArchFamily { DAC, DACT, SDCodec, SDCodecT, SUNAC };

inline std::string to_string(ArchFamily f) {
  switch (f) {
    case ArchFamily::DAC: return "DAC";
    case ArchFamily::DACT: return "DACT";
    case ArchFamily::SDCodec: return "SDCodec";
    case ArchFamily::SDCodecT: return "SDCodecT";
    case ArchFamily::SUNAC: return "SUNAC";
  }
  return "?";
}

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline ArchFamily parse_arch_family(const std::string& name) {
  const std::string n = lowercase(name);
  if (n == "dac") return ArchFamily::DAC;
  if (n == "dact") return ArchFamily::DACT;
  if (n == "sdcodec") return ArchFamily::SDCodec;
  if (n == "sdcodect") return ArchFamily::SDCodecT;
  if (n == "sunac") return ArchFamily::SUNAC;
  throw ConfigError("unknown arch_family '" + name + "'");
}

/// Hyperparameters of one codec variant.
///
/// The convolutional encoder doubles its channel count at every stride stage
/// starting from enc_base_dim; the decoder halves from dec_base_dim. Residual
/// units use kernel 7 with the listed dilations.
struct ModelConfig {
  std::uint32_t sample_rate = 16000;
  std::vector<std::uint32_t> strides{2, 4, 5, 8};
  std::uint32_t enc_base_dim = 32;
  std::uint32_t dec_base_dim = 768;
  std::uint32_t latent_dim = 1024;
  std::uint32_t n_enc_transformer = 0;
  std::uint32_t n_dec_transformer = 3;
  std::uint32_t transformer_hidden = 1024;
  std::uint32_t transformer_ffn = 1536;
  std::uint32_t n_heads = 8;
  std::uint32_t n_cross_prompt_layers = 1;  // SUNAC only
  std::uint32_t n_extraction_layers = 2;    // SUNAC only
  std::uint32_t n_codebooks = 12;
  std::uint32_t codebook_size = 1024;
  std::uint32_t code_dim = 8;
  std::vector<std::uint32_t> dilations{1, 3, 9};
  ArchFamily arch_family = ArchFamily::SUNAC;
  std::uint64_t seed = 0;

  std::uint32_t hop_length() const {
    return std::accumulate(strides.begin(), strides.end(), 1u, [](std::uint32_t a, std::uint32_t b) { return a * b; });
  }

  double token_rate() const { return static_cast<double>(sample_rate) / hop_length(); }

  /// Number of RVQ stacks: the SDCodec family keeps one per source domain.
  std::uint32_t n_quantizers() const {
    return (arch_family == ArchFamily::SDCodec || arch_family == ArchFamily::SDCodecT) ? 3 : 1;
  }

  bool has_extractor() const { return arch_family == ArchFamily::SUNAC; }

  bool has_transformers() const {
    return n_enc_transformer + n_dec_transformer > 0 ||
           (has_extractor() && n_cross_prompt_layers + n_extraction_layers > 0);
  }

  std::uint32_t bits_per_code() const {
    std::uint32_t bits = 0;
    while ((1u << bits) < codebook_size) ++bits;
    return bits;
  }

  /// N_q * log2(codebook_size) * token_rate.
  double bitrate_bps() const { return n_codebooks * std::log2(static_cast<double>(codebook_size)) * token_rate(); }

  void validate() const {
    if (sample_rate == 0) throw ConfigError("sample_rate must be > 0");
    if (strides.empty() || std::any_of(strides.begin(), strides.end(), [](auto s) { return s == 0; }))
      throw ConfigError("strides must be non-empty and positive");
    if (sample_rate % hop_length() != 0)
      throw ConfigError("product(strides) must divide sample_rate to give an integer token rate");
    if (enc_base_dim == 0 || dec_base_dim == 0 || latent_dim == 0) throw ConfigError("dimensions must be > 0");
    if (dec_base_dim % (1u << strides.size()) != 0)
      throw ConfigError("dec_base_dim must be divisible by 2^len(strides)");
    if (codebook_size < 2) throw ConfigError("codebook_size must be >= 2");
    if (codebook_size > 65536) throw ConfigError("codebook_size must fit 16-bit code indices");
    if (n_codebooks == 0) throw ConfigError("n_codebooks must be >= 1");
    if (code_dim == 0) throw ConfigError("code_dim must be >= 1");
    if (dilations.empty()) throw ConfigError("dilations must be non-empty");
    if (has_transformers()) {
      if (transformer_hidden != latent_dim)
        throw ConfigError("transformer_hidden must equal latent_dim (no projection layers are modeled)");
      if (n_heads == 0 || transformer_hidden % n_heads != 0)
        throw ConfigError("transformer_hidden must be divisible by n_heads");
      if ((transformer_hidden / n_heads) % 2 != 0) throw ConfigError("head dimension must be even");
      if (transformer_ffn == 0) throw ConfigError("transformer_ffn must be > 0");
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Builtin configurations. Full-size variants reproduce the reference layer
/// sizes; "-tiny" variants keep the stride and quantizer layout but shrink the
/// channel widths so forward passes run in milliseconds.
inline ModelConfig preset(const std::string& name) {
  const std::string n = lowercase(name);
  ModelConfig c;
  if (n == "dac" || n == "sdcodec") {
    c.arch_family = n == "dac" ? ArchFamily::DAC : ArchFamily::SDCodec;
    c.enc_base_dim = 64;
    c.dec_base_dim = 1536;
    c.n_enc_transformer = 0;
    c.n_dec_transformer = 0;
  } else if (n == "dact" || n == "sdcodect") {
    c.arch_family = n == "dact" ? ArchFamily::DACT : ArchFamily::SDCodecT;
    c.n_enc_transformer = 3;
    c.n_dec_transformer = 3;
  } else if (n == "sunac") {
    c.arch_family = ArchFamily::SUNAC;
  } else if (n == "sunac-tiny" || n == "dact-tiny" || n == "dac-tiny") {
    c.enc_base_dim = 4;
    c.dec_base_dim = 64;
    c.latent_dim = 16;
    c.transformer_hidden = 16;
    c.transformer_ffn = 24;
    c.n_heads = 2;
    if (n == "sunac-tiny") {
      c.arch_family = ArchFamily::SUNAC;
    } else if (n == "dact-tiny") {
      c.arch_family = ArchFamily::DACT;
      c.n_enc_transformer = 3;
    } else {
      c.arch_family = ArchFamily::DAC;
      c.n_dec_transformer = 0;
    }
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

inline nlohmann::json to_json(const ModelConfig& c) {
  return nlohmann::json{{"sample_rate", c.sample_rate},
                        {"strides", c.strides},
                        {"enc_base_dim", c.enc_base_dim},
                        {"dec_base_dim", c.dec_base_dim},
                        {"latent_dim", c.latent_dim},
                        {"n_enc_transformer", c.n_enc_transformer},
                        {"n_dec_transformer", c.n_dec_transformer},
                        {"transformer_hidden", c.transformer_hidden},
                        {"transformer_ffn", c.transformer_ffn},
                        {"n_heads", c.n_heads},
                        {"n_cross_prompt_layers", c.n_cross_prompt_layers},
                        {"n_extraction_layers", c.n_extraction_layers},
                        {"n_codebooks", c.n_codebooks},
                        {"codebook_size", c.codebook_size},
                        {"code_dim", c.code_dim},
                        {"dilations", c.dilations},
                        {"arch_family", to_string(c.arch_family)},
                        {"seed", c.seed}};
}

/// Parses a config document. A "preset" key selects the starting point;
/// any other key overrides the corresponding field.
inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : ModelConfig{};
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    take("sample_rate", c.sample_rate);
    take("strides", c.strides);
    take("enc_base_dim", c.enc_base_dim);
    take("dec_base_dim", c.dec_base_dim);
    take("latent_dim", c.latent_dim);
    take("n_enc_transformer", c.n_enc_transformer);
    take("n_dec_transformer", c.n_dec_transformer);
    take("transformer_hidden", c.transformer_hidden);
    take("transformer_ffn", c.transformer_ffn);
    take("n_heads", c.n_heads);
    take("n_cross_prompt_layers", c.n_cross_prompt_layers);
    take("n_extraction_layers", c.n_extraction_layers);
    take("n_codebooks", c.n_codebooks);
    take("codebook_size", c.codebook_size);
    take("code_dim", c.code_dim);
    take("dilations", c.dilations);
    take("seed", c.seed);
    if (j.contains("arch_family")) c.arch_family = parse_arch_family(j.at("arch_family").get<std::string>());
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return model_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

/// SUNAC_SEED, when set to an integer, replaces the config seed.
inline std::uint64_t effective_seed(const ModelConfig& c) {
  if (const char* env = std::getenv("SUNAC_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != nullptr && *end == '\0') return v;
    throw ConfigError(std::string("SUNAC_SEED is not an unsigned integer: ") + env);
  }
  return c.seed;
}

}  // namespace sunac
