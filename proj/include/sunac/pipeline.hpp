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

// End-to-end operations behind the command-line tool.
//
// Each run_* function takes already-parsed options, writes its outputs
// atomically and returns a process exit code:
//   0 success, 1 unexpected failure, 2 bad input (wav, prompts, counts, config),
//   3 corrupt or mismatched stream.

#pragma once

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "sunac/analysis.hpp"
#include "sunac/assignment.hpp"
#include "sunac/audio.hpp"
#include "sunac/codec.hpp"
#include "sunac/config.hpp"
#include "sunac/error.hpp"
#include "sunac/extractor.hpp"
#include "sunac/fixtures.hpp"
#include "sunac/io.hpp"
#include "sunac/rvq.hpp"
#include "sunac/stream.hpp"
#include "sunac/weights.hpp"

namespace sunac {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kBadInput = 2;
inline constexpr int kCorruptStream = 3;
}  // namespace exit_code

struct Model {
  ModelConfig config;
  WeightStore weights;
};

/// Config defaults to the "sunac" preset; weights default to a seeded init.
inline Model load_model(const std::optional<std::filesystem::path>& config_path,
                        const std::optional<std::filesystem::path>& weights_path) {
  Model m{config_path ? load_model_config(*config_path) : preset("sunac"), WeightStore(0)};
  m.config.validate();
  if (weights_path) {
    m.weights = load_weights(*weights_path);
    try {
      m.weights.validate_against(m.config);
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("weights do not match config: ") + e.what());
    }
  } else {
    m.weights = init_weights(m.config, effective_seed(m.config));
  }
  return m;
}

/// Latent feature maps the quantizer sees: one per prompt for SUNAC, the
/// plain latent for single-source codecs.
inline std::vector<FeatureMap> source_features(const AudioBuffer& audio, const Model& m, const PromptSpec& prompts) {
  if (audio.sample_rate != m.config.sample_rate)
    throw AudioFormatError("input sample rate " + std::to_string(audio.sample_rate) + " Hz, config expects " +
                           std::to_string(m.config.sample_rate) + " Hz");
  if (prompts.empty()) throw InvalidArgument("at least one prompt is required");
  switch (m.config.arch_family) {
    case ArchFamily::SUNAC: {
      const FeatureMap x = encode(audio, m.config, m.weights);
      return extract(x, prompts, bind_extractor(m.weights, m.config));
    }
    case ArchFamily::DAC:
    case ArchFamily::DACT:
      if (prompts.size() != 1)
        throw InvalidArgument(to_string(m.config.arch_family) + " encodes a single source; got " +
                              std::to_string(prompts.size()) + " prompts");
      return {encode(audio, m.config, m.weights)};
    case ArchFamily::SDCodec:
    case ArchFamily::SDCodecT: break;
  }
  throw ConfigError(to_string(m.config.arch_family) + " is available for analysis only");
}

inline CodeStream encode_to_stream(const AudioBuffer& audio, const Model& m, const PromptSpec& prompts) {
  const std::vector<FeatureMap> maps = source_features(audio, m, prompts);
  const RvqWeights rvq = bind_rvq(m.weights, m.config);
  CodeStream s;
  s.sample_rate = m.config.sample_rate;
  s.n_codebooks = static_cast<std::uint16_t>(m.config.n_codebooks);
  s.bits_per_code = static_cast<std::uint16_t>(m.config.bits_per_code());
  s.n_frames = static_cast<std::uint32_t>(frame_count(audio.size(), m.config));
  s.original_len = audio.size();
  s.prompts = prompts;
  for (const FeatureMap& f : maps) s.sources.push_back(quantize(f, rvq, m.config.n_codebooks).codes);
  return s;
}

inline std::vector<AudioBuffer> decode_stream(const CodeStream& s, const Model& m) {
  if (s.sample_rate != m.config.sample_rate || s.bits_per_code != m.config.bits_per_code() ||
      s.n_codebooks < 1 || s.n_codebooks > m.config.n_codebooks)
    throw ConfigError("stream header (" + std::to_string(s.sample_rate) + " Hz, " + std::to_string(s.n_codebooks) +
                      " codebooks, " + std::to_string(s.bits_per_code) + " bits) is inconsistent with config");
  const std::uint64_t hop = m.config.hop_length();
  if (s.n_frames == 0 || s.original_len > s.n_frames * hop || s.original_len <= (s.n_frames - 1) * hop)
    throw CorruptStream("corrupt stream: original length " + std::to_string(s.original_len) + " does not match " +
                        std::to_string(s.n_frames) + " frames");
  const RvqWeights rvq = bind_rvq(m.weights, m.config);
  std::vector<AudioBuffer> out;
  for (const CodeGrid& g : s.sources)
    out.push_back(decode(codes_to_features(g, rvq), m.config, m.weights, static_cast<std::size_t>(s.original_len)));
  return out;
}

namespace detail {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const CorruptStream& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kCorruptStream;
  } catch (const AudioFormatError& e) {
    err << "error: bad wav: " << e.what() << '\n';
    return exit_code::kBadInput;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kBadInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kBadInput;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kBadInput;
  } catch (const InvalidReference& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kFailure;
  }
}

inline std::string stem_of(const std::filesystem::path& p) { return p.stem().string(); }

}  // namespace detail

struct EncodeOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> weights;
  std::string prompts;
};

inline int run_encode(const EncodeOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const PromptSpec prompts = parse_prompt_list(o.prompts);
    const AudioBuffer audio = wav::read(o.input);
    const Model m = load_model(o.config, o.weights);
    const CodeStream s = encode_to_stream(audio, m, prompts);
    save_stream(o.output, s);
    out << "wrote " << o.output.string() << ": " << s.n_sources() << " source(s) x " << s.n_codebooks
        << " codebooks x " << s.n_frames << " frames, " << s.byte_size() << " bytes\n";
    return exit_code::kOk;
  });
}

struct DecodeOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> weights;
};

/// Writes DIR/<stem>.src{k}.wav per source and DIR/<stem>.json listing prompts and files.
inline int run_decode(const DecodeOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const CodeStream s = load_stream(o.input);
    const Model m = load_model(o.config, o.weights);
    const std::vector<AudioBuffer> audio = decode_stream(s, m);
    std::filesystem::create_directories(o.out_dir);
    const std::string stem = detail::stem_of(o.input);
    nlohmann::json side{{"stream", o.input.filename().string()},
                        {"sample_rate", s.sample_rate},
                        {"original_len", s.original_len},
                        {"n_frames", s.n_frames},
                        {"sources", nlohmann::json::array()}};
    for (std::size_t k = 0; k < audio.size(); ++k) {
      const std::string name = stem + ".src" + std::to_string(k) + ".wav";
      wav::write(o.out_dir / name, audio[k]);
      side["sources"].push_back({{"index", k}, {"prompt", to_string(s.prompts[k])}, {"file", name}});
    }
    io::write_file_atomic(o.out_dir / (stem + ".json"), side.dump(2) + "\n");
    out << "decoded " << audio.size() << " source(s) to " << o.out_dir.string() << '\n';
    return exit_code::kOk;
  });
}

struct ExtractOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> weights;
  std::string prompts;
};

/// Debug dump of the pre-quantization feature maps as a SUWT file ("features.src{k}", F x T).
inline int run_extract(const ExtractOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const PromptSpec prompts = parse_prompt_list(o.prompts);
    const AudioBuffer audio = wav::read(o.input);
    const Model m = load_model(o.config, o.weights);
    const std::vector<FeatureMap> maps = source_features(audio, m, prompts);
    WeightStore dump(effective_seed(m.config));
    for (std::size_t k = 0; k < maps.size(); ++k) {
      Tensor t({static_cast<std::uint32_t>(maps[k].rows()), static_cast<std::uint32_t>(maps[k].cols())});
      t.data = maps[k].values();
      dump.add("features.src" + std::to_string(k), std::move(t));
    }
    save_weights(o.output, dump);
    out << "wrote " << maps.size() << " feature map(s) of " << maps.front().rows() << " x " << maps.front().cols()
        << " to " << o.output.string() << '\n';
    return exit_code::kOk;
  });
}

struct AnalyzeOptions {
  std::string arch = "all";
  double duration_s = 1.0;
  std::uint64_t n_sources = 1;
  std::string format = "text";
  bool with_layers = false;
};

inline int run_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (o.format != "text" && o.format != "json") throw InvalidArgument("format must be text or json");
    if (!(o.duration_s > 0.0)) throw InvalidArgument("duration must be > 0");
    std::vector<ReportRow> rows = compare_report(o.duration_s, o.n_sources);
    if (lowercase(o.arch) != "all") {
      const std::string want = find_spec(builtin_specs(), o.arch).name;
      std::erase_if(rows, [&](const ReportRow& r) { return r.report.name != want; });
    }
    if (o.format == "json")
      out << report_to_json(rows, o.duration_s, o.n_sources, o.with_layers).dump(2) << '\n';
    else
      out << format_report_text(rows, o.duration_s, o.n_sources);
    return exit_code::kOk;
  });
}

enum class EvalMode { Direct, Masked };

struct EvalOptions {
  std::filesystem::path refs;
  std::filesystem::path est_dir;
  EvalMode mode = EvalMode::Direct;
};

struct EvalRecord {
  std::size_t source = 0;
  PromptType prompt = PromptType::Speech;
  double si_sdr_db = 0.0;
  std::size_t estimate = 0;
};

/// Reference manifest: {"sample_rate", "mixture", "sources": [{"prompt", "file"}, ...]}; paths
/// are relative to the manifest.
inline SourceSet load_reference_set(const std::filesystem::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("reference manifest: ") + e.what());
  }
  const std::filesystem::path base = manifest.parent_path();
  SourceSet set;
  try {
    if (j.contains("mixture")) set.mixture = wav::read(base / j.at("mixture").get<std::string>());
    for (const auto& s : j.at("sources")) {
      set.types.push_back(parse_prompt(s.at("prompt").get<std::string>()));
      set.sources.push_back(wav::read(base / s.at("file").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("reference manifest: ") + e.what());
  }
  if (set.sources.empty()) throw ConfigError("reference manifest lists no sources");
  set.validate();
  return set;
}

/// Files named src<k>.wav or *.src<k>.wav in `dir`, ordered by k.
inline std::vector<AudioBuffer> load_estimates(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InvalidArgument("estimate directory " + dir.string() + " not found");
  static const std::regex pattern(R"((?:.*\.)?src(\d+)\.wav)");
  std::vector<std::pair<std::size_t, std::filesystem::path>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) found.emplace_back(std::stoul(m[1].str()), entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<AudioBuffer> out;
  for (std::size_t k = 0; k < found.size(); ++k) {
    if (found[k].first != k) throw InvalidArgument("estimate files must be numbered src0..src" + std::to_string(found.size() - 1));
    out.push_back(wav::read(found[k].second));
  }
  return out;
}

inline std::vector<EvalRecord> evaluate(const SourceSet& refs, std::vector<AudioBuffer> estimates, EvalMode mode) {
  if (estimates.size() != refs.size())
    throw ContractViolation("eval: " + std::to_string(refs.size()) + " references but " +
                            std::to_string(estimates.size()) + " estimates");
  for (const AudioBuffer& e : estimates)
    if (e.size() != refs.sources.front().size()) throw ContractViolation("eval: estimate length differs from reference");
  if (mode == EvalMode::Masked) {
    if (!refs.mixture) throw ConfigError("eval: masked mode needs a mixture in the reference manifest");
    for (AudioBuffer& e : estimates) e = magnitude_mask_reconstruct(*refs.mixture, e);
  }
  const Assignment a = best_assignment(refs, estimates);
  std::vector<EvalRecord> out;
  for (std::size_t i = 0; i < refs.size(); ++i) out.push_back({i, refs.types[i], a.per_source[i], a.permutation[i]});
  return out;
}

inline int run_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const SourceSet refs = load_reference_set(o.refs);
    const std::vector<EvalRecord> records = evaluate(refs, load_estimates(o.est_dir), o.mode);
    for (const EvalRecord& r : records)
      out << "source=" << r.source << " prompt=" << to_string(r.prompt) << " si_sdr_db=" << std::fixed
          << std::setprecision(4) << r.si_sdr_db << " estimate=" << r.estimate << '\n';
    return exit_code::kOk;
  });
}

struct FixturesOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
};

/// Writes src{k}.wav, mix.wav and refs.json (an eval reference manifest) into DIR.
inline int run_fixtures(const FixturesOptions& o, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_file(o.manifest));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("fixture manifest: ") + e.what());
    }
    const FixtureManifest m = fixture_manifest_from_json(j);
    const SourceSet set = make_mixture(m.sources, m.sample_rate, m.allow_four_sources);
    std::filesystem::create_directories(o.out_dir);
    nlohmann::json refs{{"sample_rate", m.sample_rate}, {"mixture", "mix.wav"}, {"sources", nlohmann::json::array()}};
    for (std::size_t k = 0; k < set.size(); ++k) {
      const std::string name = "src" + std::to_string(k) + ".wav";
      wav::write(o.out_dir / name, set.sources[k]);
      refs["sources"].push_back({{"prompt", to_string(set.types[k])}, {"file", name}});
    }
    wav::write(o.out_dir / "mix.wav", *set.mixture);
    io::write_file_atomic(o.out_dir / "refs.json", refs.dump(2) + "\n");
    out << "wrote " << set.size() << " source(s) and mix.wav to " << o.out_dir.string() << '\n';
    return exit_code::kOk;
  });
}

}  // namespace sunac
