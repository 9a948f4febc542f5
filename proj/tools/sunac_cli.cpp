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

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sunac/pipeline.hpp"

namespace {

std::optional<std::filesystem::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sunac: prompt-conditioned multi-source audio codec"};
  app.require_subcommand(1);

  std::string config, weights;

  sunac::EncodeOptions enc;
  std::string enc_in, enc_out;
  auto* encode = app.add_subcommand("encode", "Encode a wav into one code stream per prompt");
  encode->add_option("input", enc_in, "16-bit PCM mono wav")->required();
  encode->add_option("-o,--output", enc_out, "output .snac file")->required();
  encode->add_option("--prompts", enc.prompts, "comma-separated prompts: speech, music, sfx, mix")->required();
  encode->add_option("--config", config, "model config JSON (default: sunac preset)");
  encode->add_option("--weights", weights, "SUWT weight file (default: seeded init)");

  sunac::DecodeOptions dec;
  std::string dec_in, dec_out;
  auto* decode = app.add_subcommand("decode", "Decode a code stream to one wav per source");
  decode->add_option("input", dec_in, ".snac file")->required();
  decode->add_option("-o,--output", dec_out, "output directory")->required();
  decode->add_option("--config", config, "model config JSON (default: sunac preset)");
  decode->add_option("--weights", weights, "SUWT weight file (default: seeded init)");

  sunac::ExtractOptions ext;
  std::string ext_in, ext_out;
  auto* extract = app.add_subcommand("extract", "Dump pre-quantization feature maps (debug)");
  extract->add_option("input", ext_in, "16-bit PCM mono wav")->required();
  extract->add_option("-o,--output", ext_out, "output SUWT file")->required();
  extract->add_option("--prompts", ext.prompts, "comma-separated prompts")->required();
  extract->add_option("--config", config, "model config JSON (default: sunac preset)");
  extract->add_option("--weights", weights, "SUWT weight file (default: seeded init)");

  sunac::AnalyzeOptions ana;
  auto* analyze = app.add_subcommand("analyze", "Parameter and MAC report");
  analyze->add_option("--arch", ana.arch, "dac, dact, sdcodec, sdcodect, sunac, sunac-encoder-only or all");
  analyze->add_option("--duration", ana.duration_s, "seconds of audio");
  analyze->add_option("--sources", ana.n_sources, "number of sources")->check(CLI::PositiveNumber);
  analyze->add_option("--format", ana.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  analyze->add_flag("--layers", ana.with_layers, "include per-layer rows (json only)");

  sunac::EvalOptions ev;
  std::string ev_refs, ev_est;
  auto* eval = app.add_subcommand("eval", "SI-SDR of estimates after best same-type assignment");
  eval->add_option("--refs", ev_refs, "reference manifest JSON")->required();
  eval->add_option("--est", ev_est, "directory with *.src<k>.wav estimates")->required();
  eval->add_option("--mode", ev.mode, "direct or masked")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, sunac::EvalMode>{{"direct", sunac::EvalMode::Direct}, {"masked", sunac::EvalMode::Masked}},
          CLI::ignore_case));

  sunac::FixturesOptions fix;
  std::string fix_manifest, fix_out;
  auto* fixtures = app.add_subcommand("fixtures", "Generate synthetic source fixtures and their mixture");
  fixtures->add_option("--manifest", fix_manifest, "fixture manifest JSON")->required();
  fixtures->add_option("-o,--output", fix_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sunac::exit_code::kBadInput;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*encode) {
    enc.input = enc_in;
    enc.output = enc_out;
    enc.config = opt_path(config);
    enc.weights = opt_path(weights);
    return sunac::run_encode(enc, out, err);
  }
  if (*decode) {
    dec.input = dec_in;
    dec.out_dir = dec_out;
    dec.config = opt_path(config);
    dec.weights = opt_path(weights);
    return sunac::run_decode(dec, out, err);
  }
  if (*extract) {
    ext.input = ext_in;
    ext.output = ext_out;
    ext.config = opt_path(config);
    ext.weights = opt_path(weights);
    return sunac::run_extract(ext, out, err);
  }
  if (*analyze) return sunac::run_analyze(ana, out, err);
  if (*eval) {
    ev.refs = ev_refs;
    ev.est_dir = ev_est;
    return sunac::run_eval(ev, out, err);
  }
  fix.manifest = fix_manifest;
  fix.out_dir = fix_out;
  return sunac::run_fixtures(fix, out, err);
}
