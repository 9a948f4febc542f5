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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

using namespace sunac;
namespace fs = std::filesystem;

namespace {

class PipelineTest : public ::testing::Test {
 protected:
  fs::path dir;
  fs::path config_path;
  std::ostringstream out, err;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("sunac_pipeline_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    config_path = dir / "tiny.json";
    io::write_file_atomic(config_path, std::string(R"({"preset": "sunac-tiny"})"));
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write_audio(const std::string& name, std::size_t n, std::uint64_t seed = 1) {
    Rng rng(seed);
    wav::write(dir / name, oracle::random_audio(n, rng));
    return dir / name;
  }

  int encode(const fs::path& in, const std::string& prompts, const fs::path& outp) {
    return run_encode({in, outp, config_path, std::nullopt, prompts}, out, err);
  }
  int decode(const fs::path& in, const fs::path& outdir) {
    return run_decode({in, outdir, config_path, std::nullopt}, out, err);
  }
};

CodeStream sample_stream() {
  CodeStream s;
  s.n_codebooks = 12;
  s.bits_per_code = 10;
  s.n_frames = 50;
  s.original_len = 16000;
  s.prompts = {PromptType::Speech, PromptType::Mix};
  Rng rng(3);
  for (int k = 0; k < 2; ++k) {
    CodeGrid g(12, 50);
    for (auto& c : g.codes) c = static_cast<std::uint32_t>(rng.below(1024));
    s.sources.push_back(g);
  }
  return s;
}

}  // namespace

TEST(Stream, LayoutAndRoundTrip) {
  const CodeStream s = sample_stream();
  const auto bytes = serialize_stream(s);
  EXPECT_EQ(bytes.size(), 28u + 2 + 2 * 2 * 12 * 50);
  EXPECT_EQ(bytes.size(), s.byte_size());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SNAC");
  EXPECT_EQ(bytes[28], 0);
  EXPECT_EQ(bytes[29], 3);
  // first code, little-endian
  EXPECT_EQ(bytes[30] | (bytes[31] << 8), static_cast<int>(s.sources[0].codes[0]));
  const CodeStream back = deserialize_stream(bytes);
  EXPECT_EQ(back, s);
  EXPECT_EQ(serialize_stream(back), bytes);
}

TEST(Stream, CorruptInputs) {
  const auto bytes = serialize_stream(sample_stream());
  auto cut = bytes;
  cut.pop_back();
  EXPECT_THROW(deserialize_stream(cut), CorruptStream);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(deserialize_stream(extra), CorruptStream);
  auto magic = bytes;
  magic[1] = 'X';
  EXPECT_THROW(deserialize_stream(magic), CorruptStream);
  auto version = bytes;
  version[4] = 9;
  EXPECT_THROW(deserialize_stream(version), CorruptStream);
  auto tag = bytes;
  tag[28] = 7;
  EXPECT_THROW(deserialize_stream(tag), CorruptStream);
  auto code = bytes;
  code[31] = 0xff;  // 0xff.. >= 2^10
  EXPECT_THROW(deserialize_stream(code), CorruptStream);
}

TEST_F(PipelineTest, EncodeSizesAndDeterminism) {
  const fs::path in = write_audio("in.wav", 16000);
  ASSERT_EQ(encode(in, "speech", dir / "a.snac"), 0) << err.str();
  EXPECT_EQ(fs::file_size(dir / "a.snac"), 28u + 1 + 2 * 600);
  ASSERT_EQ(encode(in, "speech,speech,music", dir / "b.snac"), 0);
  EXPECT_EQ(fs::file_size(dir / "b.snac"), 28u + 3 + 2 * 1800);
  ASSERT_EQ(encode(in, "speech,speech,music", dir / "c.snac"), 0);
  EXPECT_EQ(io::read_file(dir / "b.snac"), io::read_file(dir / "c.snac"));
}

TEST_F(PipelineTest, DecodeWritesSourcesAndSidecar) {
  const fs::path in = write_audio("in.wav", 5000);
  ASSERT_EQ(encode(in, "music,speech", dir / "x.snac"), 0);
  ASSERT_EQ(decode(dir / "x.snac", dir / "out"), 0) << err.str();
  for (int k = 0; k < 2; ++k) {
    const AudioBuffer a = wav::read(dir / "out" / ("x.src" + std::to_string(k) + ".wav"));
    EXPECT_EQ(a.size(), 5000u);
  }
  const auto side = nlohmann::json::parse(io::read_file(dir / "out" / "x.json"));
  EXPECT_EQ(side["sources"][0]["prompt"], "music");
  EXPECT_EQ(side["sources"][1]["prompt"], "speech");
  EXPECT_EQ(side["sources"][1]["file"], "x.src1.wav");

  const auto first = io::read_file(dir / "out" / "x.src0.wav");
  ASSERT_EQ(decode(dir / "x.snac", dir / "again"), 0);
  EXPECT_EQ(io::read_file(dir / "again" / "x.src0.wav"), first);
}

TEST_F(PipelineTest, ExitCodes) {
  const fs::path in = write_audio("in.wav", 4000);
  EXPECT_EQ(encode(in, "speech,banjo", dir / "a.snac"), exit_code::kBadInput);
  EXPECT_NE(err.str().find("banjo"), std::string::npos);
  io::write_file_atomic(dir / "bad.wav", std::string("RIFF....not a wav"));
  EXPECT_EQ(encode(dir / "bad.wav", "speech", dir / "a.snac"), exit_code::kBadInput);
  EXPECT_EQ(encode(dir / "missing.wav", "speech", dir / "a.snac"), exit_code::kBadInput);

  ASSERT_EQ(encode(in, "speech", dir / "a.snac"), 0);
  auto bytes = io::read_file(dir / "a.snac");
  bytes.resize(bytes.size() - 10);
  io::write_file_atomic(dir / "cut.snac", bytes);
  err.str("");
  EXPECT_EQ(decode(dir / "cut.snac", dir / "o"), exit_code::kCorruptStream);
  EXPECT_NE(err.str().find("corrupt stream"), std::string::npos);

  // decoding with a config whose sample rate disagrees with the header
  io::write_file_atomic(dir / "other.json", std::string(R"({"preset": "sunac-tiny", "sample_rate": 32000})"));
  EXPECT_EQ(run_decode({dir / "a.snac", dir / "o", dir / "other.json", std::nullopt}, out, err), exit_code::kBadInput);
}

TEST_F(PipelineTest, ExtractDumpsFeatureMaps) {
  const fs::path in = write_audio("in.wav", 3200);
  ASSERT_EQ(run_extract({in, dir / "f.suwt", config_path, std::nullopt, "speech,sfx"}, out, err), 0) << err.str();
  const WeightStore f = load_weights(dir / "f.suwt");
  EXPECT_EQ(f.at("features.src1").dims, (std::vector<std::uint32_t>{16, 10}));
}

TEST_F(PipelineTest, AnalyzeFormats) {
  EXPECT_EQ(run_analyze({"sunac", 1.0, 3, "json"}, out, err), 0);
  const auto j = nlohmann::json::parse(out.str());
  ASSERT_EQ(j["rows"].size(), 1u);
  EXPECT_EQ(j["rows"][0]["total_macs"].get<std::uint64_t>(),
            j["rows"][0]["const_macs"].get<std::uint64_t>() + 3 * j["rows"][0]["per_source_macs"].get<std::uint64_t>());
  EXPECT_EQ(run_analyze({"wavenet", 1.0, 1, "text"}, out, err), exit_code::kBadInput);
}

TEST_F(PipelineTest, FixturesThenEval) {
  io::write_file_atomic(dir / "m.json",
                        std::string(R"({"duration_s": 1.0, "sources": [{"prompt": "speech"}, {"prompt": "speech"}, {"prompt": "music"}]})"));
  ASSERT_EQ(run_fixtures({dir / "m.json", dir / "fx"}, out, err), 0) << err.str();

  std::ostringstream report;
  ASSERT_EQ(run_eval({dir / "fx" / "refs.json", dir / "fx", EvalMode::Direct}, report, err), 0) << err.str();
  EXPECT_NE(report.str().find("source=0 prompt=speech si_sdr_db=100.0000 estimate=0"), std::string::npos);

  fs::create_directories(dir / "swap");
  fs::copy_file(dir / "fx" / "src0.wav", dir / "swap" / "e.src1.wav");
  fs::copy_file(dir / "fx" / "src1.wav", dir / "swap" / "e.src0.wav");
  fs::copy_file(dir / "fx" / "src2.wav", dir / "swap" / "e.src2.wav");
  std::ostringstream swapped;
  ASSERT_EQ(run_eval({dir / "fx" / "refs.json", dir / "swap", EvalMode::Masked}, swapped, err), 0);
  std::istringstream lines(swapped.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    double db = 0.0;
    std::size_t est = 0;
    ASSERT_EQ(std::sscanf(line.c_str() + line.find("si_sdr_db="), "si_sdr_db=%lf estimate=%zu", &db, &est), 2);
    EXPECT_GT(db, 30.0) << line;
    EXPECT_EQ(est, n == 0 ? 1u : n == 1 ? 0u : 2u);
    ++n;
  }
  EXPECT_EQ(n, 3);

  fs::remove(dir / "swap" / "e.src2.wav");
  EXPECT_EQ(run_eval({dir / "fx" / "refs.json", dir / "swap", EvalMode::Direct}, swapped, err), exit_code::kBadInput);
}

TEST_F(PipelineTest, SingleSourceFamilies) {
  const fs::path in = write_audio("in.wav", 3200);
  io::write_file_atomic(config_path, std::string(R"({"preset": "dac-tiny"})"));
  EXPECT_EQ(encode(in, "mix", dir / "d.snac"), 0) << err.str();
  EXPECT_EQ(encode(in, "speech,music", dir / "d.snac"), exit_code::kBadInput);
  io::write_file_atomic(config_path, std::string(R"({"preset": "sdcodec"})"));
  EXPECT_EQ(encode(in, "speech", dir / "e.snac"), exit_code::kBadInput);
}
