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

#include "sunac/analysis.hpp"
#include "sunac/weights.hpp"

using namespace sunac;

namespace {

MacReport report_for(const std::string& name, double seconds = 1.0) {
  return count_macs(find_spec(builtin_specs(), name), seconds);
}

bool within(double got, double want, double tol) { return std::abs(got - want) <= tol * want; }

}  // namespace

TEST(CountMacs, SingleConvClosedForm) {
  ArchSpec spec{"one", 1, {{.name = "c", .kind = LayerKind::Conv1d, .in_dim = 1, .out_dim = 1, .kernel = 3}}};
  EXPECT_EQ(count_macs(spec, 1.0).per_source_macs, 48000u);
}

TEST(CountMacs, LinearOverFiftyFrames) {
  ArchSpec spec{"lin", 320, {}};
  spec.layers.push_back({.name = "down", .kind = LayerKind::Conv1d, .in_dim = 1, .out_dim = 1024, .kernel = 1,
                         .stride = 320, .rate_in = 1, .rate_out = 320});
  spec.layers.push_back({.name = "lin", .kind = LayerKind::Linear, .in_dim = 1024, .out_dim = 1024, .rate_in = 320,
                         .rate_out = 320});
  const MacReport r = count_macs(spec, 1.0);
  EXPECT_EQ(r.layers[1].macs, 52428800u);
  EXPECT_EQ(r.layers[1].params, 1049600u);
}

TEST(CountMacs, InconsistentChainIsSpecError) {
  ArchSpec spec{"bad", 1, {}};
  spec.layers.push_back({.name = "a", .kind = LayerKind::Conv1d, .in_dim = 1, .out_dim = 8, .kernel = 3});
  spec.layers.push_back({.name = "b", .kind = LayerKind::Conv1d, .in_dim = 4, .out_dim = 8, .kernel = 3});
  EXPECT_THROW(count_macs(spec, 1.0), SpecError);
  spec.layers[1] = {.name = "b", .kind = LayerKind::Conv1d, .in_dim = 8, .out_dim = 8, .kernel = 3, .stride = 2,
                    .rate_in = 1, .rate_out = 1};
  EXPECT_THROW(count_macs(spec, 1.0), SpecError);
  EXPECT_THROW(count_macs(find_spec(builtin_specs(), "dac"), 0.0), InvalidArgument);
}

TEST(CountMacs, ReferenceFigures) {
  EXPECT_TRUE(within(report_for("DAC").params / 1e6, 74.10, 0.05));
  EXPECT_TRUE(within(report_for("DAC").per_source_macs / 1e9, 41.00, 0.20));
  EXPECT_TRUE(within(report_for("DACT").params / 1e6, 66.42, 0.05));
  EXPECT_TRUE(within(report_for("DACT").per_source_macs / 1e9, 12.88, 0.20));
  EXPECT_TRUE(within(report_for("SDCodec").params / 1e6, 74.82, 0.05));
  EXPECT_TRUE(within(report_for("SDCodec").const_macs / 1e9, 12.56, 0.20));
  EXPECT_TRUE(within(report_for("SDCodec").per_source_macs / 1e9, 28.44, 0.20));
  EXPECT_TRUE(within(report_for("SDCodecT").params / 1e6, 67.06, 0.05));
  EXPECT_TRUE(within(report_for("SDCodecT").const_macs / 1e9, 3.91, 0.20));
  EXPECT_TRUE(within(report_for("SDCodecT").per_source_macs / 1e9, 8.95, 0.20));
  EXPECT_TRUE(within(report_for("SUNAC").params / 1e6, 69.17, 0.05));
  EXPECT_TRUE(within(report_for("SUNAC").const_macs / 1e9, 3.50, 0.20));
  EXPECT_TRUE(within(report_for("SUNAC").per_source_macs / 1e9, 9.45, 0.20));
}

TEST(CountMacs, SingleSourceCodecsHaveNoConstPart) {
  EXPECT_EQ(report_for("DAC").const_macs, 0u);
  EXPECT_EQ(report_for("DACT").const_macs, 0u);
}

// Every spec built from a runnable config counts exactly the tensors the codec allocates.
TEST(CountMacs, ParamsAgreeWithCodecLayout) {
  for (const char* name : {"dac", "dact", "sdcodec", "sdcodect", "sunac", "sunac-tiny", "dact-tiny", "dac-tiny"}) {
    const ModelConfig c = preset(name);
    EXPECT_EQ(count_macs(arch_spec_from_config(c, name), 1.0).params, count_params(c).total) << name;
  }
}

TEST(CountMacs, DurationScaling) {
  for (const ArchSpec& spec : builtin_specs()) {
    const MacReport one = count_macs(spec, 1.0);
    const MacReport two = count_macs(spec, 2.0);
    ASSERT_EQ(one.layers.size(), two.layers.size());
    for (std::size_t i = 0; i < one.layers.size(); ++i) {
      const LayerCost& a = one.layers[i];
      const LayerCost& b = two.layers[i];
      switch (a.kind) {
        case LayerKind::Conv1d:
        case LayerKind::TransposedConv1d:
        case LayerKind::Linear:
        case LayerKind::FeedForward:
        case LayerKind::RvqScan:
          EXPECT_EQ(a.scaling, Scaling::Linear);
          EXPECT_EQ(b.macs, 2 * a.macs) << spec.name << " " << a.name;
          break;
        case LayerKind::Attention:
          EXPECT_EQ(a.scaling, Scaling::Quadratic);
          EXPECT_GT(b.macs, 2 * a.macs) << a.name;
          break;
        default: break;
      }
    }
  }
}

TEST(CompareReport, IdentityOrderingAndNonNegativity) {
  for (std::uint64_t n = 1; n <= 3; ++n) {
    const auto rows = compare_report(1.0, n);
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0].report.name, "DAC");
    EXPECT_EQ(rows[4].report.name, "SUNAC");
    for (const ReportRow& r : rows) EXPECT_EQ(r.total_macs, r.report.const_macs + n * r.report.per_source_macs);
    const ReportRow& sdcodec = rows[2];
    const ReportRow& sunac = rows[4];
    EXPECT_LT(sunac.total_macs, sdcodec.total_macs) << n;
    EXPECT_LT(sunac.report.const_macs, sdcodec.report.const_macs);
  }
  EXPECT_THROW(compare_report(1.0, 0), InvalidArgument);
}

TEST(CompareReport, Formatting) {
  const auto rows = compare_report(1.0, 3);
  const std::string text = format_report_text(rows, 1.0, 3);
  EXPECT_NE(text.find("SUNAC"), std::string::npos);
  const nlohmann::json j = report_to_json(rows, 1.0, 3, true);
  EXPECT_EQ(j["rows"].size(), 6u);
  EXPECT_EQ(j["rows"][4]["name"], "SUNAC");
  EXPECT_FALSE(j["rows"][4]["layers"].empty());
  EXPECT_THROW(find_spec(builtin_specs(), "wavenet"), InvalidArgument);
}
