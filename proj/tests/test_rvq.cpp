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

#include "oracles.hpp"

using namespace sunac;

namespace {

class RvqTest : public ::testing::Test {
 protected:
  ModelConfig config = preset("sunac-tiny");
  WeightStore store = init_weights(config, 31);
  RvqWeights rvq = bind_rvq(store, config);
  Rng rng{32};

  /// Projected frame t of `x` (down * x + b), in double.
  std::vector<double> project(const FeatureMap& x, std::size_t t) const {
    std::vector<double> z(rvq.code_dim());
    for (std::size_t c = 0; c < z.size(); ++c) {
      double acc = rvq.down_bias[c];
      for (std::size_t f = 0; f < rvq.feature_dim(); ++f) acc += double(rvq.down(c, f)) * x(f, t);
      z[c] = acc;
    }
    return z;
  }
};

/// 8-dim identity projections around the given codebooks.
struct IdentityRvq {
  std::vector<float> eye = std::vector<float>(64, 0.0f);
  std::vector<float> zero = std::vector<float>(8, 0.0f);
  std::vector<std::vector<float>> books;
  RvqWeights view() const {
    RvqWeights w{{8, 8, eye}, zero, {8, 8, eye}, zero, {}};
    for (const auto& b : books) w.codebooks.push_back({b.size() / 8, 8, b});
    return w;
  }
  IdentityRvq() {
    for (std::size_t i = 0; i < 8; ++i) eye[i * 8 + i] = 1.0f;
  }
};

}  // namespace

TEST_F(RvqTest, ExactMatchGivesZeroResidual) {
  IdentityRvq id;
  id.books.push_back(oracle::random_matrix(16, 8, rng).values());
  id.books.push_back(oracle::random_matrix(16, 8, rng).values());
  const RvqWeights w = id.view();
  FeatureMap x(8, 1);
  for (std::size_t c = 0; c < 8; ++c) x(c, 0) = w.codebooks[0](5, c);
  const QuantizeResult q = quantize(x, w, 1);
  EXPECT_EQ(q.codes(0, 0), 5u);
  EXPECT_EQ(q.residual_norms[0], 0.0);
  const CodebookLosses l = codebook_losses(x, w, 1);
  EXPECT_EQ(l.codebook, 0.0);
  EXPECT_EQ(l.commitment, 0.0);
}

TEST_F(RvqTest, TiesKeepLowestIndex) {
  IdentityRvq id;
  std::vector<float> book(3 * 8, 0.0f);
  book[0 * 8] = 1.0f;
  book[1 * 8] = -1.0f;
  book[2 * 8] = 1.0f;
  id.books.push_back(book);
  const std::vector<double> target(8, 0.0);
  EXPECT_EQ(nearest_entry(target, id.view().codebooks[0]), 0u);
}

TEST_F(RvqTest, ResidualNormsNonIncreasing) {
  const FeatureMap x = oracle::random_matrix(16, 40, rng, 2.0);
  const QuantizeResult q = quantize(x, rvq, config.n_codebooks);
  for (std::size_t i = 1; i < q.residual_norms.size(); ++i)
    EXPECT_LE(q.residual_norms[i], q.residual_norms[i - 1] + 1e-9);
}

TEST_F(RvqTest, NearestEntryMatchesExhaustiveScan) {
  const FeatureMap x = oracle::random_matrix(16, 30, rng);
  const QuantizeResult q = quantize(x, rvq, config.n_codebooks);
  for (std::size_t t = 0; t < x.cols(); ++t) {
    std::vector<double> r = project(x, t);
    for (std::size_t i = 0; i < config.n_codebooks; ++i) {
      const std::size_t j = oracle::nearest(r, rvq.codebooks[i]);
      ASSERT_EQ(q.codes(i, t), j) << "layer " << i << " frame " << t;
      for (std::size_t c = 0; c < r.size(); ++c) r[c] -= rvq.codebooks[i](j, c);
    }
  }
}

TEST_F(RvqTest, MoreLayersNeverHurtPerFrame) {
  const FeatureMap x = oracle::random_matrix(16, 25, rng);
  for (std::size_t t = 0; t < x.cols(); ++t) {
    std::vector<double> r = project(x, t);
    double prev = 0.0;
    for (double v : r) prev += v * v;
    for (std::size_t i = 0; i < config.n_codebooks; ++i) {
      const std::size_t j = nearest_entry(r, rvq.codebooks[i]);
      double now = 0.0;
      for (std::size_t c = 0; c < r.size(); ++c) {
        r[c] -= rvq.codebooks[i](j, c);
        now += r[c] * r[c];
      }
      EXPECT_LE(now, prev + 1e-9);
      prev = now;
    }
  }
}

TEST_F(RvqTest, IdenticalFramesIdenticalCodes) {
  FeatureMap x = oracle::random_matrix(16, 4, rng);
  for (std::size_t r = 0; r < 16; ++r) x(r, 3) = x(r, 1);
  const QuantizeResult q = quantize(x, rvq, config.n_codebooks);
  for (std::size_t i = 0; i < config.n_codebooks; ++i) EXPECT_EQ(q.codes(i, 1), q.codes(i, 3));
}

TEST_F(RvqTest, DequantizeMatchesQuantizedExactly) {
  const FeatureMap x = oracle::random_matrix(16, 20, rng);
  for (std::size_t n : {1u, 5u, 12u}) {
    const QuantizeResult q = quantize(x, rvq, n);
    EXPECT_EQ(codes_to_features(q.codes, rvq), q.quantized);
  }
}

TEST_F(RvqTest, AllZeroCodesGiveEntryZeroSum) {
  const CodeGrid g(config.n_codebooks, 6);
  const FeatureMap f = codes_to_features(g, rvq);
  for (std::size_t t = 1; t < 6; ++t)
    for (std::size_t r = 0; r < 16; ++r) EXPECT_EQ(f(r, t), f(r, 0));
  // entry 0 is the null vector, so the map is the up-projection bias
  for (std::size_t r = 0; r < 16; ++r) EXPECT_FLOAT_EQ(f(r, 0), rvq.up_bias[r]);
}

TEST_F(RvqTest, CodesToFeaturesMatchesSumOfEntriesOracle) {
  CodeGrid g(config.n_codebooks, 9);
  for (std::uint32_t& c : g.codes) c = static_cast<std::uint32_t>(rng.below(config.codebook_size));
  const FeatureMap f = codes_to_features(g, rvq);
  oracle::Grid expect(16, std::vector<double>(9));
  for (std::size_t t = 0; t < 9; ++t) {
    std::vector<double> sum(rvq.code_dim(), 0.0);
    for (std::size_t i = 0; i < g.n_codebooks; ++i)
      for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += rvq.codebooks[i](g(i, t), c);
    for (std::size_t r = 0; r < 16; ++r) {
      double acc = rvq.up_bias[r];
      for (std::size_t c = 0; c < sum.size(); ++c) acc += double(rvq.up(r, c)) * sum[c];
      expect[r][t] = acc;
    }
  }
  EXPECT_LT(oracle::max_abs(expect, f), 1e-6);
}

TEST_F(RvqTest, OutOfRangeCodeIsCorrupt) {
  CodeGrid g(config.n_codebooks, 2);
  g(3, 1) = config.codebook_size;
  EXPECT_THROW(codes_to_features(g, rvq), CorruptStream);
}

TEST_F(RvqTest, LossesMatchDistanceOracle) {
  const FeatureMap x = oracle::random_matrix(16, 15, rng);
  const CodebookLosses l = codebook_losses(x, rvq, config.n_codebooks);
  EXPECT_GE(l.codebook, 0.0);
  EXPECT_GE(l.commitment, 0.0);
  double expect = 0.0;
  for (std::size_t i = 0; i < config.n_codebooks; ++i) {
    double layer = 0.0;
    for (std::size_t t = 0; t < x.cols(); ++t) {
      std::vector<double> r = project(x, t);
      for (std::size_t k = 0; k < i; ++k) {
        const std::size_t j = oracle::nearest(r, rvq.codebooks[k]);
        for (std::size_t c = 0; c < r.size(); ++c) r[c] -= rvq.codebooks[k](j, c);
      }
      const std::size_t j = oracle::nearest(r, rvq.codebooks[i]);
      for (std::size_t c = 0; c < r.size(); ++c) layer += std::pow(r[c] - rvq.codebooks[i](j, c), 2);
    }
    expect += layer / double(x.cols() * rvq.code_dim());
  }
  EXPECT_NEAR(l.codebook, expect, 1e-6);
  EXPECT_NEAR(l.commitment, expect, 1e-6);
}

TEST_F(RvqTest, ActiveLayerBounds) {
  const FeatureMap x = oracle::random_matrix(16, 3, rng);
  EXPECT_THROW(quantize(x, rvq, 0), InvalidArgument);
  EXPECT_THROW(quantize(x, rvq, 13), InvalidArgument);
  EXPECT_THROW(quantize(oracle::random_matrix(8, 3, rng), rvq, 1), ContractViolation);
}

TEST(Bitrate, TwelveByTenByFifty) {
  const ModelConfig c = preset("sunac");
  EXPECT_EQ(c.n_codebooks * c.bits_per_code() * static_cast<std::uint32_t>(c.token_rate()), 6000u);
}
