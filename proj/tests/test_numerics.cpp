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

#include <cmath>
#include <limits>

#include "oracles.hpp"

using namespace sunac;

namespace {

struct ConvCase {
  std::vector<float> w, b;
  ConvWeights view(std::size_t c_out, std::size_t c_in, std::size_t k) const { return {c_out, c_in, k, w, b}; }
};

ConvCase random_conv(std::size_t n, std::size_t c_out, Rng& rng) {
  ConvCase c;
  for (std::size_t i = 0; i < n; ++i) c.w.push_back(static_cast<float>(rng.normal()));
  for (std::size_t i = 0; i < c_out; ++i) c.b.push_back(static_cast<float>(rng.normal()));
  return c;
}

TransformerLayerWeights tiny_layer(const WeightStore& store) { return bind_transformer(store, "dec.tf0", 2, 0); }

}  // namespace

TEST(Conv1d, IdentityKernel) {
  Rng rng(1);
  const Matrix x = oracle::random_matrix(3, 17, rng);
  std::vector<float> w(9, 0.0f);
  for (std::size_t c = 0; c < 3; ++c) w[c * 3 + c] = 1.0f;
  const Matrix y = conv1d(x, {3, 3, 1, w, {}});
  EXPECT_EQ(y, x);
}

TEST(Conv1d, SingleChannelMatchesSlidingDot) {
  Rng rng(2);
  const Matrix x = oracle::random_matrix(1, 10, rng);
  const ConvCase c = random_conv(3, 1, rng);
  const Matrix y = conv1d(x, c.view(1, 1, 3), {.padding = 1});
  ASSERT_EQ(y.cols(), 10u);
  EXPECT_LT(oracle::max_abs(oracle::conv1d(oracle::to_grid(x), c.w, c.b, 1, 3, 1, 1, 1), y), 1e-5);
}

TEST(Conv1d, StridedDilatedMatchesOracle) {
  Rng rng(3);
  for (std::size_t stride : {1u, 2u, 3u, 5u})
    for (std::size_t dil : {1u, 3u, 9u}) {
      const Matrix x = oracle::random_matrix(4, 61, rng);
      const ConvCase c = random_conv(5 * 4 * 7, 5, rng);
      const Conv1dOptions opt{.stride = stride, .padding = 3 * dil, .dilation = dil};
      const Matrix y = conv1d(x, c.view(5, 4, 7), opt);
      EXPECT_LT(oracle::max_abs(oracle::conv1d(oracle::to_grid(x), c.w, c.b, 5, 7, stride, 3 * dil, dil), y), 1e-4)
          << "stride " << stride << " dilation " << dil;
    }
}

TEST(Conv1d, TransposedMatchesScatterOracle) {
  Rng rng(4);
  for (std::size_t s : {2u, 4u, 5u, 8u}) {
    const Matrix x = oracle::random_matrix(3, 13, rng);
    const ConvCase c = random_conv(3 * 2 * 2 * s, 2, rng);
    const std::size_t pad = (s + 1) / 2;
    const Conv1dOptions opt{.stride = s, .padding = pad, .output_padding = 2 * pad - s, .transposed = true};
    const Matrix y = conv1d(x, c.view(2, 3, 2 * s), opt);
    EXPECT_EQ(y.cols(), 13 * s);
    EXPECT_LT(oracle::max_abs(oracle::conv_transposed(oracle::to_grid(x), c.w, c.b, 2, 2 * s, s, pad, 2 * pad - s), y),
              1e-4);
  }
}

TEST(Conv1d, CompositeStrideGivesFiftyFrames) {
  Matrix x(1, 16000, 0.5f);
  std::vector<float> one{1.0f};
  for (std::size_t s : {2u, 4u, 5u, 8u}) {
    std::vector<float> w(2 * s, 0.0f);
    w[0] = 1.0f;
    x = conv1d(x, {1, 1, 2 * s, w, {}}, {.stride = s, .padding = (s + 1) / 2});
  }
  EXPECT_EQ(x.cols(), 50u);
}

TEST(Conv1d, OutputLengthFormulas) {
  EXPECT_EQ(conv1d_output_length(10, 3, {.padding = 1}), 10u);
  EXPECT_EQ(conv1d_output_length(100, 4, {.stride = 2, .padding = 1}), 50u);
  EXPECT_EQ(conv1d_output_length(10, 4, {.stride = 2, .padding = 1, .transposed = true}), 20u);
}

// Transposed after strided restores the length whenever it divides (K = 2s, s >= 2 as in the codec).
TEST(Conv1d, TransposedRestoresLengthProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t s = 2 + rng.below(7);
    const std::size_t L = s * (1 + rng.below(20));
    const std::size_t pad = (s + 1) / 2;
    const Matrix x = oracle::random_matrix(1, L, rng);
    std::vector<float> w(2 * s, 0.1f);
    const Matrix down = conv1d(x, {1, 1, 2 * s, w, {}}, {.stride = s, .padding = pad});
    const Matrix up = conv1d(down, {1, 1, 2 * s, w, {}},
                             {.stride = s, .padding = pad, .output_padding = 2 * pad - s, .transposed = true});
    EXPECT_EQ(up.cols(), L) << "s=" << s << " L=" << L;
  }
}

TEST(Conv1d, Errors) {
  const Matrix x(2, 8);
  std::vector<float> w(6, 1.0f);
  EXPECT_THROW(conv1d(x, {1, 3, 2, w, {}}), ContractViolation);
  EXPECT_THROW(conv1d(x, {3, 2, 1, w, {}}, {.stride = 0}), InvalidArgument);
}

TEST(Transformer, SingleTokenFiniteAndShapePreserved) {
  const WeightStore store = init_weights(preset("sunac-tiny"), 7);
  Rng rng(6);
  const Matrix x = oracle::random_matrix(16, 1, rng);
  AttentionTrace trace;
  const Matrix y = transformer_block(x, tiny_layer(store), true, &trace);
  EXPECT_EQ(y.rows(), 16u);
  EXPECT_EQ(y.cols(), 1u);
  EXPECT_TRUE(y.all_finite());
  for (const Matrix& h : trace.heads) EXPECT_FLOAT_EQ(h(0, 0), 1.0f);
}

TEST(Transformer, IdenticalTokensAtDifferentPositionsDiffer) {
  const WeightStore store = init_weights(preset("sunac-tiny"), 7);
  Rng rng(7);
  Matrix x = oracle::random_matrix(16, 4, rng);
  for (std::size_t r = 0; r < 16; ++r) x(r, 1) = x(r, 0);
  const Matrix y = transformer_block(x, tiny_layer(store), true);
  double diff = 0.0;
  for (std::size_t r = 0; r < 16; ++r) diff = std::max(diff, std::abs(double(y(r, 0)) - y(r, 1)));
  EXPECT_GT(diff, 1e-6);

  // without rotary encoding the layer is permutation-equivariant, so the two columns agree
  const Matrix z = transformer_block(x, tiny_layer(store), false);
  for (std::size_t r = 0; r < 16; ++r) EXPECT_FLOAT_EQ(z(r, 0), z(r, 1));
}

TEST(Transformer, AttentionRowsSumToOne) {
  const WeightStore store = init_weights(preset("sunac-tiny"), 8);
  Rng rng(8);
  for (std::size_t T : {1u, 4u, 9u, 33u}) {
    const Matrix x = oracle::random_matrix(16, T, rng, 3.0);
    AttentionTrace trace;
    transformer_block(x, tiny_layer(store), true, &trace);
    ASSERT_EQ(trace.heads.size(), 2u);
    for (const Matrix& h : trace.heads)
      for (std::size_t i = 0; i < T; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < T; ++j) sum += h(i, j);
        EXPECT_NEAR(sum, 1.0, 1e-6);
      }
  }
}

// Hidden 8, 2 heads, random 8x4 input as in the attention example.
TEST(Transformer, EightByFourSoftmaxRows) {
  ModelConfig c = preset("sunac-tiny");
  c.latent_dim = c.transformer_hidden = 8;
  c.transformer_ffn = 12;
  const WeightStore store = init_weights(c, 9);
  Rng rng(9);
  AttentionTrace trace;
  transformer_block(oracle::random_matrix(8, 4, rng), bind_transformer(store, "dec.tf0", 2, 0), true, &trace);
  for (const Matrix& h : trace.heads)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(h(i, 0) + h(i, 1) + h(i, 2) + h(i, 3), 1.0, 1e-6);
}

TEST(Transformer, BitwiseDeterministic) {
  const WeightStore store = init_weights(preset("sunac-tiny"), 10);
  Rng rng(10);
  const Matrix x = oracle::random_matrix(16, 20, rng);
  EXPECT_EQ(transformer_block(x, tiny_layer(store)), transformer_block(x, tiny_layer(store)));
}

TEST(Transformer, NonFiniteReportsLayerIndex) {
  const WeightStore store = init_weights(preset("sunac-tiny"), 11);
  Matrix x(16, 3, 1.0f);
  x(2, 1) = std::numeric_limits<float>::infinity();
  TransformerLayerWeights w = bind_transformer(store, "dec.tf2", 2, 2);
  try {
    transformer_block(x, w);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.layer_index(), 2);
  }
}

TEST(Transformer, ShapeMismatch) {
  const WeightStore store = init_weights(preset("sunac-tiny"), 12);
  EXPECT_THROW(transformer_block(Matrix(8, 3), tiny_layer(store)), ContractViolation);
}

TEST(Rope, PreservesNormAndPositionZeroIsIdentity) {
  Rng rng(13);
  Matrix x = oracle::random_matrix(5, 16, rng);
  const Matrix before = x;
  apply_rope(x, 2);
  for (std::size_t c = 0; c < 16; ++c) EXPECT_FLOAT_EQ(x(0, c), before(0, c));
  for (std::size_t t = 0; t < 5; ++t) {
    double a = 0.0, b = 0.0;
    for (std::size_t c = 0; c < 16; ++c) {
      a += double(x(t, c)) * x(t, c);
      b += double(before(t, c)) * before(t, c);
    }
    EXPECT_NEAR(a, b, 1e-4 * b);
  }
}

TEST(Snake, ClosedForm) {
  Matrix x(1, 3);
  x(0, 0) = 0.0f;
  x(0, 1) = 1.0f;
  x(0, 2) = -2.0f;
  const std::vector<float> alpha{0.5f};
  const Matrix y = snake(x, alpha);
  for (std::size_t t = 0; t < 3; ++t) {
    const double v = x(0, t);
    EXPECT_NEAR(y(0, t), v + std::pow(std::sin(0.5 * v), 2) / (0.5 + 1e-9), 1e-6);
  }
}
