// Copyright 2026 The xmcm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <xmcm/encoder.hpp>

#include "support.hpp"

namespace xmcm {
namespace {

using testing::central_difference;
using testing::kFdTolerance;
using testing::relative_error;

LayerParams layer(Matrix w, Vector b, Activation a) { return LayerParams{std::move(w), std::move(b), a}; }

TEST(InitEncoder, DeterministicWithZeroBiases) {
  const EncoderSpec spec{{4}, {3, 2}};
  Rng a(7), b(7);
  const EncoderParams p = init_encoder(spec, a);
  const EncoderParams q = init_encoder(spec, b);
  EXPECT_EQ(p, q);
  ASSERT_EQ(p.layers().size(), 2u);
  EXPECT_EQ(p.layers()[0].activation, Activation::ReLU);
  EXPECT_EQ(p.layers()[1].activation, Activation::Identity);
  for (const auto& l : p.layers()) {
    for (double v : l.bias.span()) EXPECT_EQ(v, 0.0);
  }
}

TEST(InitEncoder, FanInScaledBounds) {
  Rng rng(3);
  const EncoderParams p = init_encoder(EncoderSpec{{2, 7}, {5, 4}}, rng);
  EXPECT_EQ(p.total_input_dim(), 9u);
  EXPECT_EQ(p.output_dim(), 4u);
  for (const auto& l : p.layers()) {
    const double bound = 1.0 / std::sqrt(double(l.in_dim()));
    for (double w : l.weight.span()) {
      EXPECT_LE(std::abs(w), bound);
    }
  }
}

TEST(InitEncoder, MonteCarloMeanIsZero) {
  double sum[2] = {0, 0};
  std::size_t count[2] = {0, 0};
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    Rng rng(seed);
    const EncoderParams p = init_encoder(EncoderSpec{{4}, {3, 2}}, rng);
    for (std::size_t li = 0; li < 2; ++li) {
      for (double w : p.layers()[li].weight.span()) sum[li] += w;
      count[li] += p.layers()[li].weight.size();
    }
  }
  EXPECT_NEAR(sum[0] / count[0], 0.0, 0.01);
  EXPECT_NEAR(sum[1] / count[1], 0.0, 0.01);
}

TEST(InitEncoder, RejectsBadSpecs) {
  Rng rng(0);
  EXPECT_THROW(init_encoder(EncoderSpec{{4}, {}}, rng), std::invalid_argument);
  EXPECT_THROW(init_encoder(EncoderSpec{{4}, {3, 0}}, rng), DimensionError);
}

TEST(EncoderParamsTest, RejectsBrokenLayerChain) {
  EXPECT_THROW(EncoderParams({2}, {layer(Matrix(2, 3), Vector(2), Activation::Identity)}), DimensionError);
  EXPECT_THROW(EncoderParams({2}, {layer(Matrix(2, 2), Vector(3), Activation::Identity)}), DimensionError);
  EXPECT_THROW(EncoderParams({2}, {}), std::invalid_argument);
}

TEST(Forward, IdentityNetwork) {
  const EncoderParams enc({2}, {layer(Matrix::identity(2), Vector(2), Activation::Identity)});
  EXPECT_EQ(encode(enc, Vector{1, 2}.span()), (Vector{1, 2}));
}

TEST(Forward, ReluClipsNegativePreActivation) {
  const EncoderParams enc({2}, {layer(Matrix{{1, -1}}, Vector(1), Activation::ReLU)});
  const ForwardResult r = forward(enc, Vector{0, 5}.span());
  EXPECT_EQ(r.embedding, (Vector{0}));
  EXPECT_EQ(r.tape.pre_activations[0][0], -5.0);
}

TEST(Forward, MusicTowerSeesConcatenatedBlocks) {
  // Identity layer on 3 inputs exposes exactly what the first layer saw.
  const EncoderParams enc({1, 2}, {layer(Matrix::identity(3), Vector(3), Activation::Identity)});
  EXPECT_EQ(encode(enc, Vector{1}.span(), Vector{2, 3}.span()), (Vector{1, 2, 3}));
}

TEST(Forward, DualInputEqualsConcatenatedSingleInput) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t lo = testing::random_size(gen, 1, 4), hi = testing::random_size(gen, 1, 4);
    Rng rng(trial);
    const EncoderParams dual = init_encoder(EncoderSpec{{lo, hi}, {6, 3}}, rng);
    const EncoderParams single({lo + hi}, dual.layers());
    const auto xl = testing::random_values(gen, lo), xh = testing::random_values(gen, hi);
    std::vector<double> cat(xl);
    cat.insert(cat.end(), xh.begin(), xh.end());
    EXPECT_EQ(encode(dual, xl, xh), encode(single, cat));
  }
}

TEST(Forward, DeterministicAndPure) {
  Rng rng(5);
  const EncoderParams enc = init_encoder(EncoderSpec{{5}, {4, 3}}, rng);
  const EncoderParams copy = enc;
  const Vector x{0.1, -0.4, 0.9, 0.3, -0.2};
  EXPECT_EQ(encode(enc, x.span()), encode(enc, x.span()));
  EXPECT_EQ(enc, copy);
}

TEST(Forward, RejectsWrongInputs) {
  Rng rng(5);
  const EncoderParams single = init_encoder(EncoderSpec{{3}, {2}}, rng);
  const EncoderParams dual = init_encoder(EncoderSpec{{1, 2}, {2}}, rng);
  EXPECT_THROW(forward(single, Vector{1, 2}.span()), DimensionError);
  EXPECT_THROW(forward(single, Vector{1}.span(), Vector{2, 3}.span()), DimensionError);
  EXPECT_THROW(forward(dual, Vector{1, 2, 3}.span()), DimensionError);
  EXPECT_THROW(forward(dual, Vector{1, 2}.span(), Vector{3}.span()), DimensionError);
}

TEST(Backward, LinearLayerWeightRowEqualsInput) {
  const Matrix w{{0.5, -1.0, 2.0}, {1.5, 0.25, -0.75}};
  const EncoderParams enc({3}, {layer(w, Vector(2), Activation::Identity)});
  const Vector x{3, -2, 7};
  const ForwardResult f = forward(enc, x.span());
  for (std::size_t k = 0; k < 2; ++k) {
    Vector e(2);
    e[k] = 1.0;
    const EncoderGradients g = backward(enc, f.tape, e.span());
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(g.d_weight[0](k, c), x[c]);
      EXPECT_EQ(g.d_weight[0](1 - k, c), 0.0);
    }
    EXPECT_EQ(g.d_bias[0], e);
  }
}

TEST(Backward, ZeroCotangentGivesZeroGradients) {
  Rng rng(8);
  const EncoderParams enc = init_encoder(EncoderSpec{{2, 3}, {4, 4, 2}}, rng);
  const ForwardResult f = forward(enc, Vector{1, -1}.span(), Vector{0.5, 2, -3}.span());
  const EncoderGradients g = backward(enc, f.tape, Vector(2).span());
  EXPECT_EQ(g.d_weight, EncoderGradients::zeros_like(enc).d_weight);
  EXPECT_EQ(g.d_bias, EncoderGradients::zeros_like(enc).d_bias);
  EXPECT_EQ(g.d_inputs, EncoderGradients::zeros_like(enc).d_inputs);
}

TEST(Backward, ReluSubgradientAtZeroIsZero) {
  const EncoderParams enc({2}, {layer(Matrix{{1, -1}}, Vector(1), Activation::ReLU)});
  const ForwardResult f = forward(enc, Vector{3, 3}.span());
  ASSERT_EQ(f.tape.pre_activations[0][0], 0.0);
  const EncoderGradients g = backward(enc, f.tape, Vector{1}.span());
  EXPECT_EQ(g.d_weight[0](0, 0), 0.0);
  EXPECT_EQ(g.d_bias[0][0], 0.0);
  EXPECT_EQ(g.d_inputs[0], (Vector{0, 0}));
}

TEST(Backward, RejectsStaleOrForeignTapes) {
  Rng rng(1);
  EncoderParams enc = init_encoder(EncoderSpec{{3}, {2}}, rng);
  const EncoderParams other = init_encoder(EncoderSpec{{3}, {2}}, rng);
  const ForwardResult f = forward(enc, Vector{1, 2, 3}.span());
  EXPECT_THROW(backward(other, f.tape, Vector{1, 1}.span()), StaleTapeError);
  EXPECT_THROW(backward(enc, f.tape, Vector{1, 1, 1}.span()), DimensionError);
  enc.mutable_layers()[0].bias[0] += 1.0;
  EXPECT_THROW(backward(enc, f.tape, Vector{1, 1}.span()), StaleTapeError);
}

// Random ReLU network of up to 3 layers; returns false when a pre-activation
// sits within 1e-4 of the kink so the caller can resample.
struct FdCase {
  std::vector<std::size_t> input_dims;
  std::vector<LayerParams> layers;
  std::vector<std::vector<double>> inputs;
  std::vector<double> cotangent;
};

FdCase random_case(std::mt19937_64& gen, bool dual) {
  FdCase c;
  c.input_dims = dual ? std::vector<std::size_t>{testing::random_size(gen, 1, 4), testing::random_size(gen, 1, 4)}
                      : std::vector<std::size_t>{testing::random_size(gen, 1, 8)};
  std::size_t in = 0;
  for (std::size_t d : c.input_dims) in += d;
  const std::size_t depth = 3;
  for (std::size_t li = 0; li < depth; ++li) {
    const std::size_t out = testing::random_size(gen, 1, 8);
    c.layers.push_back(layer(testing::random_matrix(gen, out, in), testing::random_vector(gen, out),
                             li + 1 == depth ? Activation::Identity : Activation::ReLU));
    in = out;
  }
  for (std::size_t d : c.input_dims) c.inputs.push_back(testing::random_values(gen, d));
  c.cotangent = testing::random_values(gen, in);
  return c;
}

Vector run(const EncoderParams& enc, const FdCase& c) {
  return c.inputs.size() == 1 ? encode(enc, c.inputs[0]) : encode(enc, c.inputs[0], c.inputs[1]);
}

bool near_kink(const FdCase& c) {
  const EncoderParams enc(c.input_dims, c.layers);
  const ForwardResult f = c.inputs.size() == 1 ? forward(enc, c.inputs[0]) : forward(enc, c.inputs[0], c.inputs[1]);
  for (std::size_t li = 0; li < c.layers.size(); ++li) {
    if (c.layers[li].activation != Activation::ReLU) continue;
    for (double p : f.tape.pre_activations[li]) {
      if (std::abs(p) < 1e-4) return true;
    }
  }
  return false;
}

class BackwardFiniteDifference : public ::testing::TestWithParam<int> {};

TEST_P(BackwardFiniteDifference, MatchesCentralDifferences) {
  std::mt19937_64 gen(1000 + GetParam());
  FdCase c = random_case(gen, GetParam() % 2 == 1);
  while (near_kink(c)) c = random_case(gen, GetParam() % 2 == 1);

  const auto objective = [&c] {
    const EncoderParams enc(c.input_dims, c.layers);
    const Vector y = run(enc, c);
    return dot(y.span(), c.cotangent);
  };
  const EncoderParams enc(c.input_dims, c.layers);
  const ForwardResult f = c.inputs.size() == 1 ? forward(enc, c.inputs[0]) : forward(enc, c.inputs[0], c.inputs[1]);
  const EncoderGradients g = backward(enc, f.tape, c.cotangent);

  for (std::size_t li = 0; li < c.layers.size(); ++li) {
    const auto dw = central_difference(c.layers[li].weight.span(), objective);
    EXPECT_LT(relative_error(g.d_weight[li].span(), dw), kFdTolerance) << "weight " << li;
    const auto db = central_difference(c.layers[li].bias.span(), objective);
    EXPECT_LT(relative_error(g.d_bias[li].span(), db), kFdTolerance) << "bias " << li;
  }
  for (std::size_t b = 0; b < c.inputs.size(); ++b) {
    const auto dx = central_difference(c.inputs[b], objective);
    EXPECT_LT(relative_error(g.d_inputs[b].span(), dx), kFdTolerance) << "input block " << b;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, BackwardFiniteDifference, ::testing::Range(0, 24));

TEST(EncoderGradientsTest, AddScaled) {
  Rng rng(2);
  const EncoderParams enc = init_encoder(EncoderSpec{{2}, {2}}, rng);
  EncoderGradients a = EncoderGradients::zeros_like(enc);
  EncoderGradients b = EncoderGradients::zeros_like(enc);
  b.d_weight[0](0, 1) = 2.0;
  b.d_bias[0][1] = -1.0;
  a.add_scaled(b, 0.5);
  a.add_scaled(b, 0.5);
  EXPECT_EQ(a.d_weight[0](0, 1), 2.0);
  EXPECT_EQ(a.d_bias[0][1], -1.0);
}

}  // namespace
}  // namespace xmcm
