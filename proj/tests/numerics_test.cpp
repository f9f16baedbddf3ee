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

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <xmcm/numerics.hpp>

#include "support.hpp"

namespace xmcm {
namespace {

using testing::naive_cosine;

TEST(Dot, HandExamples) {
  EXPECT_EQ(dot(Vector{1, 0}.span(), Vector{0, 1}.span()), 0.0);
  EXPECT_EQ(dot(Vector{2, 3}.span(), Vector{2, 3}.span()), 13.0);
  EXPECT_EQ(dot(Vector{0, 0, 0}.span(), Vector{4, -1, 7}.span()), 0.0);
}

TEST(Dot, RejectsDimensionMismatch) {
  EXPECT_THROW(dot(Vector{1, 2}.span(), Vector{1, 2, 3}.span()), DimensionError);
}

TEST(L2Norm, HandExamples) {
  EXPECT_EQ(l2_norm(Vector{3, 4}.span()), 5.0);
  EXPECT_EQ(l2_norm(Vector{0, 0, 0}.span()), 0.0);
  EXPECT_EQ(l2_norm(Vector{1}.span()), 1.0);
}

TEST(Cosine, HandExamples) {
  EXPECT_EQ(cosine(Vector{1, 0}.span(), Vector{1, 0}.span()), 1.0);
  EXPECT_NEAR(cosine(Vector{3, 4}.span(), Vector{4, 3}.span()), 0.96, 1e-15);
  EXPECT_EQ(cosine(Vector{1, 0}.span(), Vector{-1, 0}.span()), -1.0);
}

TEST(Cosine, ZeroNormIsAnError) {
  EXPECT_THROW(cosine(Vector{0, 0}.span(), Vector{1, 0}.span()), DegenerateInputError);
  EXPECT_THROW(cosine(Vector{1, 0}.span(), Vector{0, 0}.span()), DegenerateInputError);
  EXPECT_THROW(cosine(Vector{1, 0}.span(), Vector{1, 0, 0}.span()), DimensionError);
}

TEST(Cosine, BoundedSymmetricAndScaleFree) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = testing::random_size(gen, 1, 8);
    const Vector a = testing::random_vector(gen, n);
    const Vector b = testing::random_vector(gen, n);
    const double c = cosine(a.span(), b.span());
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
    EXPECT_EQ(c, cosine(b.span(), a.span()));
    EXPECT_NEAR(c, naive_cosine(a.span(), b.span()), 1e-12);
    for (double scale : {1e-3, 0.5, 3.0, 1e4}) {
      std::vector<double> scaled(a.values());
      for (double& v : scaled) v *= scale;
      EXPECT_NEAR(cosine(scaled, b.span()), c, 1e-12);
    }
  }
}

TEST(Cosine, ClampsRoundingExcursions) {
  // Parallel vectors whose unclamped ratio can land a hair above 1.
  const Vector a{0.1, 0.2, 0.3};
  const Vector b{0.30000000000000004, 0.6000000000000001, 0.9000000000000001};
  EXPECT_LE(cosine(a.span(), b.span()), 1.0);
}

TEST(LogSumExp, HandExamples) {
  EXPECT_NEAR(log_sum_exp(std::vector<double>{0, 0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(log_sum_exp(std::vector<double>{1000, 1000}), 1000 + std::log(2.0), 1e-12);
  EXPECT_EQ(log_sum_exp(std::vector<double>{5}), 5.0);
  EXPECT_TRUE(std::isfinite(log_sum_exp(std::vector<double>{-1000, -1000})));
}

TEST(LogSumExp, EmptyIsAnError) { EXPECT_THROW(log_sum_exp(std::vector<double>{}), std::invalid_argument); }

TEST(LogSumExp, ShiftInvariance) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto xs = testing::random_values(gen, testing::random_size(gen, 1, 10), -5, 5);
    const double c = testing::random_values(gen, 1, -5, 5)[0];
    std::vector<double> shifted(xs);
    for (double& v : shifted) v += c;
    EXPECT_NEAR(log_sum_exp(shifted), log_sum_exp(xs) + c, 1e-12);
  }
}

TEST(Matvec, Identity) {
  const Vector out = matvec(Matrix::identity(2), Vector{7, 9}.span());
  EXPECT_EQ(out, (Vector{7, 9}));
}

TEST(Matvec, RejectsDimensionMismatch) {
  EXPECT_THROW(matvec(Matrix::identity(2), Vector{1, 2, 3}.span()), DimensionError);
}

TEST(Matvec, AgreesBitwiseWithDoubleLoop) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix m = testing::random_matrix(gen, 8, 8);
    const Vector x = testing::random_vector(gen, 8);
    const Vector got = matvec(m, x.span());
    for (std::size_t r = 0; r < 8; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < 8; ++c) acc += m(r, c) * x[c];
      EXPECT_EQ(got[r], acc);
    }
  }
}

TEST(VectorType, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(Vector(std::vector<double>{}), DimensionError);
  EXPECT_THROW(Vector(std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}), NonFiniteError);
  EXPECT_THROW(Vector(std::vector<double>{std::numeric_limits<double>::infinity()}), NonFiniteError);
}

TEST(MatrixType, ShapeChecks) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);
}

TEST(RngTest, EqualSeedsGiveEqualStreams) {
  Rng a(2024), b(2024);
  bool same = true;
  for (int i = 0; i < 1000000; ++i) same &= a.next_u64() == b.next_u64();
  EXPECT_TRUE(same);
  Rng c(2025);
  EXPECT_NE(Rng(2024).next_u64(), c.next_u64());
}

TEST(RngTest, MixedDrawsAreReproducible) {
  Rng a(9), b(9);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(rng_uniform(a, -2, 3), rng_uniform(b, -2, 3));
    EXPECT_EQ(rng_gaussian(a), rng_gaussian(b));
    EXPECT_EQ(rng_choice(a, 7, 3), rng_choice(b, 7, 3));
  }
}

TEST(RngTest, UniformStaysInRange) {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng_uniform(r, -0.5, 0.25);
    ASSERT_GE(v, -0.5);
    ASSERT_LT(v, 0.25);
  }
}

TEST(RngTest, GaussianMoments) {
  Rng r(17);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng_gaussian(r);
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.02);
}

TEST(RngTest, ChoiceForcedOutcome) {
  Rng r(4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(rng_choice(r, 2, 0), 1u);
}

TEST(RngTest, ChoiceFrequencies) {
  Rng r(123);
  std::array<int, 5> counts{};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[rng_choice(r, 5, 2)];
  EXPECT_EQ(counts[2], 0);
  for (int k : {0, 1, 3, 4}) EXPECT_NEAR(counts[k] / double(draws), 0.25, 0.02) << "value " << k;
}

TEST(RngTest, ChoiceRejectsImpossibleRequests) {
  Rng r(0);
  EXPECT_THROW(rng_choice(r, 1, 0), std::invalid_argument);
  EXPECT_THROW(rng_choice(r, 3, 3), IndexError);
  EXPECT_THROW(r.below(0), std::invalid_argument);
}

}  // namespace
}  // namespace xmcm
