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

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xmcm {

// Error taxonomy shared by every module.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct NonFiniteError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Dense vector of doubles. Entries are finite at construction.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim);
  Vector(std::initializer_list<double> values);
  explicit Vector(std::vector<double> values);
  explicit Vector(std::span<const double> values);

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> span() const { return values_; }
  std::span<double> span() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> values_;
};

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(values_).subspan(r * cols_, cols_);
  }

  std::span<const double> span() const { return values_; }
  std::span<double> span() { return values_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

/// Cosine similarity clamped to [-1, 1]. Throws DegenerateInputError when
/// either input has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

/// Numerically stable log(sum(exp(xs))).
double log_sum_exp(std::span<const double> xs);

Vector matvec(const Matrix& m, std::span<const double> x);

/// Seedable pseudo-random source.
///
/// The integer stream is std::mt19937_64 seeded with the 64-bit seed, which
/// the C++ standard pins bit-for-bit on every platform. All derived draws use
/// transforms defined here rather than the implementation-specific std::
/// distributions:
///   - uniform01: top 53 bits of one draw scaled by 2^-53, giving [0, 1).
///   - below(n): rejection sampling on the raw 64-bit draw; unbiased.
///   - gaussian: Box-Muller on two uniform01 draws (first draw mapped to
///     (0, 1] so the log is finite); one normal per two draws, no caching.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi);
  double gaussian();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [0, n) excluding `excluded`. Requires n >= 2.
  std::uint64_t choice(std::uint64_t n, std::uint64_t excluded);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Free-function spellings of the Rng draws.
inline double rng_uniform(Rng& r, double lo, double hi) { return r.uniform(lo, hi); }
inline double rng_gaussian(Rng& r) { return r.gaussian(); }
inline std::uint64_t rng_choice(Rng& r, std::uint64_t n, std::uint64_t excluded) {
  return r.choice(n, excluded);
}

namespace detail {
void require_same_dim(std::size_t a, std::size_t b, const char* what);
std::string dims_str(std::size_t a, std::size_t b);
}  // namespace detail

}  // namespace xmcm
