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

#include "xmcm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace xmcm {

namespace detail {

std::string dims_str(std::size_t a, std::size_t b) {
  return std::to_string(a) + " vs " + std::to_string(b);
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch " + dims_str(a, b));
  }
}

}  // namespace detail

namespace {

bool finite_range(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> xs, const char* what) {
  if (!finite_range(xs)) {
    throw NonFiniteError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

Vector::Vector(std::size_t dim) : values_(dim, 0.0) {
  if (dim == 0) throw DimensionError("Vector: dimension must be positive");
}

Vector::Vector(std::initializer_list<double> values) : Vector(std::vector<double>(values)) {}

Vector::Vector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DimensionError("Vector: dimension must be positive");
  require_finite(values_, "Vector");
}

Vector::Vector(std::span<const double> values)
    : Vector(std::vector<double>(values.begin(), values.end())) {}

bool Vector::all_finite() const { return finite_range(values_); }

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw DimensionError("Matrix: dimensions must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) throw DimensionError("Matrix: dimensions must be positive");
  detail::require_same_dim(values_.size(), rows * cols, "Matrix");
  require_finite(values_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  if (rows_ == 0 || cols_ == 0) throw DimensionError("Matrix: dimensions must be positive");
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    detail::require_same_dim(r.size(), cols_, "Matrix row");
    values_.insert(values_.end(), r.begin(), r.end());
  }
  require_finite(values_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const { return finite_range(values_); }

double dot(std::span<const double> a, std::span<const double> b) {
  detail::require_same_dim(a.size(), b.size(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double l2_norm(std::span<const double> a) {
  double sum = 0.0;
  for (double v : a) sum += v * v;
  return std::sqrt(sum);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  detail::require_same_dim(a.size(), b.size(), "cosine");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw DegenerateInputError("cosine: zero-norm input");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - m);
  return m + std::log(sum);
}

Vector matvec(const Matrix& m, std::span<const double> x) {
  detail::require_same_dim(m.cols(), x.size(), "matvec");
  Vector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double sum = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) sum += row[c] * x[c];
    out[r] = sum;
  }
  return out;
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("Rng::uniform: lo must not exceed hi");
  return lo + (hi - lo) * uniform01();
}

double Rng::gaussian() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  // 2^64 mod n; draws below it are rejected so the accepted range is a
  // multiple of n.
  const std::uint64_t threshold = (0 - n) % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x < threshold);
  return x % n;
}

std::uint64_t Rng::choice(std::uint64_t n, std::uint64_t excluded) {
  if (n < 2) throw std::invalid_argument("Rng::choice: need at least two candidates to exclude one");
  if (excluded >= n) throw IndexError("Rng::choice: excluded index out of range");
  const std::uint64_t pick = below(n - 1);
  return pick >= excluded ? pick + 1 : pick;
}

}  // namespace xmcm
