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

// Test-only oracles shared by the unit and acceptance suites. Nothing here
// calls into the analytic gradient code it is used to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include <xmcm/numerics.hpp>

namespace xmcm::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-5;

/// Central finite differences of f with respect to every entry of `params`,
/// which f reads through the same storage.
inline std::vector<double> central_difference(std::span<double> params, const std::function<double()>& f,
                                              double h = kFdStep) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = f();
    params[i] = saved - h;
    const double down = f();
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Norm-wise relative error ||a - b|| / max(||a||, ||b||); 0 when both are 0.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

inline std::vector<double> random_values(std::mt19937_64& gen, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) v = dist(gen);
  return out;
}

inline Vector random_vector(std::mt19937_64& gen, std::size_t n) { return Vector(random_values(gen, n)); }

inline Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols) {
  return Matrix(rows, cols, random_values(gen, rows * cols));
}

inline std::size_t random_size(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
}

/// Cosine by the textbook formula, no clamping.
inline double naive_cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// Softmax cross-entropy over s * cosine logits with an optional target
/// logit override, written out without any library helpers.
inline double reference_angular(std::span<const double> x, std::size_t y, const Matrix& w, double s,
                         const std::function<double(double)>& target) {
  double max_logit = -1e300;
  std::vector<double> logits(w.rows());
  for (std::size_t j = 0; j < w.rows(); ++j) {
    const double c = naive_cosine(x, w.row(j));
    logits[j] = j == y ? target(c) : s * c;
    max_logit = std::max(max_logit, logits[j]);
  }
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - max_logit);
  return max_logit + std::log(sum) - logits[y];
}

/// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("xmcm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace xmcm::testing
