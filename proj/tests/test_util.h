/*
 * Copyright 2026 The M3DN Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef M3DN_TESTS_TEST_UTIL_H_
#define M3DN_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "m3dn/histogram.h"
#include "m3dn/linalg.h"
#include "m3dn/transport.h"

namespace m3dn::testing {

inline double RelErr(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Uniform draw on the simplex (Dirichlet(1)).
inline Histogram RandomHistogram(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = e(rng) + 1e-12;
  return MakeHistogram(v, HistogramMode::kNormalize);
}

// Symmetric, zero diagonal, off-diagonal entries uniform in [lo, 1].
inline Matrix RandomCostEntries(int n, std::mt19937_64& rng, double lo = 0.0) {
  std::uniform_real_distribution<double> u(lo, 1.0);
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m(i, j) = m(j, i) = u(rng);
  return m;
}

inline CostMatrix RandomCost(int n, std::mt19937_64& rng, double lo = 0.0) {
  return CostMatrix::FromMatrix(RandomCostEntries(n, rng, lo));
}

inline Matrix RandomGaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline Matrix RandomSymmetric(int n, std::mt19937_64& rng) {
  const Matrix a = RandomGaussian(n, n, rng);
  return 0.5 * (a + a.transpose());
}

// A^T A / n + shift I.
inline Matrix RandomPd(int n, std::mt19937_64& rng, double shift = 0.1) {
  const Matrix a = RandomGaussian(n, n, rng);
  return a.transpose() * a / n + shift * Matrix::Identity(n, n);
}

// Determinant by cofactor expansion; small matrices only.
inline double CofactorDet(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 1) return a(0, 0);
  double det = 0.0;
  for (int j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int c = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = a(r, c);
    }
    det += ((j % 2) ? -1.0 : 1.0) * a(0, j) * CofactorDet(minor);
  }
  return det;
}

// Minimum transport cost for integer marginals (total mass `total`) by
// enumerating every integer plan. Transportation polytopes with integer
// marginals have integral vertices, so this is the exact LP optimum.
inline double EnumeratedOt(const std::vector<int>& r, const std::vector<int>& c,
                           const Matrix& m) {
  const int n = static_cast<int>(r.size());
  std::vector<int> col_left = c;
  double best = 1e300;
  std::vector<int> row_left = r;
  // Fill cells in row-major order.
  auto rec = [&](auto&& self, int cell, double acc) -> void {
    if (acc >= best) return;
    if (cell == n * n) {
      best = acc;
      return;
    }
    const int i = cell / n;
    const int j = cell % n;
    if (j == n - 1) {
      const int q = row_left[i];
      if (q > col_left[j]) return;
      row_left[i] -= q;
      col_left[j] -= q;
      if (i < n - 1 || std::all_of(col_left.begin(), col_left.end(),
                                   [](int x) { return x == 0; }))
        self(self, cell + 1, acc + q * m(i, j));
      row_left[i] += q;
      col_left[j] += q;
      return;
    }
    const int hi = std::min(row_left[i], col_left[j]);
    for (int q = 0; q <= hi; ++q) {
      row_left[i] -= q;
      col_left[j] -= q;
      self(self, cell + 1, acc + q * m(i, j));
      row_left[i] += q;
      col_left[j] += q;
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

// Random composition of `total` into n nonnegative parts.
inline std::vector<int> RandomComposition(int n, int total,
                                          std::mt19937_64& rng) {
  std::vector<int> parts(n, 0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int k = 0; k < total; ++k) ++parts[pick(rng)];
  return parts;
}

inline Histogram FromCounts(const std::vector<int>& counts) {
  Vector v(static_cast<Eigen::Index>(counts.size()));
  for (size_t i = 0; i < counts.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = counts[i];
  return MakeHistogram(v, HistogramMode::kNormalize);
}

}  // namespace m3dn::testing

#endif  // M3DN_TESTS_TEST_UTIL_H_
