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

#ifndef M3DN_LINALG_H_
#define M3DN_LINALG_H_

#include <functional>

#include <Eigen/Dense>

namespace m3dn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Eigen-decomposition A = U diag(values) U^T of a symmetric matrix.
// Eigenvalues are sorted in ascending order; columns of `vectors` match.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
  int sweeps = 0;
};

// Cyclic Jacobi rotations. Throws kEigenFailure if the off-diagonal mass is
// not annihilated within `max_sweeps`.
SymmetricEigen JacobiEigen(const Matrix& a, int max_sweeps = 100);

double MinEigenvalue(const Matrix& a);

double MaxAsymmetry(const Matrix& a);

// Runs fn(i) for i in [0, n) across up to `threads` workers. Each index is
// executed exactly once; callers write results to index-owned slots so the
// outcome does not depend on scheduling.
void ParallelFor(int n, int threads, const std::function<void(int)>& fn);

// Resolves a requested worker count: values <= 0 mean all hardware threads.
int ResolveThreads(int requested);

}  // namespace m3dn

#endif  // M3DN_LINALG_H_
