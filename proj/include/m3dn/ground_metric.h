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

#ifndef M3DN_GROUND_METRIC_H_
#define M3DN_GROUND_METRIC_H_

#include <string>
#include <vector>

#include "m3dn/linalg.h"
#include "m3dn/transport.h"

namespace m3dn {

// Symmetric PSD label kernel S (or the reference S0). The label embedding it
// represents is never materialized.
class SimilarityKernel {
 public:
  // Validates symmetry (1e-9) and PSD-ness (min eigenvalue >= -1e-8); a
  // reference kernel must also be positive definite. Throws kNotPsd or
  // kSingularReference.
  static SimilarityKernel FromMatrix(const Matrix& entries,
                                     bool is_reference = false);

  int size() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  bool is_reference() const { return is_reference_; }

 private:
  SimilarityKernel(Matrix entries, bool is_reference)
      : entries_(std::move(entries)), is_reference_(is_reference) {}

  Matrix entries_;
  bool is_reference_ = false;
};

// Sum of plan-derived gradients of <P, M(S)> with respect to S.
// Off-diagonal entries accumulate -(P_ij + P_ji); diagonal entries
// accumulate sum_{k != i} (P_ik + P_ki). Labeled plans and cross-modal
// pseudo-couplings use the same rule.
class PlanAccumulator {
 public:
  explicit PlanAccumulator(int label_count);

  void Add(const TransportPlan& plan);
  void Add(const Matrix& plan);
  void Merge(const PlanAccumulator& other);

  int size() const { return static_cast<int>(pbar_.rows()); }
  const Matrix& pbar() const { return pbar_; }
  int sample_count() const { return sample_count_; }

  // pbar / sample_count.
  Matrix Normalized() const;

 private:
  Matrix pbar_;
  int sample_count_ = 0;
};

// Functional form: returns `acc` with `plan` folded in.
PlanAccumulator AccumulatePbar(PlanAccumulator acc, const TransportPlan& plan);

// M_ij = S_ii + S_jj - 2 S_ij, clamped at zero. kNotPsd if the input has an
// eigenvalue below -1e-6.
CostMatrix CostFromKernel(const Matrix& s);
CostMatrix CostFromKernel(const SimilarityKernel& s);

// tr(S S0^-1) - log det(S S0^-1) - p.
// Errors: kSingularReference (S0 not positive definite),
// kNonPositiveDefiniteArgument (S not positive definite).
double BurgDivergence(const Matrix& s, const Matrix& s0, double p);
double BurgDivergence(const SimilarityKernel& s, const SimilarityKernel& s0,
                      double p);

enum class KernelUpdateRule {
  // S = lambda1 (Pbar + lambda1 S0^-1)^-1, the stationary point of
  // <Pbar, S> + lambda1 * Burg(S, S0).
  kStationary,
  // S = (Pbar + S0^-1 - p I)^-1, kept for comparison runs.
  kLiteral,
};

struct KernelUpdateOptions {
  double lambda1 = 1.0;
  KernelUpdateRule rule = KernelUpdateRule::kStationary;
  double p = 1.0;
};

// Closed-form kernel before PSD projection (symmetrized). Uses the
// count-normalized accumulator. Errors: kInvalidArgument (empty
// accumulator), kSingularReference, kSingularSystem.
Matrix SolveKernel(const PlanAccumulator& acc, const SimilarityKernel& s0,
                   const KernelUpdateOptions& options);

// SolveKernel followed by PsdProject.
SimilarityKernel UpdateKernel(const PlanAccumulator& acc,
                              const SimilarityKernel& s0,
                              const KernelUpdateOptions& options);

// <pbar_normalized, S> + lambda1 * Burg(S, S0, p): the fixed-plan kernel
// objective the closed form minimizes.
double KernelObjective(const Matrix& normalized_pbar, const Matrix& s,
                       const Matrix& s0, double lambda1, double p);

// Nearest PSD matrix in Frobenius norm: U max(sigma, 0) U^T of the
// symmetrized input. Throws kEigenFailure if Jacobi does not converge.
SimilarityKernel PsdProject(const Matrix& a);

// (Y^T Y) / N + ridge I over the given multi-hot label vectors.
// Errors: kEmptyLabelSet, kDimensionMismatch, kSingularReference.
SimilarityKernel InitReferenceKernel(
    const std::vector<std::vector<int>>& labels, double ridge = 1e-3);

// CSV with a header row of label names followed by row-major values.
std::string MatrixToCsv(const Matrix& m,
                        const std::vector<std::string>& label_names);
Matrix MatrixFromCsv(const std::string& text,
                     std::vector<std::string>* label_names = nullptr);

}  // namespace m3dn

#endif  // M3DN_GROUND_METRIC_H_
