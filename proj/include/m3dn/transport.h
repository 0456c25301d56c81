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

#ifndef M3DN_TRANSPORT_H_
#define M3DN_TRANSPORT_H_

#include <cstdint>
#include <utility>

#include "m3dn/histogram.h"
#include "m3dn/linalg.h"

namespace m3dn {

// An L x L ground metric: nonnegative, symmetric (1e-9) and zero on the
// diagonal. The diagonal is stored as exact zeros.
class CostMatrix {
 public:
  // Validates `entries`; throws kInvalidArgument describing the violated
  // invariant.
  static CostMatrix FromMatrix(const Matrix& entries);

  int size() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  explicit CostMatrix(Matrix entries) : entries_(std::move(entries)) {}
  Matrix entries_;
};

// A nonnegative coupling together with the marginals it was built for.
// Approximate (Sinkhorn) plans satisfy the marginals only up to the solver
// tolerance; MarginalResidual() reports the l1 error.
class TransportPlan {
 public:
  TransportPlan(Matrix entries, Histogram row_marginal,
                Histogram col_marginal);

  int size() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }
  const Histogram& row_marginal() const { return row_marginal_; }
  const Histogram& col_marginal() const { return col_marginal_; }

  double MarginalResidual() const;
  int NonzeroCount(double threshold = 0.0) const;

 private:
  Matrix entries_;
  Histogram row_marginal_;
  Histogram col_marginal_;
};

struct SinkhornOptions {
  int max_iter = 1000;
  double tol = 1e-6;
};

// Scaling vectors of a Sinkhorn solve: P = diag(u) K diag(v) with
// K = exp(-lambda * M - 1). The duals are alpha = log(u) / lambda and
// beta = log(v) / lambda.
struct SinkhornState {
  Vector u;
  Vector v;
  Matrix kernel_k;
  double lambda = 0.0;
  int iterations_used = 0;
  bool converged = false;
  double marginal_error = 0.0;
};

struct SinkhornResult {
  TransportPlan plan;
  SinkhornState state;
};

// Sinkhorn-Knopp matrix scaling. Stops when the l1 error of both marginals
// is <= options.tol or after options.max_iter sweeps.
// Errors: kDimensionMismatch, kInvalidArgument (lambda <= 0),
// kNumericalUnderflow (a scaling entry became non-finite or zero).
SinkhornResult SinkhornPlan(const Histogram& r, const Histogram& c,
                            const CostMatrix& m, double lambda,
                            const SinkhornOptions& options = {});

// <P^lambda, M> for the Sinkhorn plan.
double SinkhornDistance(const Histogram& r, const Histogram& c,
                        const CostMatrix& m, double lambda,
                        const SinkhornOptions& options = {});

// Shannon entropy of the flattened plan with 0 log 0 = 0.
double Entropy(const TransportPlan& plan);

// <P, M> - H(P) / lambda: the entropic objective minimized by SinkhornPlan.
// OtSubgradient is its exact gradient with respect to the row marginal.
double EntropicObjective(const TransportPlan& plan, const CostMatrix& m,
                         double lambda);

double TransportCost(const TransportPlan& plan, const CostMatrix& m);

// Centered row dual log(u)/lambda - mean(log u)/lambda. Sums to zero.
// `pred` must be strictly positive.
Vector OtSubgradient(const Histogram& pred, const Histogram& target,
                     const CostMatrix& m, double lambda,
                     const SinkhornOptions& options = {});

// Same quantity from an already solved state.
Vector CenteredDual(const SinkhornState& state);

struct ExactOtResult {
  TransportPlan plan;
  double cost = 0.0;
  int pivots = 0;
};

// Dense transportation simplex (north-west corner start, Bland's rule).
// Meant as a test oracle; requires L <= 16.
ExactOtResult ExactOt(const Histogram& r, const Histogram& c,
                      const CostMatrix& m);

struct MetricAxiomReport {
  bool nonnegativity = true;
  bool symmetry = true;
  bool zero_diagonal = true;
  int triangle_violations = 0;
  // Triangle violations of the exact OT distance on sampled histogram
  // triples (only evaluated when sample_count > 0).
  int sampled_histograms = 0;
  int histogram_triangle_violations = 0;

  bool AllPass() const {
    return nonnegativity && symmetry && zero_diagonal &&
           triangle_violations == 0 && histogram_triangle_violations == 0;
  }
};

// Exhaustive check of M_ik <= M_ij + M_jk over all triples (slack 1e-9),
// plus `sample_count` random histogram triples checked against the exact OT
// distance induced by M.
MetricAxiomReport CheckMetricAxioms(const Matrix& m, int sample_count,
                                    std::uint64_t seed);

// Elementwise square root; turns a squared-distance cost into the pseudo-
// metric it was derived from.
Matrix ElementwiseSqrt(const CostMatrix& m);

}  // namespace m3dn

#endif  // M3DN_TRANSPORT_H_
