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

#include "m3dn/transport.h"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "m3dn/status.h"

namespace m3dn {

CostMatrix CostMatrix::FromMatrix(const Matrix& entries) {
  Require(entries.rows() == entries.cols() && entries.rows() >= 2,
          ErrorCode::kInvalidArgument,
          "cost matrix must be square with L >= 2");
  Require(entries.allFinite(), ErrorCode::kInvalidArgument,
          "cost matrix has non-finite entries");
  const int n = static_cast<int>(entries.rows());
  Matrix m = entries;
  for (int i = 0; i < n; ++i) {
    Require(std::abs(m(i, i)) <= 1e-9, ErrorCode::kInvalidArgument,
            "cost matrix diagonal entry " + std::to_string(i) +
                " is nonzero");
    m(i, i) = 0.0;
    for (int j = 0; j < n; ++j) {
      Require(m(i, j) >= 0.0, ErrorCode::kInvalidArgument,
              "cost matrix entry (" + std::to_string(i) + "," +
                  std::to_string(j) + ") is negative");
      Require(std::abs(m(i, j) - m(j, i)) <= 1e-9, ErrorCode::kInvalidArgument,
              "cost matrix is not symmetric at (" + std::to_string(i) + "," +
                  std::to_string(j) + ")");
    }
  }
  return CostMatrix(std::move(m));
}

TransportPlan::TransportPlan(Matrix entries, Histogram row_marginal,
                             Histogram col_marginal)
    : entries_(std::move(entries)),
      row_marginal_(std::move(row_marginal)),
      col_marginal_(std::move(col_marginal)) {
  Require(entries_.rows() == row_marginal_.size() &&
              entries_.cols() == col_marginal_.size(),
          ErrorCode::kDimensionMismatch,
          "plan shape does not match its marginals");
  Require((entries_.array() >= 0.0).all(), ErrorCode::kInvalidArgument,
          "transport plan has negative entries");
}

double TransportPlan::MarginalResidual() const {
  const Vector rows = entries_.rowwise().sum();
  const Vector cols = entries_.colwise().sum().transpose();
  return (rows - row_marginal_.AsVector()).lpNorm<1>() +
         (cols - col_marginal_.AsVector()).lpNorm<1>();
}

int TransportPlan::NonzeroCount(double threshold) const {
  return static_cast<int>((entries_.array() > threshold).count());
}

namespace {

void CheckDimensions(const Histogram& r, const Histogram& c,
                     const CostMatrix& m) {
  Require(r.size() == c.size() && r.size() == m.size(),
          ErrorCode::kDimensionMismatch,
          "histograms have sizes " + std::to_string(r.size()) + " and " +
              std::to_string(c.size()) + ", cost matrix " +
              std::to_string(m.size()));
}

}  // namespace

SinkhornResult SinkhornPlan(const Histogram& r, const Histogram& c,
                            const CostMatrix& m, double lambda,
                            const SinkhornOptions& options) {
  CheckDimensions(r, c, m);
  Require(lambda > 0.0 && std::isfinite(lambda), ErrorCode::kInvalidArgument,
          "lambda must be positive");
  const int n = r.size();
  const Vector rv = r.AsVector();
  const Vector cv = c.AsVector();

  SinkhornState state;
  state.lambda = lambda;
  state.kernel_k = (-lambda * m.entries().array() - 1.0).exp().matrix();
  const Matrix& k = state.kernel_k;

  Vector u = Vector::Ones(n);
  Vector v = Vector::Zero(n);
  Vector ktu = k.transpose() * u;
  int iter = 0;
  double error = std::numeric_limits<double>::infinity();
  for (; iter < options.max_iter; ++iter) {
    v = cv.cwiseQuotient(ktu);
    const Vector kv = k * v;
    u = rv.cwiseQuotient(kv);

    // Scaling-domain guard: rescale u (and v inversely) so the plan
    // diag(u) K diag(v) is unchanged while entries stay representable.
    const double umax = u.maxCoeff();
    if (std::isfinite(umax) && umax > 0.0 &&
        (umax > 1e300 || u.minCoeff() < 1e-300)) {
      u /= umax;
      v *= umax;
    }
    if (!u.allFinite() || !v.allFinite()) {
      throw Error(ErrorCode::kNumericalUnderflow,
                  "Sinkhorn scaling became non-finite at iteration " +
                      std::to_string(iter + 1) +
                      "; lambda is too large for the cost scale");
    }

    ktu = k.transpose() * u;
    // Row marginals are exact after the u half-step; only columns drift.
    const Vector rows = u.cwiseProduct(k * v);
    const Vector cols = v.cwiseProduct(ktu);
    error = (rows - rv).lpNorm<1>() + (cols - cv).lpNorm<1>();
    if (error <= options.tol) {
      ++iter;
      break;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (rv(i) > 0.0 && !(u(i) > 0.0)) {
      throw Error(ErrorCode::kNumericalUnderflow,
                  "Sinkhorn scaling underflowed to zero; lambda is too large "
                  "for the cost scale");
    }
  }

  state.u = u;
  state.v = v;
  state.iterations_used = iter;
  state.marginal_error = error;
  state.converged = error <= options.tol;

  Matrix p = u.asDiagonal() * k * v.asDiagonal();
  return SinkhornResult{TransportPlan(std::move(p), r, c), std::move(state)};
}

double TransportCost(const TransportPlan& plan, const CostMatrix& m) {
  Require(plan.size() == m.size(), ErrorCode::kDimensionMismatch,
          "plan and cost matrix sizes differ");
  return plan.entries().cwiseProduct(m.entries()).sum();
}

double SinkhornDistance(const Histogram& r, const Histogram& c,
                        const CostMatrix& m, double lambda,
                        const SinkhornOptions& options) {
  const SinkhornResult result = SinkhornPlan(r, c, m, lambda, options);
  return std::max(0.0, TransportCost(result.plan, m));
}

double Entropy(const TransportPlan& plan) {
  double h = 0.0;
  const Matrix& p = plan.entries();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double x = p.data()[i];
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

double EntropicObjective(const TransportPlan& plan, const CostMatrix& m,
                         double lambda) {
  return TransportCost(plan, m) - Entropy(plan) / lambda;
}

Vector CenteredDual(const SinkhornState& state) {
  const Vector log_u = state.u.array().log().matrix();
  Require(log_u.allFinite(), ErrorCode::kNumericalUnderflow,
          "row scaling has a zero entry; prediction must be strictly positive");
  const double mean = log_u.mean();
  Vector g = (log_u.array() - mean).matrix() / state.lambda;
  // Remove the residual rounding so the sum is zero to machine precision.
  g.array() -= g.mean();
  return g;
}

Vector OtSubgradient(const Histogram& pred, const Histogram& target,
                     const CostMatrix& m, double lambda,
                     const SinkhornOptions& options) {
  CheckDimensions(pred, target, m);
  Require(pred.StrictlyPositive(), ErrorCode::kInvalidArgument,
          "prediction histogram must be strictly positive");
  return CenteredDual(SinkhornPlan(pred, target, m, lambda, options).state);
}

Matrix ElementwiseSqrt(const CostMatrix& m) {
  return m.entries().array().sqrt().matrix();
}

MetricAxiomReport CheckMetricAxioms(const Matrix& m, int sample_count,
                                    std::uint64_t seed) {
  Require(m.rows() == m.cols(), ErrorCode::kDimensionMismatch,
          "metric check expects a square matrix");
  const int n = static_cast<int>(m.rows());
  constexpr double kSlack = 1e-9;
  MetricAxiomReport report;
  for (int i = 0; i < n; ++i) {
    if (std::abs(m(i, i)) > kSlack) report.zero_diagonal = false;
    for (int j = 0; j < n; ++j) {
      if (m(i, j) < -kSlack) report.nonnegativity = false;
      if (std::abs(m(i, j) - m(j, i)) > kSlack) report.symmetry = false;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (m(i, k) > m(i, j) + m(j, k) + kSlack) ++report.triangle_violations;

  if (sample_count > 0 && report.nonnegativity && report.symmetry &&
      report.zero_diagonal && n >= 2 && n <= 16) {
    const CostMatrix cost = CostMatrix::FromMatrix(0.5 * (m + m.transpose()));
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    auto draw = [&] {
      std::vector<double> raw(n);
      for (double& x : raw) x = expo(rng);
      return MakeHistogram(raw, HistogramMode::kNormalize);
    };
    for (int s = 0; s < sample_count; ++s) {
      const Histogram a = draw();
      const Histogram b = draw();
      const Histogram c = draw();
      const double ab = ExactOt(a, b, cost).cost;
      const double bc = ExactOt(b, c, cost).cost;
      const double ac = ExactOt(a, c, cost).cost;
      ++report.sampled_histograms;
      if (ac > ab + bc + 1e-9) ++report.histogram_triangle_violations;
    }
  }
  return report;
}

}  // namespace m3dn
