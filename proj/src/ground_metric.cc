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

#include "m3dn/ground_metric.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "m3dn/status.h"

namespace m3dn {

SimilarityKernel SimilarityKernel::FromMatrix(const Matrix& entries,
                                              bool is_reference) {
  Require(entries.rows() == entries.cols() && entries.rows() >= 1,
          ErrorCode::kDimensionMismatch, "kernel must be square");
  Require(entries.allFinite(), ErrorCode::kNotPsd, "kernel is not finite");
  Require(MaxAsymmetry(entries) <= 1e-9, ErrorCode::kNotPsd,
          "kernel is not symmetric");
  Matrix sym = 0.5 * (entries + entries.transpose());
  const double min_eig = MinEigenvalue(sym);
  Require(min_eig >= -1e-8, ErrorCode::kNotPsd,
          "kernel has eigenvalue " + std::to_string(min_eig));
  if (is_reference) {
    Require(min_eig > 0.0 && sym.llt().info() == Eigen::Success,
            ErrorCode::kSingularReference,
            "reference kernel must be positive definite");
  }
  return SimilarityKernel(std::move(sym), is_reference);
}

PlanAccumulator::PlanAccumulator(int label_count)
    : pbar_(Matrix::Zero(label_count, label_count)) {}

void PlanAccumulator::Add(const Matrix& p) {
  Require(p.rows() == pbar_.rows() && p.cols() == pbar_.cols(),
          ErrorCode::kDimensionMismatch,
          "plan is " + std::to_string(p.rows()) + "x" +
              std::to_string(p.cols()) + ", accumulator is " +
              std::to_string(pbar_.rows()));
  const int n = size();
  const Matrix w = p + p.transpose();
  for (int i = 0; i < n; ++i) {
    double degree = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      degree += w(i, k);
      pbar_(i, k) -= w(i, k);
    }
    pbar_(i, i) += degree;
  }
  ++sample_count_;
}

void PlanAccumulator::Add(const TransportPlan& plan) { Add(plan.entries()); }

void PlanAccumulator::Merge(const PlanAccumulator& other) {
  Require(other.size() == size(), ErrorCode::kDimensionMismatch,
          "accumulators differ in size");
  pbar_ += other.pbar_;
  sample_count_ += other.sample_count_;
}

Matrix PlanAccumulator::Normalized() const {
  Require(sample_count_ > 0, ErrorCode::kInvalidArgument,
          "accumulator holds no plans");
  return pbar_ / static_cast<double>(sample_count_);
}

PlanAccumulator AccumulatePbar(PlanAccumulator acc, const TransportPlan& plan) {
  acc.Add(plan);
  return acc;
}

CostMatrix CostFromKernel(const Matrix& s) {
  Require(s.rows() == s.cols(), ErrorCode::kDimensionMismatch,
          "kernel must be square");
  const Matrix sym = 0.5 * (s + s.transpose());
  const double min_eig = MinEigenvalue(sym);
  Require(min_eig >= -1e-6, ErrorCode::kNotPsd,
          "kernel has eigenvalue " + std::to_string(min_eig));
  const int n = static_cast<int>(sym.rows());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m(i, j) = i == j ? 0.0
                       : std::max(0.0, sym(i, i) + sym(j, j) - 2.0 * sym(i, j));
    }
  }
  return CostMatrix::FromMatrix(m);
}

CostMatrix CostFromKernel(const SimilarityKernel& s) {
  return CostFromKernel(s.entries());
}

double BurgDivergence(const Matrix& s, const Matrix& s0, double p) {
  Require(s.rows() == s0.rows() && s.cols() == s0.cols(),
          ErrorCode::kDimensionMismatch, "kernels differ in size");
  const Eigen::LLT<Matrix> ref(0.5 * (s0 + s0.transpose()));
  Require(ref.info() == Eigen::Success, ErrorCode::kSingularReference,
          "reference kernel is not positive definite");
  const Eigen::LLT<Matrix> arg(0.5 * (s + s.transpose()));
  Require(arg.info() == Eigen::Success,
          ErrorCode::kNonPositiveDefiniteArgument,
          "kernel is not positive definite");
  const double trace = ref.solve(s).trace();
  const double logdet_s = 2.0 * arg.matrixL().toDenseMatrix()
                                    .diagonal().array().log().sum();
  const double logdet_s0 = 2.0 * ref.matrixL().toDenseMatrix()
                                     .diagonal().array().log().sum();
  return trace - (logdet_s - logdet_s0) - p;
}

double BurgDivergence(const SimilarityKernel& s, const SimilarityKernel& s0,
                      double p) {
  return BurgDivergence(s.entries(), s0.entries(), p);
}

Matrix SolveKernel(const PlanAccumulator& acc, const SimilarityKernel& s0,
                   const KernelUpdateOptions& options) {
  Require(acc.size() == s0.size(), ErrorCode::kDimensionMismatch,
          "accumulator and reference differ in size");
  Require(options.lambda1 > 0.0, ErrorCode::kInvalidArgument,
          "lambda1 must be positive");
  const int n = s0.size();
  const Eigen::LLT<Matrix> ref(s0.entries());
  Require(ref.info() == Eigen::Success, ErrorCode::kSingularReference,
          "reference kernel is not positive definite");
  const Matrix s0_inv = ref.solve(Matrix::Identity(n, n));
  const Matrix pbar = acc.Normalized();

  Matrix system;
  double numerator = 1.0;
  if (options.rule == KernelUpdateRule::kStationary) {
    system = pbar + options.lambda1 * s0_inv;
    numerator = options.lambda1;
  } else {
    system = pbar + s0_inv - options.p * Matrix::Identity(n, n);
  }
  system = 0.5 * (system + system.transpose());
  Eigen::FullPivLU<Matrix> lu(system);
  const double pivot_floor = 1e-12 * std::max(1.0, system.cwiseAbs().maxCoeff());
  lu.setThreshold(pivot_floor);
  Require(lu.isInvertible(), ErrorCode::kSingularSystem,
          "kernel update system is singular; lambda1 is too small for the "
          "plan mass");
  Matrix s = numerator * lu.inverse();
  return 0.5 * (s + s.transpose());
}

SimilarityKernel UpdateKernel(const PlanAccumulator& acc,
                              const SimilarityKernel& s0,
                              const KernelUpdateOptions& options) {
  return PsdProject(SolveKernel(acc, s0, options));
}

double KernelObjective(const Matrix& normalized_pbar, const Matrix& s,
                       const Matrix& s0, double lambda1, double p) {
  return normalized_pbar.cwiseProduct(s).sum() +
         lambda1 * BurgDivergence(s, s0, p);
}

SimilarityKernel PsdProject(const Matrix& a) {
  Require(a.rows() == a.cols(), ErrorCode::kDimensionMismatch,
          "projection expects a square matrix");
  const Matrix sym = 0.5 * (a + a.transpose());
  const SymmetricEigen eig = JacobiEigen(sym);
  if (eig.values.minCoeff() >= 0.0) return SimilarityKernel::FromMatrix(sym);
  const Vector clamped = eig.values.cwiseMax(0.0);
  Matrix s = eig.vectors * clamped.asDiagonal() * eig.vectors.transpose();
  s = 0.5 * (s + s.transpose());
  return SimilarityKernel::FromMatrix(s);
}

SimilarityKernel InitReferenceKernel(
    const std::vector<std::vector<int>>& labels, double ridge) {
  Require(!labels.empty(), ErrorCode::kEmptyLabelSet,
          "reference kernel needs at least one labeled example");
  Require(ridge >= 0.0, ErrorCode::kInvalidArgument, "ridge must be >= 0");
  const int n = static_cast<int>(labels.front().size());
  Matrix gram = Matrix::Zero(n, n);
  for (const auto& y : labels) {
    Require(static_cast<int>(y.size()) == n, ErrorCode::kDimensionMismatch,
            "label vectors differ in length");
    for (int i = 0; i < n; ++i) {
      if (y[i] == 0) continue;
      for (int j = 0; j < n; ++j) gram(i, j) += y[i] * y[j];
    }
  }
  gram /= static_cast<double>(labels.size());
  gram.diagonal().array() += ridge;
  return SimilarityKernel::FromMatrix(gram, /*is_reference=*/true);
}

std::string MatrixToCsv(const Matrix& m,
                        const std::vector<std::string>& label_names) {
  Require(static_cast<int>(label_names.size()) == m.cols(),
          ErrorCode::kDimensionMismatch, "one label name per column expected");
  std::string out;
  for (size_t j = 0; j < label_names.size(); ++j) {
    if (j) out += ',';
    out += label_names[j];
  }
  out += '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Matrix MatrixFromCsv(const std::string& text,
                     std::vector<std::string>* label_names) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (names.empty()) {
      names = cells;
      continue;
    }
    Require(cells.size() == names.size(), ErrorCode::kParseError,
            "line " + std::to_string(line_no) + ": expected " +
                std::to_string(names.size()) + " values");
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": bad number '" + c +
                        "'");
      }
    }
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), names.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < names.size(); ++j) m(i, j) = rows[i][j];
  if (label_names) *label_names = names;
  return m;
}

}  // namespace m3dn
