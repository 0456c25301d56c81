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

// Exact optimal transport by the transportation simplex (MODI) method.
//
// The basis is a spanning tree of the bipartite row/column graph with
// exactly 2L - 1 cells (degenerate zero cells included). Each pivot computes
// potentials on the tree, picks the first cell in row-major order with a
// negative reduced cost (Bland), and pushes mass around the unique cycle the
// entering cell closes. Ties for the leaving cell go to the lowest row-major
// index.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "m3dn/status.h"
#include "m3dn/transport.h"

namespace m3dn {
namespace {

constexpr int kMaxOracleSize = 16;

struct Cell {
  int row;
  int col;
};

class TransportationSimplex {
 public:
  TransportationSimplex(const Vector& supply, const Vector& demand,
                        const Matrix& cost)
      : n_(static_cast<int>(supply.size())),
        cost_(cost),
        flow_(Matrix::Zero(n_, n_)),
        basic_(n_, std::vector<bool>(n_, false)) {
    NorthWestCorner(supply, demand);
  }

  // Returns false if the pivot budget is exhausted.
  bool Solve(int max_pivots) {
    for (pivots_ = 0; pivots_ < max_pivots; ++pivots_) {
      ComputePotentials();
      const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
      Cell entering{-1, -1};
      for (int i = 0; i < n_ && entering.row < 0; ++i) {
        for (int j = 0; j < n_; ++j) {
          if (basic_[i][j]) continue;
          if (cost_(i, j) - row_pot_[i] - col_pot_[j] < -1e-12 * scale) {
            entering = {i, j};
            break;
          }
        }
      }
      if (entering.row < 0) return true;
      Pivot(entering);
    }
    return false;
  }

  const Matrix& flow() const { return flow_; }
  int pivots() const { return pivots_; }

 private:
  void NorthWestCorner(Vector supply, Vector demand) {
    int i = 0;
    int j = 0;
    while (true) {
      const double q = std::min(supply(i), demand(j));
      flow_(i, j) = std::max(q, 0.0);
      basic_[i][j] = true;
      supply(i) -= q;
      demand(j) -= q;
      if (i == n_ - 1 && j == n_ - 1) break;
      if (i == n_ - 1) {
        ++j;
      } else if (j == n_ - 1) {
        ++i;
      } else if (supply(i) <= demand(j)) {
        // Degenerate ties advance only the row, leaving a zero basic cell.
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Node ids: rows are [0, n), columns are [n, 2n).
  std::vector<std::vector<int>> Adjacency() const {
    std::vector<std::vector<int>> adj(2 * n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (basic_[i][j]) {
          adj[i].push_back(n_ + j);
          adj[n_ + j].push_back(i);
        }
    return adj;
  }

  void ComputePotentials() {
    row_pot_.assign(n_, 0.0);
    col_pot_.assign(n_, 0.0);
    const auto adj = Adjacency();
    std::vector<bool> seen(2 * n_, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    while (!frontier.empty()) {
      const int node = frontier.front();
      frontier.pop();
      for (int next : adj[node]) {
        if (seen[next]) continue;
        seen[next] = true;
        if (node < n_) {
          col_pot_[next - n_] = cost_(node, next - n_) - row_pot_[node];
        } else {
          row_pot_[next] = cost_(next, node - n_) - col_pot_[node - n_];
        }
        frontier.push(next);
      }
    }
    for (bool s : seen)
      Require(s, ErrorCode::kDegenerateBasis, "basis is not a spanning tree");
  }

  // Tree path from row node `from` to column node `to`, as basic cells.
  std::vector<Cell> TreePath(int from, int to) const {
    const auto adj = Adjacency();
    std::vector<int> parent(2 * n_, -1);
    std::vector<bool> seen(2 * n_, false);
    std::queue<int> frontier;
    frontier.push(from);
    seen[from] = true;
    while (!frontier.empty() && !seen[to]) {
      const int node = frontier.front();
      frontier.pop();
      for (int next : adj[node]) {
        if (seen[next]) continue;
        seen[next] = true;
        parent[next] = node;
        frontier.push(next);
      }
    }
    Require(seen[to], ErrorCode::kDegenerateBasis,
            "entering cell does not close a cycle");
    std::vector<Cell> path;
    for (int node = to; node != from; node = parent[node]) {
      const int prev = parent[node];
      if (prev < n_) {
        path.push_back({prev, node - n_});
      } else {
        path.push_back({node, prev - n_});
      }
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  void Pivot(Cell entering) {
    // Path e1..ek from the entering row to the entering column; the cycle
    // alternates +entering, -e1, +e2, ..., -ek.
    const std::vector<Cell> path = TreePath(entering.row, n_ + entering.col);
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    auto index = [this](Cell c) { return c.row * n_ + c.col; };
    for (size_t k = 0; k < path.size(); k += 2) {
      const double x = flow_(path[k].row, path[k].col);
      if (x < theta ||
          (x == theta && index(path[k]) < index(path[leave]))) {
        theta = x;
        leave = static_cast<int>(k);
      }
    }
    for (size_t k = 0; k < path.size(); ++k) {
      double& x = flow_(path[k].row, path[k].col);
      x = (k % 2 == 0) ? std::max(0.0, x - theta) : x + theta;
    }
    const Cell out = path[leave];
    flow_(out.row, out.col) = 0.0;
    basic_[out.row][out.col] = false;
    flow_(entering.row, entering.col) = theta;
    basic_[entering.row][entering.col] = true;
  }

  int n_;
  const Matrix& cost_;
  Matrix flow_;
  std::vector<std::vector<bool>> basic_;
  std::vector<double> row_pot_;
  std::vector<double> col_pot_;
  int pivots_ = 0;
};

}  // namespace

ExactOtResult ExactOt(const Histogram& r, const Histogram& c,
                      const CostMatrix& m) {
  Require(r.size() == c.size() && r.size() == m.size(),
          ErrorCode::kDimensionMismatch, "exact OT inputs differ in size");
  const int n = r.size();
  Require(n <= kMaxOracleSize, ErrorCode::kInvalidArgument,
          "exact OT oracle supports L <= 16, got " + std::to_string(n));
  const int budget = 50 * n * n * n + 100;

  Vector supply = r.AsVector();
  Vector demand = c.AsVector();
  TransportationSimplex simplex(supply, demand, m.entries());
  bool solved = simplex.Solve(budget);
  Matrix flow = simplex.flow();
  int pivots = simplex.pivots();
  if (!solved) {
    // Perturb supplies to break degenerate ties, then solve again.
    const double eps = 1e-12;
    supply.array() += eps;
    demand(n - 1) += n * eps;
    TransportationSimplex perturbed(supply, demand, m.entries());
    Require(perturbed.Solve(budget), ErrorCode::kDegenerateBasis,
            "transportation simplex did not terminate");
    flow = perturbed.flow();
    pivots += perturbed.pivots();
  }
  ExactOtResult result{TransportPlan(flow, r, c), 0.0, pivots};
  result.cost = std::max(0.0, flow.cwiseProduct(m.entries()).sum());
  return result;
}

}  // namespace m3dn
