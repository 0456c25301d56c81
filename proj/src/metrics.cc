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

#include "m3dn/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "m3dn/status.h"

namespace m3dn {
namespace {

struct Counts {
  long greater = 0;
  long equal = 0;  // excluding the query itself when it is in the set
};

// Counts entries of the ascending `sorted` that exceed / equal `x`.
Counts CountAgainst(const std::vector<double>& sorted, double x) {
  const auto [lo, hi] = std::equal_range(sorted.begin(), sorted.end(), x);
  return {static_cast<long>(sorted.end() - hi), static_cast<long>(hi - lo)};
}

std::vector<double> SortedWhere(const EvalPair& p, int want) {
  std::vector<double> out;
  for (size_t i = 0; i < p.scores.size(); ++i)
    if (p.truth[i] == want) out.push_back(p.scores[i]);
  std::sort(out.begin(), out.end());
  return out;
}

Criterion Mean(double sum, int used, int skipped) {
  Criterion c;
  c.used = used;
  c.skipped = skipped;
  if (used > 0) c.value = sum / used;
  return c;
}

}  // namespace

void ValidatePairs(const std::vector<EvalPair>& pairs) {
  Require(!pairs.empty(), ErrorCode::kEmptyInput, "no examples to evaluate");
  const size_t n = pairs.front().scores.size();
  for (size_t k = 0; k < pairs.size(); ++k) {
    const EvalPair& p = pairs[k];
    Require(p.scores.size() == n && p.truth.size() == n && n >= 1,
            ErrorCode::kInvalidArgument,
            "example " + std::to_string(k) + " has inconsistent length");
    for (size_t i = 0; i < n; ++i) {
      Require(std::isfinite(p.scores[i]), ErrorCode::kInvalidArgument,
              "example " + std::to_string(k) + " has a non-finite score");
      Require(p.truth[i] == 0 || p.truth[i] == 1, ErrorCode::kInvalidArgument,
              "example " + std::to_string(k) + " has a non-binary label");
    }
  }
}

std::optional<double> BinaryAuc(const std::vector<double>& scores,
                                const std::vector<int>& truth) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  long positives = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Average of the 1-based ranks i+1 .. j, a half-integer.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (truth[order[k]]) {
        pos_rank_sum += avg;
        ++positives;
      }
    }
    i = j;
  }
  const long negatives = static_cast<long>(n) - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double u =
      pos_rank_sum - 0.5 * static_cast<double>(positives) * (positives + 1);
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

Criterion Coverage(const std::vector<EvalPair>& pairs) {
  ValidatePairs(pairs);
  double sum = 0.0;
  int used = 0, skipped = 0;
  for (const EvalPair& p : pairs) {
    const std::vector<double> relevant = SortedWhere(p, 1);
    if (relevant.empty()) {
      ++skipped;
      continue;
    }
    std::vector<double> all = p.scores;
    std::sort(all.begin(), all.end());
    // The lowest-scoring relevant label has the deepest rank.
    const Counts c = CountAgainst(all, relevant.front());
    sum += static_cast<double>(c.greater + c.equal - 1);
    ++used;
  }
  return Mean(sum, used, skipped);
}

Criterion RankingLoss(const std::vector<EvalPair>& pairs) {
  ValidatePairs(pairs);
  double sum = 0.0;
  int used = 0, skipped = 0;
  for (const EvalPair& p : pairs) {
    const auto auc = BinaryAuc(p.scores, p.truth);
    if (!auc) {
      ++skipped;
      continue;
    }
    sum += 1.0 - *auc;
    ++used;
  }
  return Mean(sum, used, skipped);
}

Criterion AveragePrecision(const std::vector<EvalPair>& pairs) {
  ValidatePairs(pairs);
  double sum = 0.0;
  int used = 0, skipped = 0;
  for (const EvalPair& p : pairs) {
    const std::vector<double> relevant = SortedWhere(p, 1);
    if (relevant.empty()) {
      ++skipped;
      continue;
    }
    std::vector<double> all = p.scores;
    std::sort(all.begin(), all.end());
    double ap = 0.0;
    for (double s : relevant) {
      const Counts a = CountAgainst(all, s);
      const Counts r = CountAgainst(relevant, s);
      const double rank = 1.0 + a.greater + 0.5 * (a.equal - 1);
      const double hits = 1.0 + r.greater + 0.5 * (r.equal - 1);
      ap += hits / rank;
    }
    sum += ap / static_cast<double>(relevant.size());
    ++used;
  }
  return Mean(sum, used, skipped);
}

AucFamily AucScores(const std::vector<EvalPair>& pairs) {
  ValidatePairs(pairs);
  AucFamily out;
  const size_t labels = pairs.front().scores.size();

  double sum = 0.0;
  int used = 0, skipped = 0;
  for (size_t l = 0; l < labels; ++l) {
    std::vector<double> s;
    std::vector<int> t;
    for (const EvalPair& p : pairs) {
      s.push_back(p.scores[l]);
      t.push_back(p.truth[l]);
    }
    const auto auc = BinaryAuc(s, t);
    if (auc) {
      sum += *auc;
      ++used;
    } else {
      ++skipped;
    }
  }
  out.macro = Mean(sum, used, skipped);

  std::vector<double> s;
  std::vector<int> t;
  for (const EvalPair& p : pairs) {
    s.insert(s.end(), p.scores.begin(), p.scores.end());
    t.insert(t.end(), p.truth.begin(), p.truth.end());
  }
  const auto micro = BinaryAuc(s, t);
  out.micro.used = micro ? 1 : 0;
  out.micro.skipped = micro ? 0 : 1;
  out.micro.value = micro;

  sum = 0.0;
  used = skipped = 0;
  for (const EvalPair& p : pairs) {
    const auto auc = BinaryAuc(p.scores, p.truth);
    if (auc) {
      sum += *auc;
      ++used;
    } else {
      ++skipped;
    }
  }
  out.example = Mean(sum, used, skipped);
  return out;
}

MetricReport EvaluateAll(const std::vector<EvalPair>& pairs) {
  MetricReport r;
  r.coverage = Coverage(pairs);
  r.ranking_loss = RankingLoss(pairs);
  r.average_precision = AveragePrecision(pairs);
  const AucFamily auc = AucScores(pairs);
  r.macro_auc = auc.macro;
  r.micro_auc = auc.micro;
  r.example_auc = auc.example;
  return r;
}

const std::vector<std::string>& CriterionNames() {
  static const std::vector<std::string> names = {
      "coverage",  "ranking_loss", "average_precision",
      "macro_auc", "micro_auc",    "example_auc"};
  return names;
}

std::vector<const Criterion*> ReportValues(const MetricReport& report) {
  return {&report.coverage,  &report.ranking_loss, &report.average_precision,
          &report.macro_auc, &report.micro_auc,    &report.example_auc};
}

}  // namespace m3dn
