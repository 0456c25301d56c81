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

#ifndef M3DN_METRICS_H_
#define M3DN_METRICS_H_

#include <optional>
#include <string>
#include <vector>

namespace m3dn {

// One evaluated example: label scores (higher is more confident) and the
// binary ground truth.
struct EvalPair {
  std::vector<double> scores;
  std::vector<int> truth;
};

// Throws kInvalidArgument for length mismatches, non-finite scores or
// non-binary truth; kEmptyInput for an empty list.
void ValidatePairs(const std::vector<EvalPair>& pairs);

// A criterion averaged over the examples (or labels) it is defined on.
struct Criterion {
  std::optional<double> value;  // empty when no example qualifies
  int used = 0;
  int skipped = 0;
};

// Mean over examples of (rank of the lowest-ranked relevant label) - 1.
// A label's rank counts every label scoring at least as high, itself
// included, so ties are resolved against the prediction.
Criterion Coverage(const std::vector<EvalPair>& pairs);

// Mean fraction of (relevant, irrelevant) label pairs ordered wrongly; a tie
// counts one half. Examples lacking either kind of label are skipped.
Criterion RankingLoss(const std::vector<EvalPair>& pairs);

// Mean over examples and relevant labels l of
// |{relevant l' ranked at or above l}| / rank(l), with ties sharing credit
// one half.
Criterion AveragePrecision(const std::vector<EvalPair>& pairs);

struct AucFamily {
  Criterion macro;    // mean per-label AUC over labels with both classes
  Criterion micro;    // AUC over all (example, label) cells
  Criterion example;  // mean per-example AUC
};

AucFamily AucScores(const std::vector<EvalPair>& pairs);

// Area under the ROC curve of positives against negatives through average
// ranks (Mann-Whitney); ties count one half. Empty if a class is missing.
std::optional<double> BinaryAuc(const std::vector<double>& scores,
                                const std::vector<int>& truth);

struct MetricReport {
  Criterion coverage;
  Criterion ranking_loss;
  Criterion average_precision;
  Criterion macro_auc;
  Criterion micro_auc;
  Criterion example_auc;
};

MetricReport EvaluateAll(const std::vector<EvalPair>& pairs);

// Criterion names in report order.
const std::vector<std::string>& CriterionNames();
// Values in the order of CriterionNames().
std::vector<const Criterion*> ReportValues(const MetricReport& report);

}  // namespace m3dn

#endif  // M3DN_METRICS_H_
