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

#ifndef M3DN_TRAINER_H_
#define M3DN_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "m3dn/dataset.h"
#include "m3dn/ground_metric.h"
#include "m3dn/modal_net.h"
#include "m3dn/transport.h"

namespace m3dn {

enum class LearningRateSchedule { kConstant, kInverseSqrt };

struct TrainingConfig {
  double lambda = 50.0;
  double lambda1 = 1.0;
  double learning_rate = 0.05;
  LearningRateSchedule schedule = LearningRateSchedule::kConstant;
  int max_epochs = 50;
  int batch_size = 32;
  double epsilon = 1e-6;
  bool semi_supervised = false;
  double ae_weight = 1.0;
  PoolingMode pooling = PoolingMode::kMax;
  FusionMode fusion = FusionMode::kMean;
  bool fixed_metric = false;
  std::uint64_t seed = 0;

  std::vector<int> hidden_widths = {16, 16};
  Activation activation = Activation::kTanh;
  SinkhornOptions sinkhorn;
  KernelUpdateRule kernel_rule = KernelUpdateRule::kStationary;
  double reference_ridge = 1e-3;
  // Worker count for per-example work; <= 0 means all hardware threads.
  int threads = 0;
};

// Throws kInvalidConfig naming the offending field.
void ValidateTrainingConfig(const TrainingConfig& cfg);

std::string ScheduleName(LearningRateSchedule s);
LearningRateSchedule ParseSchedule(const std::string& name);

// Step size for the 1-based step counter t.
double LearningRate(const TrainingConfig& cfg, long long step);

struct TrainingState {
  ModalNetwork net1;
  ModalNetwork net2;
  SimilarityKernel kernel;
  SimilarityKernel reference;
  CostMatrix cost;
  int epoch = 0;
  std::vector<double> objective_history;
  int skipped_examples = 0;
  // SGD steps taken so far (drives the learning-rate schedule and the
  // stop-gradient parity).
  long long steps = 0;
};

// Networks from the seed, S = S0 from the labeled rows' labels, M from S.
// Throws kNoLabeledData.
TrainingState InitState(const M3Dataset& labeled, const TrainingConfig& cfg);

// Labeled rows are expected to carry labels; rows without a label or with
// an all-zero label vector are skipped.
struct BatchResult {
  double loss = 0.0;
  std::vector<TransportPlan> plans;
  NetworkGradient grad1;
  NetworkGradient grad2;
  int skipped = 0;
};

// Sum over examples and present modalities of <P_v, M>, where P_v couples
// the pooled prediction to the normalized label. Gradients are of that sum.
BatchResult SupervisedBatchLoss(const TrainingState& state,
                                const std::vector<const Example*>& batch,
                                const TrainingConfig& cfg);

// Which network receives the pseudo-coupling gradient: the other
// modality's prediction is held fixed as a pseudo label.
enum class PseudoTarget { kUpdateNet1, kUpdateNet2 };

// Sum over rows of ae_weight * reconstruction per present bag plus, for
// rows with both bags, <P_hat, M> for the plan coupling f1 to f2.
BatchResult SemiBatchLoss(const TrainingState& state,
                          const std::vector<const Example*>& batch,
                          const TrainingConfig& cfg, PseudoTarget target);

// Full objective on the given data under the frozen state:
// (labeled + pseudo transport costs + ae terms) / plan count
// + lambda1 * Burg(S, S0). Unlabeled rows count only in semi-supervised
// mode.
double FullObjective(const TrainingState& state, const M3Dataset& labeled,
                     const M3Dataset& unlabeled, const TrainingConfig& cfg);

struct EpochReport {
  int epoch = 0;
  double objective = 0.0;
};

using EpochCallback = std::function<void(const EpochReport&,
                                         const TrainingState&)>;

// Alternating optimization: per batch, plans under the current metric feed
// the kernel update, then gradients under the refreshed metric drive an
// SGD step on both networks. Stops when consecutive epoch objectives differ
// by at most epsilon, or after max_epochs. Errors: kNoLabeledData,
// kNonFiniteObjective (message carries the epoch index).
TrainingState Fit(const M3Dataset& labeled, const M3Dataset& unlabeled,
                  const TrainingConfig& cfg,
                  const EpochCallback& on_epoch = nullptr);

// Same, starting from an existing state.
void FitFrom(TrainingState& state, const M3Dataset& labeled,
             const M3Dataset& unlabeled, const TrainingConfig& cfg,
             const EpochCallback& on_epoch = nullptr);

// Fused prediction when both bags are given, otherwise the single
// modality's pooled prediction. Throws kNoInput.
Histogram Predict(const TrainingState& state, const Bag* bag1, const Bag* bag2,
                  const TrainingConfig& cfg);

// Pooled prediction of one modality's network.
Histogram PredictModality(const TrainingState& state, int modality,
                          const Bag& bag, const TrainingConfig& cfg);

}  // namespace m3dn

#endif  // M3DN_TRAINER_H_
