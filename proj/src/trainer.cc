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

#include "m3dn/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "m3dn/status.h"

namespace m3dn {
namespace {

constexpr std::uint64_t kDecoderStream = 0xd1b54a32d192ed03ULL;
constexpr std::uint64_t kShuffleStream = 0x8cb92ba72f3d8dd7ULL;

void CheckField(bool ok, const std::string& field, const std::string& msg) {
  Require(ok, ErrorCode::kInvalidConfig, field + ": " + msg);
}

bool HasPositive(const std::vector<int>& y) {
  return std::any_of(y.begin(), y.end(), [](int v) { return v != 0; });
}

Histogram LabelHistogram(const std::vector<int>& y) {
  Vector v(static_cast<Eigen::Index>(y.size()));
  for (size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = y[i];
  return MakeHistogram(v, HistogramMode::kNormalize);
}

PoolingOptions Pooling(const TrainingConfig& cfg) {
  PoolingOptions p;
  p.mode = cfg.pooling;
  return p;
}

const ModalNetwork& Net(const TrainingState& s, int modality) {
  return modality == 1 ? s.net1 : s.net2;
}

// Loss terms and gradients contributed by one row.
struct RowTerms {
  double loss = 0.0;
  std::vector<TransportPlan> plans;
  std::optional<NetworkGradient> grad1;
  std::optional<NetworkGradient> grad2;
  bool skipped = false;
};

void AddInto(std::optional<NetworkGradient>& slot, NetworkGradient g) {
  if (slot) {
    AddScaled(*slot, g, 1.0);
  } else {
    slot = std::move(g);
  }
}

RowTerms SupervisedRow(const TrainingState& state, const Example& e,
                       const TrainingConfig& cfg, bool with_grad) {
  RowTerms out;
  if (!e.labels || !HasPositive(*e.labels)) {
    out.skipped = true;
    return out;
  }
  const Histogram target = LabelHistogram(*e.labels);
  for (int v = 1; v <= 2; ++v) {
    const auto& bag = e.bag(v);
    if (!bag) continue;
    const ModalNetwork& net = Net(state, v);
    const BagForward fwd = Forward(net, *bag, Pooling(cfg), false);
    const Histogram pred = MakeHistogram(fwd.pooled, HistogramMode::kNormalize);
    SinkhornResult sr = SinkhornPlan(pred, target, state.cost, cfg.lambda,
                                     cfg.sinkhorn);
    out.loss += TransportCost(sr.plan, state.cost);
    if (with_grad) {
      UpstreamGradient up;
      up.pooled_grad = CenteredDual(sr.state);
      AddInto(v == 1 ? out.grad1 : out.grad2, Backward(net, *bag, fwd, up));
    }
    out.plans.push_back(std::move(sr.plan));
  }
  return out;
}

RowTerms SemiRow(const TrainingState& state, const Example& e,
                 const TrainingConfig& cfg, PseudoTarget target,
                 bool with_grad) {
  RowTerms out;
  std::optional<BagForward> fwd[2];
  for (int v = 1; v <= 2; ++v) {
    const auto& bag = e.bag(v);
    if (!bag) continue;
    fwd[v - 1] = Forward(Net(state, v), *bag, Pooling(cfg), true);
    out.loss += cfg.ae_weight * fwd[v - 1]->reconstruction_loss;
  }
  std::optional<Vector> pooled_grad[2];
  if (fwd[0] && fwd[1]) {
    const Histogram f1 = MakeHistogram(fwd[0]->pooled, HistogramMode::kNormalize);
    const Histogram f2 = MakeHistogram(fwd[1]->pooled, HistogramMode::kNormalize);
    SinkhornResult sr = SinkhornPlan(f1, f2, state.cost, cfg.lambda,
                                     cfg.sinkhorn);
    out.loss += TransportCost(sr.plan, state.cost);
    if (with_grad) {
      if (target == PseudoTarget::kUpdateNet1) {
        pooled_grad[0] = CenteredDual(sr.state);
      } else {
        // The column side: solve the transposed problem and take its row
        // dual, with f1 as the fixed pseudo label.
        const SinkhornResult rev = SinkhornPlan(f2, f1, state.cost,
                                                cfg.lambda, cfg.sinkhorn);
        pooled_grad[1] = CenteredDual(rev.state);
      }
    }
    out.plans.push_back(std::move(sr.plan));
  }
  if (with_grad) {
    for (int v = 1; v <= 2; ++v) {
      if (!fwd[v - 1]) continue;
      UpstreamGradient up;
      up.pooled_grad = pooled_grad[v - 1];
      up.reconstruction_weight = cfg.ae_weight;
      AddInto(v == 1 ? out.grad1 : out.grad2,
              Backward(Net(state, v), *e.bag(v), *fwd[v - 1], up));
    }
  }
  return out;
}

// Evaluates `row_fn` on every row in parallel and reduces in row order, so
// the result does not depend on the thread count.
template <typename RowFn>
BatchResult Reduce(const TrainingState& state,
                   const std::vector<const Example*>& batch,
                   const TrainingConfig& cfg, bool with_grad, RowFn row_fn) {
  std::vector<std::optional<RowTerms>> rows(batch.size());
  ParallelFor(static_cast<int>(batch.size()), ResolveThreads(cfg.threads),
              [&](int i) { rows[i] = row_fn(*batch[i]); });
  BatchResult out;
  if (with_grad) {
    out.grad1 = ZeroGradient(state.net1);
    out.grad2 = ZeroGradient(state.net2);
  }
  for (auto& r : rows) {
    out.loss += r->loss;
    out.skipped += r->skipped ? 1 : 0;
    for (auto& p : r->plans) out.plans.push_back(std::move(p));
    if (r->grad1) AddScaled(out.grad1, *r->grad1, 1.0);
    if (r->grad2) AddScaled(out.grad2, *r->grad2, 1.0);
  }
  return out;
}

BatchResult Supervised(const TrainingState& state,
                       const std::vector<const Example*>& batch,
                       const TrainingConfig& cfg, bool with_grad) {
  return Reduce(state, batch, cfg, with_grad, [&](const Example& e) {
    return SupervisedRow(state, e, cfg, with_grad);
  });
}

BatchResult Semi(const TrainingState& state,
                 const std::vector<const Example*>& batch,
                 const TrainingConfig& cfg, PseudoTarget target,
                 bool with_grad) {
  return Reduce(state, batch, cfg, with_grad, [&](const Example& e) {
    Require(e.bag_count() >= 1, ErrorCode::kNoInput,
            "unlabeled row '" + e.id + "' has no bag");
    return SemiRow(state, e, cfg, target, with_grad);
  });
}

std::vector<const Example*> Pointers(const M3Dataset& d) {
  std::vector<const Example*> out;
  for (const auto& e : d.examples) out.push_back(&e);
  return out;
}

void RefreshMetric(TrainingState& state, const std::vector<TransportPlan>& plans,
                   const TrainingConfig& cfg) {
  if (cfg.fixed_metric || plans.empty()) return;
  PlanAccumulator acc(state.kernel.size());
  for (const auto& p : plans) acc.Add(p);
  KernelUpdateOptions opts;
  opts.lambda1 = cfg.lambda1;
  opts.rule = cfg.kernel_rule;
  state.kernel = UpdateKernel(acc, state.reference, opts);
  state.cost = CostFromKernel(state.kernel);
}

}  // namespace

std::string ScheduleName(LearningRateSchedule s) {
  return s == LearningRateSchedule::kConstant ? "constant" : "inv_sqrt";
}

LearningRateSchedule ParseSchedule(const std::string& name) {
  if (name == "constant") return LearningRateSchedule::kConstant;
  if (name == "inv_sqrt") return LearningRateSchedule::kInverseSqrt;
  throw Error(ErrorCode::kInvalidConfig,
              "schedule: unknown value '" + name + "'");
}

double LearningRate(const TrainingConfig& cfg, long long step) {
  if (cfg.schedule == LearningRateSchedule::kConstant) return cfg.learning_rate;
  return cfg.learning_rate / std::sqrt(static_cast<double>(std::max(1LL, step)));
}

void ValidateTrainingConfig(const TrainingConfig& cfg) {
  CheckField(cfg.lambda > 0.0 && std::isfinite(cfg.lambda), "lambda",
             "must be positive");
  CheckField(cfg.lambda1 > 0.0 && std::isfinite(cfg.lambda1), "lambda1",
             "must be positive");
  CheckField(cfg.learning_rate > 0.0 && std::isfinite(cfg.learning_rate),
             "learning_rate", "must be positive");
  CheckField(cfg.max_epochs >= 0, "max_epochs", "must be >= 0");
  CheckField(cfg.batch_size >= 1, "batch_size", "must be >= 1");
  CheckField(cfg.epsilon >= 0.0, "epsilon", "must be >= 0");
  CheckField(cfg.ae_weight >= 0.0 && std::isfinite(cfg.ae_weight), "ae_weight",
             "must be nonnegative");
  CheckField(!cfg.hidden_widths.empty(), "hidden_widths",
             "needs at least one layer");
  for (size_t i = 0; i < cfg.hidden_widths.size(); ++i)
    CheckField(cfg.hidden_widths[i] >= 1,
               "hidden_widths[" + std::to_string(i) + "]", "must be >= 1");
  CheckField(cfg.sinkhorn.max_iter >= 1, "sinkhorn.max_iter", "must be >= 1");
  CheckField(cfg.sinkhorn.tol > 0.0, "sinkhorn.tol", "must be positive");
  CheckField(cfg.reference_ridge >= 0.0, "reference_ridge", "must be >= 0");
}

TrainingState InitState(const M3Dataset& labeled, const TrainingConfig& cfg) {
  ValidateTrainingConfig(cfg);
  std::vector<std::vector<int>> labels;
  for (const auto& e : labeled.examples)
    if (e.labels) labels.push_back(*e.labels);
  Require(!labels.empty(), ErrorCode::kNoLabeledData,
          "training needs at least one labeled row");
  std::mt19937_64 rng(cfg.seed);
  std::mt19937_64 decoder_rng(cfg.seed ^ kDecoderStream);
  NetworkConfig nc;
  nc.hidden_widths = cfg.hidden_widths;
  nc.label_count = labeled.label_count;
  nc.activation = cfg.activation;
  nc.with_decoder = true;
  nc.input_dim = labeled.d1;
  ModalNetwork net1 = InitNetwork(nc, rng, decoder_rng);
  nc.input_dim = labeled.d2;
  ModalNetwork net2 = InitNetwork(nc, rng, decoder_rng);
  SimilarityKernel reference = InitReferenceKernel(labels, cfg.reference_ridge);
  CostMatrix cost = CostFromKernel(reference);
  TrainingState state{std::move(net1), std::move(net2), reference, reference,
                      std::move(cost), 0, {}, 0, 0};
  for (const auto& y : labels) state.skipped_examples += HasPositive(y) ? 0 : 1;
  return state;
}

BatchResult SupervisedBatchLoss(const TrainingState& state,
                                const std::vector<const Example*>& batch,
                                const TrainingConfig& cfg) {
  Require(!batch.empty(), ErrorCode::kInvalidArgument, "batch is empty");
  return Supervised(state, batch, cfg, true);
}

BatchResult SemiBatchLoss(const TrainingState& state,
                          const std::vector<const Example*>& batch,
                          const TrainingConfig& cfg, PseudoTarget target) {
  Require(!batch.empty(), ErrorCode::kInvalidArgument, "batch is empty");
  return Semi(state, batch, cfg, target, true);
}

double FullObjective(const TrainingState& state, const M3Dataset& labeled,
                     const M3Dataset& unlabeled, const TrainingConfig& cfg) {
  const BatchResult sup = Supervised(state, Pointers(labeled), cfg, false);
  double data = sup.loss;
  size_t plans = sup.plans.size();
  if (cfg.semi_supervised && !unlabeled.examples.empty()) {
    const BatchResult semi = Semi(state, Pointers(unlabeled), cfg,
                                  PseudoTarget::kUpdateNet1, false);
    data += semi.loss;
    plans += semi.plans.size();
  }
  const double burg =
      BurgDivergence(state.kernel, state.reference, state.kernel.size());
  return data / static_cast<double>(std::max<size_t>(1, plans)) +
         cfg.lambda1 * burg;
}

void FitFrom(TrainingState& state, const M3Dataset& labeled,
             const M3Dataset& unlabeled, const TrainingConfig& cfg,
             const EpochCallback& on_epoch) {
  ValidateTrainingConfig(cfg);
  Require(labeled.labeled_count() > 0, ErrorCode::kNoLabeledData,
          "training needs at least one labeled row");
  if (cfg.max_epochs == 0) return;
  const bool use_unlabeled =
      cfg.semi_supervised && !unlabeled.examples.empty();
  const auto labeled_rows = Pointers(labeled);
  const auto unlabeled_rows = Pointers(unlabeled);
  double previous = FullObjective(state, labeled, unlabeled, cfg);

  for (int e = 0; e < cfg.max_epochs; ++e) {
    std::mt19937_64 rng(cfg.seed ^ kShuffleStream ^
                        (static_cast<std::uint64_t>(state.epoch) *
                         0x2545f4914f6cdd1dULL));
    std::vector<int> order(labeled_rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> uorder(unlabeled_rows.size());
    std::iota(uorder.begin(), uorder.end(), 0);
    if (use_unlabeled) std::shuffle(uorder.begin(), uorder.end(), rng);
    size_t cursor = 0;

    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const Example*> lb, ub;
      for (size_t k = start; k < end; ++k) lb.push_back(labeled_rows[order[k]]);
      if (use_unlabeled) {
        for (size_t k = 0; k < lb.size(); ++k) {
          ub.push_back(unlabeled_rows[uorder[cursor]]);
          cursor = (cursor + 1) % uorder.size();
        }
      }
      const PseudoTarget target = state.steps % 2 == 0
                                      ? PseudoTarget::kUpdateNet1
                                      : PseudoTarget::kUpdateNet2;
      if (!cfg.fixed_metric) {
        std::vector<TransportPlan> plans =
            Supervised(state, lb, cfg, false).plans;
        if (!ub.empty()) {
          for (auto& p : Semi(state, ub, cfg, target, false).plans)
            plans.push_back(std::move(p));
        }
        RefreshMetric(state, plans, cfg);
      }
      // The step follows the batch-sum gradient, as for plain SGD on a
      // summed loss.
      BatchResult sup = Supervised(state, lb, cfg, true);
      if (!ub.empty()) {
        const BatchResult semi = Semi(state, ub, cfg, target, true);
        AddScaled(sup.grad1, semi.grad1, 1.0);
        AddScaled(sup.grad2, semi.grad2, 1.0);
      }
      ++state.steps;
      const double step = -LearningRate(cfg, state.steps);
      AddScaled(state.net1, sup.grad1, step);
      AddScaled(state.net2, sup.grad2, step);
    }

    const double objective = FullObjective(state, labeled, unlabeled, cfg);
    Require(std::isfinite(objective), ErrorCode::kNonFiniteObjective,
            "objective is not finite at epoch " + std::to_string(state.epoch));
    state.objective_history.push_back(objective);
    ++state.epoch;
    if (on_epoch) on_epoch({state.epoch, objective}, state);
    if (std::abs(objective - previous) <= cfg.epsilon) break;
    previous = objective;
  }
}

TrainingState Fit(const M3Dataset& labeled, const M3Dataset& unlabeled,
                  const TrainingConfig& cfg, const EpochCallback& on_epoch) {
  TrainingState state = InitState(labeled, cfg);
  FitFrom(state, labeled, unlabeled, cfg, on_epoch);
  return state;
}

Histogram PredictModality(const TrainingState& state, int modality,
                          const Bag& bag, const TrainingConfig& cfg) {
  const BagForward fwd = Forward(Net(state, modality), bag, Pooling(cfg), false);
  return MakeHistogram(fwd.pooled, HistogramMode::kNormalize);
}

Histogram Predict(const TrainingState& state, const Bag* bag1, const Bag* bag2,
                  const TrainingConfig& cfg) {
  Require(bag1 != nullptr || bag2 != nullptr, ErrorCode::kNoInput,
          "prediction needs at least one bag");
  if (bag1 && bag2) {
    return FusePredictions(PredictModality(state, 1, *bag1, cfg),
                           PredictModality(state, 2, *bag2, cfg), cfg.fusion);
  }
  return bag1 ? PredictModality(state, 1, *bag1, cfg)
              : PredictModality(state, 2, *bag2, cfg);
}

}  // namespace m3dn
