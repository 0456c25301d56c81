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

#ifndef M3DN_GENERATOR_H_
#define M3DN_GENERATOR_H_

#include <cstdint>
#include <optional>
#include <utility>

#include "m3dn/dataset.h"
#include "m3dn/ground_metric.h"

namespace m3dn {

struct GeneratorConfig {
  int label_count = 5;
  int bag_count = 1000;
  std::pair<int, int> instances_m1 = {2, 6};
  std::pair<int, int> instances_m2 = {2, 6};
  int d1 = 12;
  int d2 = 16;
  // Label correlation used by the Gaussian copula. When empty, a random
  // block structure is drawn from the seed: labels are shuffled into groups
  // of `group_size` sharing correlation `group_correlation`.
  std::optional<Matrix> latent_label_correlation;
  int group_size = 2;
  double group_correlation = 0.7;
  // Marginal probability of each label being positive.
  double label_prior = 0.4;
  double noise_level = 0.05;
  // Share of the non-key instance slots filled with background instances.
  double background_rate = 0.5;
  double labeled_fraction = 0.3;
  double test_fraction = 0.3;
  double missing_modality_fraction = 0.0;
  std::uint64_t seed = 0;
};

// Throws kInvalidConfig naming the offending field.
void ValidateGeneratorConfig(const GeneratorConfig& cfg);

struct GeneratedData {
  M3Dataset data;  // every row labeled, untagged
  SimilarityKernel ground_truth;
};

// Labels come from thresholding a correlated Gaussian draw at the quantile
// matching `label_prior`. Each modality maps label prototypes through its
// own random linear map; a bag holds one key instance per positive label
// and fills its remaining slots with background or repeated positive
// instances, all with additive Gaussian noise. A
// `missing_modality_fraction` share of rows loses one bag, chosen uniformly.
GeneratedData Generate(const GeneratorConfig& cfg);

struct SplitResult {
  M3Dataset train_labeled;
  // Labels are retained here for diagnostics; trainers must ignore them.
  M3Dataset train_unlabeled;
  M3Dataset test;
};

// Seeded shuffle, then test = floor(N * test_fraction) rows and
// labeled = floor(train * labeled_fraction) of the remaining rows.
// Throws kInsufficientData if the training or labeled part would be empty
// while its fraction asks for rows.
SplitResult Split(const M3Dataset& data, const GeneratorConfig& cfg);

// Tags rows with their split ("train" / "test") and drops the labels of the
// unlabeled part, producing the dataset file layout written by the CLI.
M3Dataset MergeForFile(const SplitResult& split);

// Standard normal quantile.
double NormalQuantile(double p);

}  // namespace m3dn

#endif  // M3DN_GENERATOR_H_
