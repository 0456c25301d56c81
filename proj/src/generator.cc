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

#include "m3dn/generator.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "m3dn/status.h"

namespace m3dn {
namespace {

constexpr std::uint64_t kSplitStream = 0x9e3779b97f4a7c15ULL;

void CheckField(bool ok, const std::string& field, const std::string& msg) {
  Require(ok, ErrorCode::kInvalidConfig, field + ": " + msg);
}

// Random block correlation: shuffled labels in consecutive groups.
Matrix BlockCorrelation(const GeneratorConfig& cfg, std::mt19937_64& rng) {
  const int n = cfg.label_count;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Matrix r = Matrix::Identity(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b && a / cfg.group_size == b / cfg.group_size)
        r(order[a], order[b]) = cfg.group_correlation;
    }
  }
  return r;
}

// d x (L + 1) map with orthonormal columns when d >= L + 1; the last column
// is the background prototype.
Matrix PrototypeMap(int d, int labels, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(d, labels + 1);
  for (int j = 0; j < g.cols(); ++j)
    for (int i = 0; i < d; ++i) g(i, j) = normal(rng);
  if (d >= labels + 1) {
    const Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(d, labels + 1);
  }
  return g.colwise().normalized();
}

Bag DrawBag(int modality, const std::string& id, const Matrix& map,
            const std::vector<int>& labels, std::pair<int, int> range,
            double noise, double background_rate, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> count(range.first, range.second);
  const int labels_n = static_cast<int>(labels.size());
  std::vector<int> keys;
  for (int l = 0; l < labels_n; ++l)
    if (labels[l]) keys.push_back(l);
  const int m = std::max(count(rng), static_cast<int>(keys.size()));
  // One key instance per positive label; the remaining slots are background
  // with probability `background_rate`, otherwise another positive label's
  // prototype. A shuffle removes any positional signal.
  std::vector<int> protos(keys);
  std::bernoulli_distribution background(background_rate);
  std::uniform_int_distribution<size_t> pick(0, keys.empty() ? 0 : keys.size() - 1);
  while (static_cast<int>(protos.size()) < m) {
    protos.push_back(keys.empty() || background(rng) ? labels_n
                                                     : keys[pick(rng)]);
  }
  std::shuffle(protos.begin(), protos.end(), rng);
  Bag bag;
  bag.modality = modality;
  bag.bag_id = id + ":m" + std::to_string(modality);
  bag.instances.resize(map.rows(), m);
  for (int j = 0; j < m; ++j) {
    Vector latent = Vector::Zero(labels_n + 1);
    latent(protos[j]) = 1.0;
    for (int k = 0; k <= labels_n; ++k) latent(k) += noise * normal(rng);
    Vector x = map * latent;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += noise * normal(rng);
    bag.instances.col(j) = x;
  }
  return bag;
}

}  // namespace

double NormalQuantile(double p) {
  Require(p > 0.0 && p < 1.0, ErrorCode::kInvalidArgument,
          "quantile level must lie in (0, 1)");
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void ValidateGeneratorConfig(const GeneratorConfig& cfg) {
  CheckField(cfg.label_count >= 2, "label_count", "must be >= 2");
  CheckField(cfg.bag_count >= 0, "bag_count", "must be >= 0");
  CheckField(cfg.instances_m1.first >= 1 &&
                 cfg.instances_m1.first <= cfg.instances_m1.second,
             "instance_count_range.m1", "must be a nonempty range with min >= 1");
  CheckField(cfg.instances_m2.first >= 1 &&
                 cfg.instances_m2.first <= cfg.instances_m2.second,
             "instance_count_range.m2", "must be a nonempty range with min >= 1");
  CheckField(cfg.d1 >= 1, "feature_dims[0]", "must be >= 1");
  CheckField(cfg.d2 >= 1, "feature_dims[1]", "must be >= 1");
  CheckField(cfg.noise_level >= 0.0 && std::isfinite(cfg.noise_level),
             "noise_level", "must be a finite nonnegative number");
  CheckField(cfg.background_rate >= 0.0 && cfg.background_rate <= 1.0,
             "background_rate", "must lie in [0, 1]");
  CheckField(cfg.label_prior > 0.0 && cfg.label_prior < 1.0, "label_prior",
             "must lie in (0, 1)");
  CheckField(cfg.labeled_fraction >= 0.0 && cfg.labeled_fraction <= 1.0,
             "labeled_fraction", "must lie in [0, 1]");
  CheckField(cfg.test_fraction >= 0.0 && cfg.test_fraction <= 1.0,
             "test_fraction", "must lie in [0, 1]");
  CheckField(cfg.missing_modality_fraction >= 0.0 &&
                 cfg.missing_modality_fraction <= 1.0,
             "missing_modality_fraction", "must lie in [0, 1]");
  if (cfg.latent_label_correlation) {
    const Matrix& r = *cfg.latent_label_correlation;
    CheckField(r.rows() == cfg.label_count && r.cols() == cfg.label_count,
               "latent_label_correlation", "must be L x L");
    CheckField(r.allFinite() && MaxAsymmetry(r) <= 1e-9,
               "latent_label_correlation", "must be symmetric");
    CheckField((r.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-9,
               "latent_label_correlation", "must have a unit diagonal");
    CheckField(MinEigenvalue(r) >= -1e-9, "latent_label_correlation",
               "must be positive semidefinite");
  } else {
    CheckField(cfg.group_size >= 1, "group_size", "must be >= 1");
    CheckField(cfg.group_correlation >= 0.0 && cfg.group_correlation < 1.0,
               "group_correlation", "must lie in [0, 1)");
  }
}

GeneratedData Generate(const GeneratorConfig& cfg) {
  ValidateGeneratorConfig(cfg);
  std::mt19937_64 rng(cfg.seed);
  const int n = cfg.label_count;
  const Matrix corr = cfg.latent_label_correlation
                          ? *cfg.latent_label_correlation
                          : BlockCorrelation(cfg, rng);
  // Cholesky with a tiny jitter tolerates singular correlation matrices.
  const Eigen::LLT<Matrix> llt(corr + 1e-12 * Matrix::Identity(n, n));
  Require(llt.info() == Eigen::Success, ErrorCode::kInvalidConfig,
          "latent_label_correlation: not positive semidefinite");
  const Matrix chol = llt.matrixL();
  const double threshold = NormalQuantile(1.0 - cfg.label_prior);
  const Matrix map1 = PrototypeMap(cfg.d1, n, rng);
  const Matrix map2 = PrototypeMap(cfg.d2, n, rng);

  GeneratedData out{M3Dataset{}, SimilarityKernel::FromMatrix(corr)};
  M3Dataset& data = out.data;
  data.label_count = n;
  data.d1 = cfg.d1;
  data.d2 = cfg.d2;
  for (int l = 0; l < n; ++l) data.label_names.push_back("label" + std::to_string(l));

  std::normal_distribution<double> normal;
  const int width = std::max(4, static_cast<int>(std::to_string(cfg.bag_count).size()));
  for (int b = 0; b < cfg.bag_count; ++b) {
    Vector z(n);
    for (int l = 0; l < n; ++l) z(l) = normal(rng);
    z = chol * z;
    std::vector<int> labels(n);
    for (int l = 0; l < n; ++l) labels[l] = z(l) > threshold ? 1 : 0;
    std::string id = std::to_string(b);
    id = "bag" + std::string(width - id.size(), '0') + id;
    Example e;
    e.id = id;
    e.m1 = DrawBag(1, id, map1, labels, cfg.instances_m1, cfg.noise_level,
                    cfg.background_rate, rng);
    e.m2 = DrawBag(2, id, map2, labels, cfg.instances_m2, cfg.noise_level,
                    cfg.background_rate, rng);
    e.labels = std::move(labels);
    data.examples.push_back(std::move(e));
  }

  const int masked = static_cast<int>(
      std::floor(cfg.bag_count * cfg.missing_modality_fraction + 1e-9));
  std::vector<int> order(cfg.bag_count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < masked; ++k) {
    Example& e = data.examples[order[k]];
    if (coin(rng)) {
      e.m1.reset();
    } else {
      e.m2.reset();
    }
  }
  return out;
}

SplitResult Split(const M3Dataset& data, const GeneratorConfig& cfg) {
  ValidateGeneratorConfig(cfg);
  const int total = static_cast<int>(data.examples.size());
  const int test_n =
      static_cast<int>(std::floor(total * cfg.test_fraction + 1e-9));
  const int train_n = total - test_n;
  const int labeled_n =
      static_cast<int>(std::floor(train_n * cfg.labeled_fraction + 1e-9));
  Require(train_n > 0 || cfg.test_fraction >= 1.0, ErrorCode::kInsufficientData,
          "training split is empty");
  Require(labeled_n > 0 || cfg.labeled_fraction == 0.0 || train_n == 0,
          ErrorCode::kInsufficientData, "labeled split is empty");

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ kSplitStream);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Example> test, labeled, unlabeled;
  for (int k = 0; k < total; ++k) {
    const Example& e = data.examples[order[k]];
    if (k < test_n) {
      test.push_back(e);
    } else if (k < test_n + labeled_n) {
      labeled.push_back(e);
    } else {
      unlabeled.push_back(e);
    }
  }
  // Restore file order inside each part so outputs diff cleanly.
  auto by_id = [](const Example& a, const Example& b) { return a.id < b.id; };
  std::sort(test.begin(), test.end(), by_id);
  std::sort(labeled.begin(), labeled.end(), by_id);
  std::sort(unlabeled.begin(), unlabeled.end(), by_id);
  return {data.WithExamples(std::move(labeled)),
          data.WithExamples(std::move(unlabeled)),
          data.WithExamples(std::move(test))};
}

M3Dataset MergeForFile(const SplitResult& split) {
  std::vector<Example> rows;
  for (Example e : split.train_labeled.examples) {
    e.split = "train";
    rows.push_back(std::move(e));
  }
  for (Example e : split.train_unlabeled.examples) {
    e.split = "train";
    e.labels.reset();
    rows.push_back(std::move(e));
  }
  for (Example e : split.test.examples) {
    e.split = "test";
    rows.push_back(std::move(e));
  }
  std::sort(rows.begin(), rows.end(),
            [](const Example& a, const Example& b) { return a.id < b.id; });
  return split.test.WithExamples(std::move(rows));
}

}  // namespace m3dn
