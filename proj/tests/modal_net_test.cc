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

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include "m3dn/modal_net.h"
#include "m3dn/status.h"
#include "m3dn/transport.h"
#include "test_util.h"

namespace m3dn {
namespace {

using testing::RandomGaussian;
using testing::RelErr;

ModalNetwork MakeNet(int d, std::vector<int> widths, int labels,
                     std::uint64_t seed, bool decoder = true,
                     Activation act = Activation::kTanh) {
  NetworkConfig cfg;
  cfg.input_dim = d;
  cfg.hidden_widths = std::move(widths);
  cfg.label_count = labels;
  cfg.activation = act;
  cfg.with_decoder = decoder;
  std::mt19937_64 rng(seed);
  std::mt19937_64 dec(seed + 1);
  return InitNetwork(cfg, rng, dec);
}

Bag MakeBag(int d, int m, std::mt19937_64& rng, const std::string& id = "b") {
  Bag bag;
  bag.bag_id = id;
  bag.instances = RandomGaussian(d, m, rng);
  return bag;
}

// Straight-line scalar forward pass.
double Act(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: return std::tanh(z);
    case Activation::kRelu: return z > 0 ? z : 0.0;
    case Activation::kLinear: return z;
  }
  return z;
}

std::vector<double> LayerByHand(const Layer& l, const std::vector<double>& x) {
  std::vector<double> y(l.out());
  for (int i = 0; i < l.out(); ++i) {
    double z = l.bias(i);
    for (int j = 0; j < l.in(); ++j) z += l.weight(i, j) * x[j];
    y[i] = Act(l.activation, z);
  }
  return y;
}

std::vector<double> EncodeByHand(const ModalNetwork& net, const Vector& x) {
  std::vector<double> h(x.data(), x.data() + x.size());
  for (const Layer& l : net.encoder) h = LayerByHand(l, h);
  return h;
}

std::vector<double> SoftmaxByHand(const ModalNetwork& net, const Vector& x) {
  const std::vector<double> logits = LayerByHand(net.head, EncodeByHand(net, x));
  double total = 0.0;
  std::vector<double> p(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) total += p[i] = std::exp(logits[i]);
  for (double& v : p) v /= total;
  return p;
}

TEST(EncodeTest, ZeroParametersGiveActivationOfZero) {
  ModalNetwork net = MakeNet(4, {3}, 2, 1);
  net.encoder[0].weight.setZero();
  net.encoder[0].bias.setZero();
  std::mt19937_64 rng(1);
  const Vector h = EncodeInstance(net, RandomGaussian(4, 1, rng).col(0));
  EXPECT_EQ(h, Vector::Zero(3));
}

TEST(EncodeTest, IdentityLayer) {
  ModalNetwork net = MakeNet(3, {3}, 2, 1, false, Activation::kLinear);
  net.encoder[0].weight = Matrix::Identity(3, 3);
  net.encoder[0].bias.setZero();
  Vector x(3);
  x << 0.5, -2, 7;
  EXPECT_EQ(EncodeInstance(net, x), x);
}

TEST(EncodeTest, MatchesStraightLineForward) {
  std::mt19937_64 rng(2);
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    const ModalNetwork net = MakeNet(5, {4, 3}, 3, 7, false, act);
    for (int t = 0; t < 10; ++t) {
      const Vector x = RandomGaussian(5, 1, rng).col(0);
      const Vector h = EncodeInstance(net, x);
      const std::vector<double> ref = EncodeByHand(net, x);
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(h(i), ref[i], 1e-12);
    }
  }
}

TEST(EncodeTest, DimensionMismatch) {
  const ModalNetwork net = MakeNet(4, {3}, 2, 1);
  try {
    EncodeInstance(net, Vector::Zero(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(EncodeTest, NonFiniteActivationIsReported) {
  ModalNetwork net = MakeNet(2, {2}, 2, 1, false, Activation::kLinear);
  net.encoder[0].weight.setConstant(1e308);
  Vector x(2);
  x << 1e308, 1e308;
  try {
    EncodeInstance(net, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteActivation);
  }
}

TEST(InitTest, ShapesChainAndDecoderMirrors) {
  const ModalNetwork net = MakeNet(7, {5, 4}, 3, 3);
  ValidateNetwork(net);
  EXPECT_EQ(net.input_dim(), 7);
  EXPECT_EQ(net.hidden_dim(), 4);
  EXPECT_EQ(net.label_count(), 3);
  ASSERT_EQ(net.decoder.size(), 2u);
  EXPECT_EQ(net.decoder[0].in(), 4);
  EXPECT_EQ(net.decoder[1].out(), 7);
  EXPECT_EQ(net.decoder[1].activation, Activation::kLinear);
  const double bound = std::sqrt(3.0 / 7);
  EXPECT_LE(net.encoder[0].weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_EQ(net.encoder[0].bias, Vector::Zero(5));
}

TEST(InitTest, DecoderDoesNotShiftEncoderDraws) {
  const ModalNetwork with = MakeNet(6, {4}, 3, 5, true);
  const ModalNetwork without = MakeNet(6, {4}, 3, 5, false);
  EXPECT_EQ(with.encoder[0].weight, without.encoder[0].weight);
  EXPECT_EQ(with.head.weight, without.head.weight);
}

TEST(InitTest, ValidateRejectsBrokenChain) {
  ModalNetwork net = MakeNet(6, {4}, 3, 5);
  net.head.weight = Matrix::Zero(3, 5);
  EXPECT_THROW(ValidateNetwork(net), Error);
}

TEST(ParametersTest, FlattenOrderAndAddScaled) {
  ModalNetwork net = MakeNet(3, {2}, 2, 9);
  const std::vector<double> flat = FlattenParameters(net);
  EXPECT_EQ(flat[0], net.encoder[0].weight(0, 0));
  EXPECT_EQ(flat[1], net.encoder[0].weight(1, 0));
  EXPECT_EQ(flat[6], net.encoder[0].bias(0));
  const std::vector<double*> refs = ParameterRefs(net);
  ASSERT_EQ(refs.size(), flat.size());
  NetworkGradient g = ZeroGradient(net);
  for (double* p : ParameterRefs(g)) *p = 1.0;
  AddScaled(net, g, 0.5);
  const std::vector<double> moved = FlattenParameters(net);
  for (size_t i = 0; i < flat.size(); ++i) EXPECT_EQ(moved[i], flat[i] + 0.5);
}

TEST(BagConceptTest, ZeroHeadGivesUniformColumns) {
  ModalNetwork net = MakeNet(4, {3}, 5, 1);
  net.head.weight.setZero();
  net.head.bias.setZero();
  std::mt19937_64 rng(3);
  const BagConcept bc = BagConceptOf(net, MakeBag(4, 3, rng));
  EXPECT_LE((bc.scores.array() - 0.2).abs().maxCoeff(), 1e-15);
}

TEST(BagConceptTest, DominantBias) {
  ModalNetwork net = MakeNet(4, {3}, 4, 1);
  net.head.weight.setZero();
  net.head.bias.setZero();
  net.head.bias(0) = 10.0;
  std::mt19937_64 rng(4);
  const BagConcept bc = BagConceptOf(net, MakeBag(4, 2, rng));
  for (int j = 0; j < 2; ++j) EXPECT_GT(bc.scores(0, j), 0.9998);
}

TEST(BagConceptTest, ColumnsMatchPerInstanceSoftmax) {
  const ModalNetwork net = MakeNet(5, {4, 3}, 4, 11);
  std::mt19937_64 rng(5);
  const Bag bag = MakeBag(5, 3, rng);
  const BagConcept bc = BagConceptOf(net, bag);
  for (int j = 0; j < 3; ++j) {
    const std::vector<double> ref = SoftmaxByHand(net, bag.instances.col(j));
    for (int l = 0; l < 4; ++l) EXPECT_NEAR(bc.scores(l, j), ref[l], 1e-12);
    EXPECT_NEAR(bc.scores.col(j).sum(), 1.0, 1e-12);
    EXPECT_GT(bc.scores.col(j).minCoeff(), 0.0);
  }
}

TEST(BagConceptTest, EmptyBagRejected) {
  const ModalNetwork net = MakeNet(5, {4}, 4, 11);
  Bag bag;
  bag.instances = Matrix(5, 0);
  EXPECT_THROW(BagConceptOf(net, bag), Error);
}

TEST(PoolTest, SingleInstanceIsIdentity) {
  BagConcept bc;
  bc.scores = Matrix(3, 1);
  bc.scores << 0.2, 0.5, 0.3;
  for (PoolingMode mode : {PoolingMode::kMax, PoolingMode::kMean}) {
    const Vector p = PoolBag(bc, {mode, true});
    EXPECT_LE((p - bc.scores.col(0)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(PoolTest, SymmetricMaxima) {
  BagConcept bc;
  bc.scores = Matrix(2, 2);
  bc.scores << 0.9, 0.1, 0.1, 0.9;
  const Vector raw = PoolBag(bc, {PoolingMode::kMax, false});
  EXPECT_EQ(raw(0), 0.9);
  EXPECT_EQ(raw(1), 0.9);
  const Vector p = PoolBag(bc, {PoolingMode::kMax, true});
  EXPECT_DOUBLE_EQ(p(0), 0.5);
  EXPECT_DOUBLE_EQ(p(1), 0.5);
}

TEST(PoolTest, MeanIsColumnAverage) {
  const ModalNetwork net = MakeNet(4, {3}, 5, 2);
  std::mt19937_64 rng(6);
  const BagConcept bc = BagConceptOf(net, MakeBag(4, 6, rng));
  const Vector p = PoolBag(bc, {PoolingMode::kMean, true});
  for (int l = 0; l < 5; ++l) {
    double s = 0.0;
    for (int j = 0; j < 6; ++j) s += bc.scores(l, j);
    EXPECT_NEAR(p(l), s / 6, 1e-12);
  }
}

TEST(PoolTest, PooledOutputIsHistogramAndOrderFree) {
  const ModalNetwork net = MakeNet(4, {3}, 5, 2);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    Bag bag = MakeBag(4, 1 + t % 5, rng);
    for (PoolingMode mode : {PoolingMode::kMax, PoolingMode::kMean}) {
      const Vector p = PoolBag(BagConceptOf(net, bag), {mode, true});
      EXPECT_NO_THROW(MakeHistogram(p, HistogramMode::kStrict));
      EXPECT_GT(p.minCoeff(), 0.0);
      Bag shuffled = bag;
      std::vector<int> perm(bag.instance_count());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int j = 0; j < bag.instance_count(); ++j)
        shuffled.instances.col(j) = bag.instances.col(perm[j]);
      const Vector q = PoolBag(BagConceptOf(net, shuffled), {mode, true});
      EXPECT_LE((p - q).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(FuseTest, EqualInputsAreFixedPoints) {
  const Histogram f = MakeHistogram(std::vector<double>{0.2, 0.3, 0.5},
                                    HistogramMode::kStrict);
  for (FusionMode mode : {FusionMode::kMean, FusionMode::kMax}) {
    const Histogram g = FusePredictions(f, f, mode);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(g[i], f[i], 1e-15);
  }
}

TEST(FuseTest, MeanOfOppositePointMasses) {
  const Histogram a = MakeHistogram(std::vector<double>{1, 0}, HistogramMode::kStrict);
  const Histogram b = MakeHistogram(std::vector<double>{0, 1}, HistogramMode::kStrict);
  const Histogram f = FusePredictions(a, b, FusionMode::kMean);
  EXPECT_EQ(f[0], 0.5);
  EXPECT_EQ(f[1], 0.5);
}

TEST(FuseTest, MaxModeAndSymmetry) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const Histogram a = testing::RandomHistogram(5, rng);
    const Histogram b = testing::RandomHistogram(5, rng);
    const Histogram f = FusePredictions(a, b, FusionMode::kMax);
    double total = 0.0;
    for (int i = 0; i < 5; ++i) total += std::max(a[i], b[i]);
    for (int i = 0; i < 5; ++i)
      EXPECT_NEAR(f[i] * total, std::max(a[i], b[i]), 1e-15);
    const Histogram ab = FusePredictions(a, b, FusionMode::kMean);
    const Histogram ba = FusePredictions(b, a, FusionMode::kMean);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(ab[i], ba[i]);
  }
}

TEST(ReconstructionTest, IdentityAutoencoder) {
  ModalNetwork net = MakeNet(3, {3}, 2, 1, true, Activation::kLinear);
  net.encoder[0].weight = Matrix::Identity(3, 3);
  net.encoder[0].bias.setZero();
  net.decoder[0].weight = Matrix::Identity(3, 3);
  net.decoder[0].bias.setZero();
  std::mt19937_64 rng(9);
  EXPECT_NEAR(ReconstructionLoss(net, MakeBag(3, 4, rng)), 0.0, 1e-24);
}

TEST(ReconstructionTest, ZeroDecoderCostsTheSquaredNorm) {
  ModalNetwork net = MakeNet(3, {4}, 2, 1);
  for (Layer& l : net.decoder) {
    l.weight.setZero();
    l.bias.setZero();
  }
  std::mt19937_64 rng(10);
  const Bag bag = MakeBag(3, 4, rng);
  EXPECT_NEAR(ReconstructionLoss(net, bag), bag.instances.squaredNorm(), 1e-12);
}

TEST(ReconstructionTest, MatchesStraightLine) {
  const ModalNetwork net = MakeNet(5, {4, 3}, 2, 12);
  std::mt19937_64 rng(11);
  const Bag bag = MakeBag(5, 3, rng);
  double expected = 0.0;
  for (int j = 0; j < 3; ++j) {
    std::vector<double> h = EncodeByHand(net, bag.instances.col(j));
    for (const Layer& l : net.decoder) h = LayerByHand(l, h);
    for (int i = 0; i < 5; ++i) expected += std::pow(bag.instances(i, j) - h[i], 2);
  }
  EXPECT_NEAR(ReconstructionLoss(net, bag), expected, 1e-12);
}

TEST(ReconstructionTest, NeedsDecoder) {
  const ModalNetwork net = MakeNet(5, {4}, 2, 12, false);
  std::mt19937_64 rng(12);
  try {
    ReconstructionLoss(net, MakeBag(5, 2, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoDecoder);
  }
}

TEST(BackwardTest, ZeroUpstreamGivesZeroGradient) {
  const ModalNetwork net = MakeNet(5, {4}, 3, 13);
  std::mt19937_64 rng(13);
  const Bag bag = MakeBag(5, 3, rng);
  const BagForward fwd = Forward(net, bag, {}, true);
  UpstreamGradient up;
  up.pooled_grad = Vector::Zero(3);
  for (double g : FlattenParameters(Backward(net, bag, fwd, up))) EXPECT_EQ(g, 0.0);
}

TEST(BackwardTest, SingleInstanceMeanPoolIsSoftmaxRegression) {
  ModalNetwork net = MakeNet(4, {3}, 3, 14, false);
  std::mt19937_64 rng(14);
  const Bag bag = MakeBag(4, 1, rng);
  const BagForward fwd = Forward(net, bag, {PoolingMode::kMean, true}, false);
  Vector g(3);
  g << 0.3, -0.1, 0.7;
  UpstreamGradient up;
  up.pooled_grad = g;
  const NetworkGradient grad = Backward(net, bag, fwd, up);
  const Vector p = fwd.pooled;
  const Vector dz = p.cwiseProduct((g.array() - g.dot(p)).matrix());
  const Vector h = EncodeInstance(net, bag.instances.col(0));
  EXPECT_LE((grad.head.weight - dz * h.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((grad.head.bias - dz).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BackwardTest, StaleCacheRejected) {
  const ModalNetwork net = MakeNet(5, {4}, 3, 15);
  std::mt19937_64 rng(15);
  const Bag a = MakeBag(5, 3, rng, "a");
  const Bag b = MakeBag(5, 3, rng, "b");
  const BagForward fwd = Forward(net, a, {}, false);
  UpstreamGradient up;
  up.pooled_grad = Vector::Ones(3);
  try {
    Backward(net, b, fwd, up);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStaleCache);
  }
  up.reconstruction_weight = 1.0;
  try {
    Backward(net, a, fwd, up);  // cache has no reconstruction path
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStaleCache);
  }
}

// Finite differences of <g, pooled> + w * reconstruction over every
// parameter; max-pool parameters whose perturbation changes an argmax are
// skipped.
void CheckLinearisedGradient(PoolingMode mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 8), hid(2, 6), lab(2, 5), inst(1, 4);
  const int d = dim(rng), h = hid(rng), labels = lab(rng), m = inst(rng);
  ModalNetwork net = MakeNet(d, {h}, labels, seed);
  for (double* p : ParameterRefs(net)) *p += 0.1 * std::normal_distribution<>()(rng);
  const Bag bag = MakeBag(d, m, rng);
  const Vector g = RandomGaussian(labels, 1, rng).col(0);
  const double w = 0.3;
  const PoolingOptions pool{mode, true};
  const BagForward fwd = Forward(net, bag, pool, true);
  UpstreamGradient up;
  up.pooled_grad = g;
  up.reconstruction_weight = w;
  const std::vector<double> analytic = FlattenParameters(Backward(net, bag, fwd, up));
  const std::vector<double*> refs = ParameterRefs(net);
  const double step = 1e-5;
  int skipped = 0;
  for (size_t k = 0; k < refs.size(); ++k) {
    const double saved = *refs[k];
    *refs[k] = saved + step;
    const BagForward plus = Forward(net, bag, pool, true);
    *refs[k] = saved - step;
    const BagForward minus = Forward(net, bag, pool, true);
    *refs[k] = saved;
    if (plus.argmax != fwd.argmax || minus.argmax != fwd.argmax) {
      ++skipped;
      continue;
    }
    const double fd = (g.dot(plus.pooled) + w * plus.reconstruction_loss -
                       g.dot(minus.pooled) - w * minus.reconstruction_loss) /
                      (2 * step);
    EXPECT_LE(RelErr(fd, analytic[k], 1e-6), 1e-4) << "parameter " << k;
  }
  EXPECT_LT(skipped, static_cast<int>(refs.size()));
}

TEST(BackwardTest, MatchesFiniteDifferencesMaxPool) {
  for (std::uint64_t s = 0; s < 10; ++s) CheckLinearisedGradient(PoolingMode::kMax, s);
}

TEST(BackwardTest, MatchesFiniteDifferencesMeanPool) {
  for (std::uint64_t s = 0; s < 10; ++s) CheckLinearisedGradient(PoolingMode::kMean, 100 + s);
}

// Composite with the entropic OT objective, whose row-marginal gradient is
// the centered dual.
TEST(BackwardTest, EntropicCompositeMatchesFiniteDifferences) {
  std::mt19937_64 rng(16);
  SinkhornOptions opts;
  opts.max_iter = 100000;
  opts.tol = 1e-13;
  for (int trial = 0; trial < 5; ++trial) {
    ModalNetwork net = MakeNet(4, {3}, 3, 200 + trial, false);
    const Bag bag = MakeBag(4, 3, rng);
    const Histogram target = testing::RandomHistogram(3, rng);
    const CostMatrix cost = testing::RandomCost(3, rng, 0.2);
    const double lambda = 10.0;
    const PoolingOptions pool{PoolingMode::kMean, true};
    auto loss = [&] {
      const BagForward f = Forward(net, bag, pool, false);
      const SinkhornResult r = SinkhornPlan(
          MakeHistogram(f.pooled, HistogramMode::kNormalize), target, cost,
          lambda, opts);
      return EntropicObjective(r.plan, cost, lambda);
    };
    const BagForward fwd = Forward(net, bag, pool, false);
    UpstreamGradient up;
    up.pooled_grad = OtSubgradient(
        MakeHistogram(fwd.pooled, HistogramMode::kNormalize), target, cost,
        lambda, opts);
    const std::vector<double> analytic =
        FlattenParameters(Backward(net, bag, fwd, up));
    const std::vector<double*> refs = ParameterRefs(net);
    for (size_t k = 0; k < refs.size(); ++k) {
      const double saved = *refs[k];
      *refs[k] = saved + 1e-5;
      const double lp = loss();
      *refs[k] = saved - 1e-5;
      const double lm = loss();
      *refs[k] = saved;
      EXPECT_LE(RelErr((lp - lm) / 2e-5, analytic[k], 1e-6), 1e-4);
    }
  }
}

TEST(BackwardTest, MeanPoolGradientIgnoresInstanceOrder) {
  const ModalNetwork net = MakeNet(5, {4}, 3, 17);
  std::mt19937_64 rng(17);
  const Bag bag = MakeBag(5, 4, rng);
  Bag reversed = bag;
  reversed.instances = bag.instances.rowwise().reverse();
  UpstreamGradient up;
  up.pooled_grad = RandomGaussian(3, 1, rng).col(0);
  up.reconstruction_weight = 0.5;
  const PoolingOptions pool{PoolingMode::kMean, true};
  const auto a = FlattenParameters(Backward(net, bag, Forward(net, bag, pool, true), up));
  const auto b = FlattenParameters(
      Backward(net, reversed, Forward(net, reversed, pool, true), up));
  for (size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(NamesTest, RoundTrip) {
  for (Activation a : {Activation::kTanh, Activation::kRelu, Activation::kLinear})
    EXPECT_EQ(ParseActivation(ActivationName(a)), a);
  for (PoolingMode p : {PoolingMode::kMax, PoolingMode::kMean})
    EXPECT_EQ(ParsePooling(PoolingName(p)), p);
  for (FusionMode f : {FusionMode::kMean, FusionMode::kMax})
    EXPECT_EQ(ParseFusion(FusionName(f)), f);
  EXPECT_THROW(ParsePooling("median"), Error);
}

}  // namespace
}  // namespace m3dn
