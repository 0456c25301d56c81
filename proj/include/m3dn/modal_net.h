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

#ifndef M3DN_MODAL_NET_H_
#define M3DN_MODAL_NET_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "m3dn/histogram.h"
#include "m3dn/linalg.h"

namespace m3dn {

// A bag of instances from one modality. Instances are stored column-wise:
// `instances` is d_v x m.
struct Bag {
  int modality = 1;
  std::string bag_id;
  Matrix instances;

  int instance_count() const { return static_cast<int>(instances.cols()); }
  int feature_dim() const { return static_cast<int>(instances.rows()); }
};

enum class Activation { kTanh, kRelu, kLinear };
enum class PoolingMode { kMax, kMean };
enum class FusionMode { kMean, kMax };

std::string ActivationName(Activation a);
Activation ParseActivation(const std::string& name);
std::string PoolingName(PoolingMode p);
PoolingMode ParsePooling(const std::string& name);
std::string FusionName(FusionMode f);
FusionMode ParseFusion(const std::string& name);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kLinear;

  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }
};

// One modality's network: an encoder stack from d_v to the hidden width h,
// the label head (W_v, b_v) feeding a per-instance softmax, and an optional
// decoder mapping h back to d_v for reconstruction.
struct ModalNetwork {
  std::vector<Layer> encoder;
  Layer head;
  std::vector<Layer> decoder;

  int input_dim() const {
    return encoder.empty() ? head.in() : encoder.front().in();
  }
  int hidden_dim() const { return head.in(); }
  int label_count() const { return head.out(); }
  bool has_decoder() const { return !decoder.empty(); }
};

// Gradients share the parameter layout.
using NetworkGradient = ModalNetwork;

struct NetworkConfig {
  int input_dim = 0;
  std::vector<int> hidden_widths = {16, 16};
  int label_count = 0;
  Activation activation = Activation::kTanh;
  bool with_decoder = true;
};

// Symmetric-uniform fan-in initialization, U(-sqrt(3/fan_in), sqrt(3/fan_in))
// for weights and zero biases. The decoder draws from `decoder_rng` so that
// encoder and head parameters do not depend on whether a decoder exists.
ModalNetwork InitNetwork(const NetworkConfig& config, std::mt19937_64& rng,
                         std::mt19937_64& decoder_rng);

// Throws kDimensionMismatch if layer shapes do not chain.
void ValidateNetwork(const ModalNetwork& net);

NetworkGradient ZeroGradient(const ModalNetwork& net);
// net += alpha * grad, parameter-wise.
void AddScaled(ModalNetwork& net, const NetworkGradient& grad, double alpha);
// Pointers to every scalar parameter in a fixed order: per layer (encoder,
// head, decoder) the weight in column-major order then the bias.
std::vector<double*> ParameterRefs(ModalNetwork& net);
std::vector<double> FlattenParameters(const ModalNetwork& net);

// Forward pass through the encoder. Errors: kDimensionMismatch,
// kNonFiniteActivation.
Vector EncodeInstance(const ModalNetwork& net, const Vector& x);

// L x m matrix of per-instance softmax label distributions.
struct BagConcept {
  Matrix scores;
};

BagConcept BagConceptOf(const ModalNetwork& net, const Bag& bag);

struct PoolingOptions {
  PoolingMode mode = PoolingMode::kMax;
  bool renormalize = true;
};

// Row-wise max (optionally renormalized) or column mean of the bag concept.
// Returns a point on the simplex except for max mode without
// renormalization, which returns the raw maxima.
Vector PoolBag(const BagConcept& bag_concept, const PoolingOptions& options);

// Mean mode averages; max mode takes elementwise max then renormalizes.
Histogram FusePredictions(const Histogram& f1, const Histogram& f2,
                          FusionMode mode);

// Sum over instances of ||x - decoder(encoder(x))||^2. Throws kNoDecoder.
double ReconstructionLoss(const ModalNetwork& net, const Bag& bag);

// Activations cached by Forward for a single bag.
struct BagForward {
  std::string bag_id;
  int instance_count = 0;
  std::vector<Matrix> encoder_pre;   // pre-activations per encoder layer
  std::vector<Matrix> encoder_post;  // layer inputs; [0] is the bag itself
  Matrix hidden;                     // h x m
  BagConcept bag_concept;
  Vector pooled_raw;                 // before renormalization
  Vector pooled;                     // prediction f_v
  std::vector<int> argmax;           // max mode: winning column per label
  PoolingOptions pooling;
  bool has_reconstruction = false;
  std::vector<Matrix> decoder_pre;
  std::vector<Matrix> decoder_post;  // [0] is hidden, back is reconstruction
  double reconstruction_loss = 0.0;
};

BagForward Forward(const ModalNetwork& net, const Bag& bag,
                   const PoolingOptions& pooling, bool with_reconstruction);

// The loss-side inputs of one backward pass: dLoss/dPooled for the label
// path and a weight on the reconstruction loss.
struct UpstreamGradient {
  std::optional<Vector> pooled_grad;
  double reconstruction_weight = 0.0;
};

// Reverse-mode gradients of
//   <pooled_grad, f_v> + reconstruction_weight * ReconstructionLoss
// with respect to every parameter. Max pooling routes each row to its
// argmax column (lowest index on ties). Throws kStaleCache if `cache` was
// produced for a different bag, kNoDecoder when reconstruction is requested
// on a network without a decoder.
NetworkGradient Backward(const ModalNetwork& net, const Bag& bag,
                         const BagForward& cache,
                         const UpstreamGradient& upstream);

}  // namespace m3dn

#endif  // M3DN_MODAL_NET_H_
