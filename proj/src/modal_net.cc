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

#include "m3dn/modal_net.h"

#include <cmath>
#include <string>

#include "m3dn/status.h"

namespace m3dn {

std::string ActivationName(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
  }
  return "linear";
}

Activation ParseActivation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "linear") return Activation::kLinear;
  throw Error(ErrorCode::kInvalidConfig, "unknown activation '" + name + "'");
}

std::string PoolingName(PoolingMode p) {
  return p == PoolingMode::kMax ? "max" : "mean";
}

PoolingMode ParsePooling(const std::string& name) {
  if (name == "max") return PoolingMode::kMax;
  if (name == "mean") return PoolingMode::kMean;
  throw Error(ErrorCode::kInvalidConfig, "unknown pooling '" + name + "'");
}

std::string FusionName(FusionMode f) {
  return f == FusionMode::kMean ? "mean" : "max";
}

FusionMode ParseFusion(const std::string& name) {
  if (name == "mean") return FusionMode::kMean;
  if (name == "max") return FusionMode::kMax;
  throw Error(ErrorCode::kInvalidConfig, "unknown fusion '" + name + "'");
}

namespace {

Layer MakeLayer(int in, int out, Activation activation, std::mt19937_64& rng) {
  Layer layer;
  layer.weight.resize(out, in);
  layer.bias = Vector::Zero(out);
  layer.activation = activation;
  const double limit = std::sqrt(3.0 / in);
  std::uniform_real_distribution<double> dist(-limit, limit);
  // Row-major draw order keeps initialization independent of Eigen storage.
  for (int i = 0; i < out; ++i)
    for (int j = 0; j < in; ++j) layer.weight(i, j) = dist(rng);
  return layer;
}

Matrix Apply(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::kTanh: return z.array().tanh().matrix();
    case Activation::kRelu: return z.cwiseMax(0.0);
    case Activation::kLinear: return z;
  }
  return z;
}

// Elementwise derivative given pre-activation z and output y.
Matrix Derivative(Activation a, const Matrix& z, const Matrix& y) {
  switch (a) {
    case Activation::kTanh: return (1.0 - y.array().square()).matrix();
    case Activation::kRelu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::kLinear: return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

Matrix Affine(const Layer& layer, const Matrix& x) {
  return (layer.weight * x).colwise() + layer.bias;
}

Matrix ColumnSoftmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double shift = logits.col(j).maxCoeff();
    const Vector e = (logits.col(j).array() - shift).exp().matrix();
    out.col(j) = e / e.sum();
  }
  return out;
}

void CheckFinite(const Matrix& m, const std::string& where) {
  Require(m.allFinite(), ErrorCode::kNonFiniteActivation,
          "non-finite activation in " + where);
}

void CheckInput(const ModalNetwork& net, const Bag& bag) {
  Require(bag.instance_count() >= 1, ErrorCode::kInvalidArgument,
          "bag '" + bag.bag_id + "' has no instances");
  Require(bag.feature_dim() == net.input_dim(), ErrorCode::kDimensionMismatch,
          "bag '" + bag.bag_id + "' has feature dimension " +
              std::to_string(bag.feature_dim()) + ", network expects " +
              std::to_string(net.input_dim()));
  Require(bag.instances.allFinite(), ErrorCode::kInvalidArgument,
          "bag '" + bag.bag_id + "' has non-finite features");
}

// Backpropagates `grad_out` (dLoss/dOutput of the stack) through `layers`,
// accumulating into `grads`; returns dLoss/dInput.
Matrix BackpropStack(const std::vector<Layer>& layers,
                     const std::vector<Matrix>& pre,
                     const std::vector<Matrix>& post, Matrix grad_out,
                     std::vector<Layer>& grads) {
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const Matrix& y = post[l + 1];
    const Matrix dz =
        grad_out.cwiseProduct(Derivative(layers[l].activation, pre[l], y));
    grads[l].weight += dz * post[l].transpose();
    grads[l].bias += dz.rowwise().sum();
    grad_out = layers[l].weight.transpose() * dz;
  }
  return grad_out;
}

}  // namespace

ModalNetwork InitNetwork(const NetworkConfig& config, std::mt19937_64& rng,
                         std::mt19937_64& decoder_rng) {
  Require(config.input_dim >= 1 && config.label_count >= 2,
          ErrorCode::kInvalidConfig,
          "network needs input_dim >= 1 and label_count >= 2");
  ModalNetwork net;
  std::vector<int> dims = {config.input_dim};
  for (int w : config.hidden_widths) {
    Require(w >= 1, ErrorCode::kInvalidConfig, "hidden widths must be >= 1");
    dims.push_back(w);
  }
  for (size_t l = 0; l + 1 < dims.size(); ++l)
    net.encoder.push_back(
        MakeLayer(dims[l], dims[l + 1], config.activation, rng));
  net.head = MakeLayer(dims.back(), config.label_count, Activation::kLinear,
                       rng);
  if (config.with_decoder) {
    for (size_t l = dims.size() - 1; l >= 1; --l) {
      const bool last = l == 1;
      net.decoder.push_back(MakeLayer(dims[l], dims[l - 1],
                                      last ? Activation::kLinear
                                           : config.activation,
                                      decoder_rng));
    }
    if (dims.size() == 1) {
      net.decoder.push_back(MakeLayer(dims[0], dims[0], Activation::kLinear,
                                      decoder_rng));
    }
  }
  return net;
}

void ValidateNetwork(const ModalNetwork& net) {
  int width = net.input_dim();
  for (const Layer& layer : net.encoder) {
    Require(layer.in() == width && layer.bias.size() == layer.out(),
            ErrorCode::kDimensionMismatch, "encoder layers do not chain");
    width = layer.out();
  }
  Require(net.head.in() == width && net.head.bias.size() == net.head.out(),
          ErrorCode::kDimensionMismatch, "label head does not match encoder");
  Require(net.head.out() >= 2, ErrorCode::kDimensionMismatch,
          "label head needs at least two outputs");
  if (net.has_decoder()) {
    int w = width;
    for (const Layer& layer : net.decoder) {
      Require(layer.in() == w && layer.bias.size() == layer.out(),
              ErrorCode::kDimensionMismatch, "decoder layers do not chain");
      w = layer.out();
    }
    Require(w == net.input_dim(), ErrorCode::kDimensionMismatch,
            "decoder does not map back to the input dimension");
  }
}

NetworkGradient ZeroGradient(const ModalNetwork& net) {
  NetworkGradient g = net;
  auto zero = [](Layer& l) {
    l.weight.setZero();
    l.bias.setZero();
  };
  for (Layer& l : g.encoder) zero(l);
  zero(g.head);
  for (Layer& l : g.decoder) zero(l);
  return g;
}

void AddScaled(ModalNetwork& net, const NetworkGradient& grad, double alpha) {
  auto add = [alpha](Layer& l, const Layer& g) {
    l.weight += alpha * g.weight;
    l.bias += alpha * g.bias;
  };
  Require(net.encoder.size() == grad.encoder.size() &&
              net.decoder.size() == grad.decoder.size(),
          ErrorCode::kDimensionMismatch, "gradient layout differs");
  for (size_t l = 0; l < net.encoder.size(); ++l)
    add(net.encoder[l], grad.encoder[l]);
  add(net.head, grad.head);
  for (size_t l = 0; l < net.decoder.size(); ++l)
    add(net.decoder[l], grad.decoder[l]);
}

std::vector<double*> ParameterRefs(ModalNetwork& net) {
  std::vector<double*> refs;
  auto push = [&refs](Layer& l) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i)
      refs.push_back(l.weight.data() + i);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i)
      refs.push_back(l.bias.data() + i);
  };
  for (Layer& l : net.encoder) push(l);
  push(net.head);
  for (Layer& l : net.decoder) push(l);
  return refs;
}

std::vector<double> FlattenParameters(const ModalNetwork& net) {
  ModalNetwork copy = net;
  std::vector<double> out;
  for (double* p : ParameterRefs(copy)) out.push_back(*p);
  return out;
}

Vector EncodeInstance(const ModalNetwork& net, const Vector& x) {
  Require(x.size() == net.input_dim(), ErrorCode::kDimensionMismatch,
          "instance has dimension " + std::to_string(x.size()) +
              ", network expects " + std::to_string(net.input_dim()));
  Matrix h = x;
  for (const Layer& layer : net.encoder) h = Apply(layer.activation,
                                                   Affine(layer, h));
  CheckFinite(h, "encoder");
  return h.col(0);
}

BagForward Forward(const ModalNetwork& net, const Bag& bag,
                   const PoolingOptions& pooling, bool with_reconstruction) {
  CheckInput(net, bag);
  BagForward f;
  f.bag_id = bag.bag_id;
  f.instance_count = bag.instance_count();
  f.pooling = pooling;
  f.encoder_post.push_back(bag.instances);
  for (const Layer& layer : net.encoder) {
    f.encoder_pre.push_back(Affine(layer, f.encoder_post.back()));
    f.encoder_post.push_back(Apply(layer.activation, f.encoder_pre.back()));
  }
  f.hidden = f.encoder_post.back();
  CheckFinite(f.hidden, "encoder of bag '" + bag.bag_id + "'");
  f.bag_concept.scores = ColumnSoftmax(Affine(net.head, f.hidden));
  CheckFinite(f.bag_concept.scores, "bag concept of '" + bag.bag_id + "'");

  const Matrix& y = f.bag_concept.scores;
  const int labels = static_cast<int>(y.rows());
  if (pooling.mode == PoolingMode::kMax) {
    f.pooled_raw.resize(labels);
    f.argmax.assign(labels, 0);
    for (int k = 0; k < labels; ++k) {
      int best = 0;
      for (int j = 1; j < y.cols(); ++j)
        if (y(k, j) > y(k, best)) best = j;
      f.argmax[k] = best;
      f.pooled_raw(k) = y(k, best);
    }
    f.pooled = pooling.renormalize ? Vector(f.pooled_raw / f.pooled_raw.sum())
                                   : f.pooled_raw;
  } else {
    f.pooled_raw = y.rowwise().mean();
    f.pooled = f.pooled_raw;
  }

  if (with_reconstruction) {
    Require(net.has_decoder(), ErrorCode::kNoDecoder,
            "network has no decoder");
    f.has_reconstruction = true;
    f.decoder_post.push_back(f.hidden);
    for (const Layer& layer : net.decoder) {
      f.decoder_pre.push_back(Affine(layer, f.decoder_post.back()));
      f.decoder_post.push_back(Apply(layer.activation, f.decoder_pre.back()));
    }
    CheckFinite(f.decoder_post.back(), "decoder of bag '" + bag.bag_id + "'");
    f.reconstruction_loss =
        (bag.instances - f.decoder_post.back()).squaredNorm();
  }
  return f;
}

BagConcept BagConceptOf(const ModalNetwork& net, const Bag& bag) {
  return Forward(net, bag, PoolingOptions{}, false).bag_concept;
}

Vector PoolBag(const BagConcept& bag_concept, const PoolingOptions& options) {
  const Matrix& y = bag_concept.scores;
  Require(y.cols() >= 1 && y.rows() >= 2, ErrorCode::kInvalidArgument,
          "bag concept is empty");
  if (options.mode == PoolingMode::kMean) return y.rowwise().mean();
  Vector raw = y.rowwise().maxCoeff();
  if (options.renormalize) raw /= raw.sum();
  return raw;
}

Histogram FusePredictions(const Histogram& f1, const Histogram& f2,
                          FusionMode mode) {
  Require(f1.size() == f2.size(), ErrorCode::kDimensionMismatch,
          "predictions differ in length");
  const Vector a = f1.AsVector();
  const Vector b = f2.AsVector();
  if (mode == FusionMode::kMean) {
    return MakeHistogram(Vector(0.5 * (a + b)), HistogramMode::kNormalize);
  }
  return MakeHistogram(Vector(a.cwiseMax(b)), HistogramMode::kNormalize);
}

double ReconstructionLoss(const ModalNetwork& net, const Bag& bag) {
  Require(net.has_decoder(), ErrorCode::kNoDecoder, "network has no decoder");
  return Forward(net, bag, PoolingOptions{}, true).reconstruction_loss;
}

NetworkGradient Backward(const ModalNetwork& net, const Bag& bag,
                         const BagForward& cache,
                         const UpstreamGradient& upstream) {
  Require(cache.bag_id == bag.bag_id &&
              cache.instance_count == bag.instance_count() &&
              cache.encoder_post.size() == net.encoder.size() + 1 &&
              cache.encoder_post.front().rows() == bag.feature_dim(),
          ErrorCode::kStaleCache,
          "cached forward pass belongs to bag '" + cache.bag_id +
              "', not '" + bag.bag_id + "'");
  NetworkGradient grads = ZeroGradient(net);
  const int m = cache.instance_count;
  Matrix d_hidden = Matrix::Zero(net.hidden_dim(), m);

  if (upstream.pooled_grad.has_value()) {
    const Vector& g = *upstream.pooled_grad;
    const Matrix& y = cache.bag_concept.scores;
    Require(g.size() == y.rows(), ErrorCode::kDimensionMismatch,
            "pooled gradient has wrong length");
    Matrix d_scores = Matrix::Zero(y.rows(), m);
    if (cache.pooling.mode == PoolingMode::kMax) {
      Vector d_raw = g;
      if (cache.pooling.renormalize) {
        const double s = cache.pooled_raw.sum();
        d_raw = (g.array() - g.dot(cache.pooled)).matrix() / s;
      }
      for (int k = 0; k < y.rows(); ++k) d_scores(k, cache.argmax[k]) = d_raw(k);
    } else {
      d_scores = g.replicate(1, m) / static_cast<double>(m);
    }
    // Softmax Jacobian per column: dz = y * (dy - <dy, y>).
    Matrix d_logits(y.rows(), m);
    for (int j = 0; j < m; ++j) {
      const double inner = d_scores.col(j).dot(y.col(j));
      d_logits.col(j) =
          y.col(j).cwiseProduct((d_scores.col(j).array() - inner).matrix());
    }
    grads.head.weight += d_logits * cache.hidden.transpose();
    grads.head.bias += d_logits.rowwise().sum();
    d_hidden += net.head.weight.transpose() * d_logits;
  }

  if (upstream.reconstruction_weight != 0.0) {
    Require(net.has_decoder(), ErrorCode::kNoDecoder, "network has no decoder");
    Require(cache.has_reconstruction, ErrorCode::kStaleCache,
            "forward pass did not cache the reconstruction path");
    const Matrix d_recon = -2.0 * upstream.reconstruction_weight *
                           (bag.instances - cache.decoder_post.back());
    d_hidden += BackpropStack(net.decoder, cache.decoder_pre,
                              cache.decoder_post, d_recon, grads.decoder);
  }

  BackpropStack(net.encoder, cache.encoder_pre, cache.encoder_post, d_hidden,
                grads.encoder);
  return grads;
}

}  // namespace m3dn
