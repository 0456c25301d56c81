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

#include "m3dn/checkpoint.h"

#include "m3dn/config_io.h"
#include "m3dn/dataset.h"
#include "m3dn/status.h"

namespace m3dn {
namespace {

Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix MatrixFromJson(const Json& j, const std::string& what) {
  Require(j.is_array() && !j.empty(), ErrorCode::kParseError,
          what + ": expected a nonempty matrix");
  const size_t cols = j.front().size();
  Matrix m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    Require(j[i].is_array() && j[i].size() == cols,
            ErrorCode::kDimensionMismatch, what + ": ragged rows");
    for (size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Json LayerToJson(const Layer& l) {
  Json j;
  j["rows"] = l.out();
  j["cols"] = l.in();
  j["activation"] = ActivationName(l.activation);
  j["weight"] = std::vector<double>(l.weight.data(),
                                    l.weight.data() + l.weight.size());
  j["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
  return j;
}

Layer LayerFromJson(const Json& j, const std::string& what) {
  Layer l;
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  l.activation = ParseActivation(j.at("activation").get<std::string>());
  const auto w = j.at("weight").get<std::vector<double>>();
  const auto b = j.at("bias").get<std::vector<double>>();
  Require(rows >= 1 && cols >= 1 &&
              w.size() == static_cast<size_t>(rows) * cols &&
              b.size() == static_cast<size_t>(rows),
          ErrorCode::kDimensionMismatch, what + ": parameter count mismatch");
  l.weight = Eigen::Map<const Matrix>(w.data(), rows, cols);
  l.bias = Eigen::Map<const Vector>(b.data(), rows);
  return l;
}

Json NetToJson(const ModalNetwork& net) {
  Json j;
  Json enc = Json::array();
  for (const Layer& l : net.encoder) enc.push_back(LayerToJson(l));
  j["encoder"] = std::move(enc);
  j["head"] = LayerToJson(net.head);
  Json dec = Json::array();
  for (const Layer& l : net.decoder) dec.push_back(LayerToJson(l));
  j["decoder"] = std::move(dec);
  return j;
}

ModalNetwork NetFromJson(const Json& j, const std::string& what) {
  ModalNetwork net;
  for (const Json& l : j.at("encoder"))
    net.encoder.push_back(LayerFromJson(l, what + ".encoder"));
  net.head = LayerFromJson(j.at("head"), what + ".head");
  for (const Json& l : j.at("decoder"))
    net.decoder.push_back(LayerFromJson(l, what + ".decoder"));
  ValidateNetwork(net);
  return net;
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& c) {
  Json j;
  j["format"] = "m3dn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = TrainingConfigToJson(c.config);
  j["seed"] = c.config.seed;
  j["label_names"] = c.label_names;
  j["epoch"] = c.state.epoch;
  j["steps"] = c.state.steps;
  j["skipped_examples"] = c.state.skipped_examples;
  j["objective_history"] = c.state.objective_history;
  j["networks"] = {{"m1", NetToJson(c.state.net1)},
                   {"m2", NetToJson(c.state.net2)}};
  j["kernel"] = MatrixToJson(c.state.kernel.entries());
  j["reference_kernel"] = MatrixToJson(c.state.reference.entries());
  return j.dump(1) + "\n";
}

Checkpoint ParseCheckpoint(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("checkpoint: ") + e.what());
  }
  try {
    Require(j.value("format", "") == "m3dn-checkpoint", ErrorCode::kParseError,
            "not a checkpoint file");
    const int version = j.at("version").get<int>();
    Require(version == kCheckpointVersion, ErrorCode::kSchemaVersionMismatch,
            "checkpoint version " + std::to_string(version) +
                ", reader supports " + std::to_string(kCheckpointVersion));
    TrainingConfig cfg = TrainingConfigFromJson(j.at("config"));
    ModalNetwork net1 = NetFromJson(j.at("networks").at("m1"), "networks.m1");
    ModalNetwork net2 = NetFromJson(j.at("networks").at("m2"), "networks.m2");
    const SimilarityKernel kernel =
        SimilarityKernel::FromMatrix(MatrixFromJson(j.at("kernel"), "kernel"));
    const SimilarityKernel reference = SimilarityKernel::FromMatrix(
        MatrixFromJson(j.at("reference_kernel"), "reference_kernel"), true);
    const auto names = j.at("label_names").get<std::vector<std::string>>();
    const int labels = net1.label_count();
    Require(net2.label_count() == labels && kernel.size() == labels &&
                reference.size() == labels &&
                static_cast<int>(names.size()) == labels,
            ErrorCode::kDimensionMismatch,
            "checkpoint components disagree on the label count");
    TrainingState state{std::move(net1), std::move(net2), kernel, reference,
                        CostFromKernel(kernel), 0, {}, 0, 0};
    state.epoch = j.at("epoch").get<int>();
    state.steps = j.at("steps").get<long long>();
    state.skipped_examples = j.at("skipped_examples").get<int>();
    state.objective_history =
        j.at("objective_history").get<std::vector<double>>();
    return Checkpoint{std::move(cfg), names, std::move(state)};
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("checkpoint: ") + e.what());
  }
}

void WriteCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  WriteFileBytes(path, SerializeCheckpoint(ckpt));
}

Checkpoint ReadCheckpoint(const std::string& path) {
  return ParseCheckpoint(ReadFileBytes(path));
}

}  // namespace m3dn
