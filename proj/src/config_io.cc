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

#include "m3dn/config_io.h"

#include <cmath>
#include <set>

#include "m3dn/status.h"

namespace m3dn {
namespace {

[[noreturn]] void Fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kInvalidConfig, path + ": " + msg);
}

std::string Join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void RejectUnknown(const Json& j, const std::string& prefix,
                   const std::set<std::string>& known) {
  if (!j.is_object()) Fail(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) Fail(Join(prefix, it.key()), "unknown field");
}

double GetNumber(const Json& j, const std::string& path) {
  if (!j.is_number()) Fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) Fail(path, "must be finite");
  return v;
}

long long GetInteger(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) Fail(path, "expected an integer");
  return j.get<long long>();
}

bool GetBool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) Fail(path, "expected true or false");
  return j.get<bool>();
}

std::string GetString(const Json& j, const std::string& path) {
  if (!j.is_string()) Fail(path, "expected a string");
  return j.get<std::string>();
}

template <typename Fn>
auto Rethrow(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    Fail(path, e.detail());
  }
}

std::pair<int, int> GetRange(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) Fail(path, "expected [min, max]");
  return {static_cast<int>(GetInteger(j[0], path + "[0]")),
          static_cast<int>(GetInteger(j[1], path + "[1]"))};
}

}  // namespace

Json ParseJsonText(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, what + ": " + e.what());
  }
}

TrainingConfig TrainingConfigFromJson(const Json& j) {
  RejectUnknown(j, "",
                {"lambda", "lambda1", "learning_rate", "schedule", "max_epochs",
                 "batch_size", "epsilon", "semi_supervised", "ae_weight",
                 "pooling", "fusion", "fixed_metric", "seed", "hidden_widths",
                 "activation", "sinkhorn", "kernel_rule", "reference_ridge",
                 "threads"});
  TrainingConfig c;
  if (j.contains("lambda")) c.lambda = GetNumber(j["lambda"], "lambda");
  if (j.contains("lambda1")) c.lambda1 = GetNumber(j["lambda1"], "lambda1");
  if (j.contains("learning_rate"))
    c.learning_rate = GetNumber(j["learning_rate"], "learning_rate");
  if (j.contains("schedule"))
    c.schedule = Rethrow("schedule", [&] {
      return ParseSchedule(GetString(j["schedule"], "schedule"));
    });
  if (j.contains("max_epochs"))
    c.max_epochs = static_cast<int>(GetInteger(j["max_epochs"], "max_epochs"));
  if (j.contains("batch_size"))
    c.batch_size = static_cast<int>(GetInteger(j["batch_size"], "batch_size"));
  if (j.contains("epsilon")) c.epsilon = GetNumber(j["epsilon"], "epsilon");
  if (j.contains("semi_supervised"))
    c.semi_supervised = GetBool(j["semi_supervised"], "semi_supervised");
  if (j.contains("ae_weight")) c.ae_weight = GetNumber(j["ae_weight"], "ae_weight");
  if (j.contains("pooling"))
    c.pooling = Rethrow("pooling", [&] {
      return ParsePooling(GetString(j["pooling"], "pooling"));
    });
  if (j.contains("fusion"))
    c.fusion = Rethrow("fusion", [&] {
      return ParseFusion(GetString(j["fusion"], "fusion"));
    });
  if (j.contains("fixed_metric"))
    c.fixed_metric = GetBool(j["fixed_metric"], "fixed_metric");
  if (j.contains("seed")) {
    const long long s = GetInteger(j["seed"], "seed");
    if (s < 0) Fail("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("hidden_widths")) {
    const Json& w = j["hidden_widths"];
    if (!w.is_array()) Fail("hidden_widths", "expected an array");
    c.hidden_widths.clear();
    for (size_t i = 0; i < w.size(); ++i)
      c.hidden_widths.push_back(static_cast<int>(
          GetInteger(w[i], "hidden_widths[" + std::to_string(i) + "]")));
  }
  if (j.contains("activation"))
    c.activation = Rethrow("activation", [&] {
      return ParseActivation(GetString(j["activation"], "activation"));
    });
  if (j.contains("sinkhorn")) {
    const Json& s = j["sinkhorn"];
    RejectUnknown(s, "sinkhorn", {"max_iter", "tol"});
    if (s.contains("max_iter"))
      c.sinkhorn.max_iter =
          static_cast<int>(GetInteger(s["max_iter"], "sinkhorn.max_iter"));
    if (s.contains("tol")) c.sinkhorn.tol = GetNumber(s["tol"], "sinkhorn.tol");
  }
  if (j.contains("kernel_rule")) {
    const std::string r = GetString(j["kernel_rule"], "kernel_rule");
    if (r == "stationary") {
      c.kernel_rule = KernelUpdateRule::kStationary;
    } else if (r == "literal") {
      c.kernel_rule = KernelUpdateRule::kLiteral;
    } else {
      Fail("kernel_rule", "unknown value '" + r + "'");
    }
  }
  if (j.contains("reference_ridge"))
    c.reference_ridge = GetNumber(j["reference_ridge"], "reference_ridge");
  if (j.contains("threads"))
    c.threads = static_cast<int>(GetInteger(j["threads"], "threads"));
  ValidateTrainingConfig(c);
  return c;
}

Json TrainingConfigToJson(const TrainingConfig& c) {
  Json j;
  j["lambda"] = c.lambda;
  j["lambda1"] = c.lambda1;
  j["learning_rate"] = c.learning_rate;
  j["schedule"] = ScheduleName(c.schedule);
  j["max_epochs"] = c.max_epochs;
  j["batch_size"] = c.batch_size;
  j["epsilon"] = c.epsilon;
  j["semi_supervised"] = c.semi_supervised;
  j["ae_weight"] = c.ae_weight;
  j["pooling"] = PoolingName(c.pooling);
  j["fusion"] = FusionName(c.fusion);
  j["fixed_metric"] = c.fixed_metric;
  j["seed"] = c.seed;
  j["hidden_widths"] = c.hidden_widths;
  j["activation"] = ActivationName(c.activation);
  j["sinkhorn"] = {{"max_iter", c.sinkhorn.max_iter}, {"tol", c.sinkhorn.tol}};
  j["kernel_rule"] =
      c.kernel_rule == KernelUpdateRule::kStationary ? "stationary" : "literal";
  j["reference_ridge"] = c.reference_ridge;
  j["threads"] = c.threads;
  return j;
}

GeneratorConfig GeneratorConfigFromJson(const Json& j) {
  RejectUnknown(j, "",
                {"label_count", "bag_count", "instance_count_range",
                 "feature_dims", "latent_label_correlation", "group_size",
                 "group_correlation", "label_prior", "noise_level",
                 "background_rate",
                 "labeled_fraction", "test_fraction",
                 "missing_modality_fraction", "seed"});
  GeneratorConfig c;
  if (j.contains("label_count"))
    c.label_count = static_cast<int>(GetInteger(j["label_count"], "label_count"));
  if (j.contains("bag_count"))
    c.bag_count = static_cast<int>(GetInteger(j["bag_count"], "bag_count"));
  if (j.contains("instance_count_range")) {
    const Json& r = j["instance_count_range"];
    RejectUnknown(r, "instance_count_range", {"m1", "m2"});
    if (r.contains("m1")) c.instances_m1 = GetRange(r["m1"], "instance_count_range.m1");
    if (r.contains("m2")) c.instances_m2 = GetRange(r["m2"], "instance_count_range.m2");
  }
  if (j.contains("feature_dims")) {
    const Json& d = j["feature_dims"];
    if (!d.is_array() || d.size() != 2) Fail("feature_dims", "expected [d_1, d_2]");
    c.d1 = static_cast<int>(GetInteger(d[0], "feature_dims[0]"));
    c.d2 = static_cast<int>(GetInteger(d[1], "feature_dims[1]"));
  }
  if (j.contains("latent_label_correlation")) {
    const Json& r = j["latent_label_correlation"];
    if (r.is_string()) {
      if (r.get<std::string>() != "random-psd")
        Fail("latent_label_correlation",
             "expected \"random-psd\" or an L x L matrix");
    } else {
      if (!r.is_array()) Fail("latent_label_correlation", "expected a matrix");
      const size_t n = r.size();
      Matrix m(n, n);
      for (size_t a = 0; a < n; ++a) {
        const std::string row = "latent_label_correlation[" + std::to_string(a) + "]";
        if (!r[a].is_array() || r[a].size() != n) Fail(row, "expected a square matrix");
        for (size_t b = 0; b < n; ++b)
          m(a, b) = GetNumber(r[a][b], row + "[" + std::to_string(b) + "]");
      }
      c.latent_label_correlation = m;
    }
  }
  if (j.contains("group_size"))
    c.group_size = static_cast<int>(GetInteger(j["group_size"], "group_size"));
  if (j.contains("group_correlation"))
    c.group_correlation = GetNumber(j["group_correlation"], "group_correlation");
  if (j.contains("label_prior"))
    c.label_prior = GetNumber(j["label_prior"], "label_prior");
  if (j.contains("background_rate"))
    c.background_rate = GetNumber(j["background_rate"], "background_rate");
  if (j.contains("noise_level"))
    c.noise_level = GetNumber(j["noise_level"], "noise_level");
  if (j.contains("labeled_fraction"))
    c.labeled_fraction = GetNumber(j["labeled_fraction"], "labeled_fraction");
  if (j.contains("test_fraction"))
    c.test_fraction = GetNumber(j["test_fraction"], "test_fraction");
  if (j.contains("missing_modality_fraction"))
    c.missing_modality_fraction =
        GetNumber(j["missing_modality_fraction"], "missing_modality_fraction");
  if (j.contains("seed")) {
    const long long s = GetInteger(j["seed"], "seed");
    if (s < 0) Fail("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  ValidateGeneratorConfig(c);
  return c;
}

Json GeneratorConfigToJson(const GeneratorConfig& c) {
  Json j;
  j["label_count"] = c.label_count;
  j["bag_count"] = c.bag_count;
  j["instance_count_range"] = {
      {"m1", {c.instances_m1.first, c.instances_m1.second}},
      {"m2", {c.instances_m2.first, c.instances_m2.second}}};
  j["feature_dims"] = {c.d1, c.d2};
  if (c.latent_label_correlation) {
    Json m = Json::array();
    const Matrix& r = *c.latent_label_correlation;
    for (Eigen::Index a = 0; a < r.rows(); ++a) {
      Json row = Json::array();
      for (Eigen::Index b = 0; b < r.cols(); ++b) row.push_back(r(a, b));
      m.push_back(std::move(row));
    }
    j["latent_label_correlation"] = std::move(m);
  } else {
    j["latent_label_correlation"] = "random-psd";
  }
  j["group_size"] = c.group_size;
  j["group_correlation"] = c.group_correlation;
  j["label_prior"] = c.label_prior;
  j["noise_level"] = c.noise_level;
  j["background_rate"] = c.background_rate;
  j["labeled_fraction"] = c.labeled_fraction;
  j["test_fraction"] = c.test_fraction;
  j["missing_modality_fraction"] = c.missing_modality_fraction;
  j["seed"] = c.seed;
  return j;
}

}  // namespace m3dn
