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

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "m3dn/checkpoint.h"
#include "m3dn/cli.h"
#include "m3dn/config_io.h"
#include "m3dn/dataset.h"
#include "m3dn/generator.h"
#include "m3dn/ground_metric.h"

namespace m3dn {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Manifest {
  std::string command;
  Json config;
  std::uint64_t seed = 0;
  Json inputs = Json::object();
  std::vector<std::string> artifacts;
  Clock::time_point start = Clock::now();
};

void WriteManifest(const Manifest& m, const std::string& path) {
  Json j;
  j["tool"] = "m3dn";
  j["version"] = kToolVersion;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  std::vector<std::string> artifacts = m.artifacts;
  artifacts.push_back(path);
  j["artifacts"] = artifacts;
  j["timings"] = {
      {"wall_seconds",
       std::chrono::duration<double>(Clock::now() - m.start).count()}};
  WriteFileBytes(path, j.dump(2) + "\n");
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json CriterionJson(const Criterion& c) {
  return c.value ? Json(*c.value) : Json(nullptr);
}

// Threads: flag, then M3DN_THREADS, then the config value.
void ApplyThreads(TrainingConfig& cfg, int flag) {
  if (flag != -1) {
    cfg.threads = flag;
  } else if (const char* env = std::getenv("M3DN_THREADS")) {
    try {
      cfg.threads = std::stoi(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig,
                  "M3DN_THREADS: expected an integer, got '" +
                      std::string(env) + "'");
    }
  }
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  Require(!ec && fs::is_directory(dir), ErrorCode::kIoError,
          "cannot create directory '" + dir + "'");
}

// Rows used for training: untagged or tagged "train".
M3Dataset TrainingRows(const M3Dataset& data, bool labeled) {
  std::vector<Example> rows;
  for (const Example& e : data.examples) {
    if (!e.split.empty() && e.split != "train") continue;
    if (e.labels.has_value() == labeled) rows.push_back(e);
  }
  return data.WithExamples(std::move(rows));
}

std::string ReplaceExtension(const std::string& path, const std::string& ext) {
  fs::path p(path);
  p.replace_extension(ext);
  return p.string();
}

int CmdGen(const std::string& config_path, const std::string& out_path,
           std::optional<std::uint64_t> seed, std::ostream& out) {
  Manifest m;
  m.command = "gen";
  GeneratorConfig cfg = GeneratorConfigFromJson(
      ParseJsonText(ReadFileBytes(config_path), config_path));
  if (seed) cfg.seed = *seed;
  m.config = GeneratorConfigToJson(cfg);
  m.seed = cfg.seed;
  m.inputs["config"] = config_path;
  const GeneratedData gen = Generate(cfg);
  const SplitResult split = Split(gen.data, cfg);
  WriteDataset(MergeForFile(split), out_path);
  m.artifacts.push_back(out_path);
  const std::string truth_path = out_path + ".truth.csv";
  WriteFileBytes(truth_path,
                 MatrixToCsv(gen.ground_truth.entries(), gen.data.label_names));
  m.artifacts.push_back(truth_path);
  WriteManifest(m, out_path + ".manifest.json");
  out << "wrote " << gen.data.examples.size() << " rows ("
      << split.train_labeled.examples.size() << " labeled, "
      << split.train_unlabeled.examples.size() << " unlabeled, "
      << split.test.examples.size() << " test) to " << out_path << "\n";
  return kExitOk;
}

int CmdTrain(const std::string& data_path, const std::string& config_path,
             const std::string& out_dir, std::optional<std::uint64_t> seed,
             int threads, int checkpoint_every,
             const std::string& validation_split, std::ostream& out) {
  Manifest m;
  m.command = "train";
  TrainingConfig cfg = TrainingConfigFromJson(
      ParseJsonText(ReadFileBytes(config_path), config_path));
  if (seed) cfg.seed = *seed;
  ApplyThreads(cfg, threads);
  m.config = TrainingConfigToJson(cfg);
  m.seed = cfg.seed;
  m.inputs["dataset"] = data_path;
  m.inputs["config"] = config_path;
  const M3Dataset data = ReadDataset(data_path);
  const M3Dataset labeled = TrainingRows(data, true);
  const M3Dataset unlabeled = TrainingRows(data, false);
  EnsureDir(out_dir);

  const std::string log_path = (fs::path(out_dir) / "epochs.jsonl").string();
  std::string log;
  auto checkpoint_path = [&](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };
  auto save = [&](const TrainingState& state, const std::string& path) {
    WriteCheckpoint({cfg, data.label_names, state}, path);
    m.artifacts.push_back(path);
  };

  TrainingState state = InitState(labeled, cfg);
  if (checkpoint_every > 0) save(state, checkpoint_path("checkpoint_epoch0000.json"));
  FitFrom(state, labeled, unlabeled, cfg,
          [&](const EpochReport& r, const TrainingState& s) {
            Json rec;
            rec["epoch"] = r.epoch;
            rec["objective"] = r.objective;
            if (!validation_split.empty()) {
              const EvaluationReport ev = Evaluate(s, data, cfg, validation_split);
              Json scores;
              const auto values = ReportValues(ev.fused);
              for (size_t k = 0; k < values.size(); ++k)
                scores[CriterionNames()[k]] = CriterionJson(*values[k]);
              rec["validation"] = scores;
            }
            log += rec.dump() + "\n";
            out << "epoch " << r.epoch << " objective " << FormatDouble(r.objective)
                << "\n";
            if (checkpoint_every > 0 && r.epoch % checkpoint_every == 0) {
              char name[64];
              std::snprintf(name, sizeof(name), "checkpoint_epoch%04d.json", r.epoch);
              save(s, checkpoint_path(name));
            }
          });
  WriteFileBytes(log_path, log);
  m.artifacts.push_back(log_path);
  save(state, checkpoint_path("checkpoint.json"));
  const std::string s_path = checkpoint_path("kernel.csv");
  const std::string m_path = checkpoint_path("cost.csv");
  WriteFileBytes(s_path, MatrixToCsv(state.kernel.entries(), data.label_names));
  WriteFileBytes(m_path, MatrixToCsv(state.cost.entries(), data.label_names));
  m.artifacts.push_back(s_path);
  m.artifacts.push_back(m_path);
  WriteManifest(m, checkpoint_path("manifest.json"));
  out << "trained " << state.epoch << " epochs; checkpoint in " << out_dir << "\n";
  return kExitOk;
}

int CmdEval(const std::string& ckpt_path, const std::string& data_path,
            const std::string& report_path, const std::string& split,
            int threads, std::ostream& out) {
  Manifest m;
  m.command = "eval";
  Checkpoint ckpt = ReadCheckpoint(ckpt_path);
  ApplyThreads(ckpt.config, threads);
  m.config = TrainingConfigToJson(ckpt.config);
  m.seed = ckpt.config.seed;
  m.inputs["checkpoint"] = ckpt_path;
  m.inputs["dataset"] = data_path;
  m.inputs["split"] = split;
  const M3Dataset data = ReadDataset(data_path);
  const EvaluationReport report = Evaluate(ckpt.state, data, ckpt.config, split);
  WriteFileBytes(report_path, ReportToJson(report));
  const std::string csv_path = ReplaceExtension(report_path, ".csv");
  WriteFileBytes(csv_path, ReportToCsv(report));
  m.artifacts = {report_path, csv_path};
  WriteManifest(m, report_path + ".manifest.json");
  out << "evaluated " << report.rows << " rows; fused example_auc "
      << (report.fused.example_auc.value
              ? FormatDouble(*report.fused.example_auc.value)
              : std::string("undefined"))
      << "\n";
  return kExitOk;
}

int CmdInspect(const std::string& ckpt_path, const std::string& out_dir,
               std::ostream& out) {
  Manifest m;
  m.command = "inspect-metric";
  const Checkpoint ckpt = ReadCheckpoint(ckpt_path);
  m.config = TrainingConfigToJson(ckpt.config);
  m.seed = ckpt.config.seed;
  m.inputs["checkpoint"] = ckpt_path;
  EnsureDir(out_dir);
  const auto path = [&](const char* name) {
    return (fs::path(out_dir) / name).string();
  };
  std::string header;
  const Matrix view = CorrelationView(ckpt.state.cost.entries(), &header);
  WriteFileBytes(path("kernel.csv"),
                 MatrixToCsv(ckpt.state.kernel.entries(), ckpt.label_names));
  WriteFileBytes(path("cost.csv"),
                 MatrixToCsv(ckpt.state.cost.entries(), ckpt.label_names));
  WriteFileBytes(path("correlation_view.csv"),
                 "# " + header + "\n" + MatrixToCsv(view, ckpt.label_names));
  m.artifacts = {path("kernel.csv"), path("cost.csv"),
                 path("correlation_view.csv")};
  WriteManifest(m, path("manifest.json"));
  out << "wrote metric views to " << out_dir << "\n";
  return kExitOk;
}

std::optional<std::uint64_t> OptionalSeed(long long seed) {
  if (seed < 0) return std::nullopt;
  return static_cast<std::uint64_t>(seed);
}

}  // namespace

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
      return kExitIo;
    case ErrorCode::kNumericalUnderflow:
    case ErrorCode::kNonFiniteObjective:
    case ErrorCode::kNonFiniteActivation:
    case ErrorCode::kEigenFailure:
    case ErrorCode::kSingularSystem:
    case ErrorCode::kDegenerateBasis:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

EvaluationReport Evaluate(const TrainingState& state, const M3Dataset& data,
                          const TrainingConfig& cfg, const std::string& split) {
  Require(data.label_count == state.net1.label_count() &&
              data.d1 == state.net1.input_dim() &&
              data.d2 == state.net2.input_dim(),
          ErrorCode::kDimensionMismatch,
          "dataset (L=" + std::to_string(data.label_count) +
              ", d_1=" + std::to_string(data.d1) +
              ", d_2=" + std::to_string(data.d2) +
              ") does not match the checkpoint (L=" +
              std::to_string(state.net1.label_count()) +
              ", d_1=" + std::to_string(state.net1.input_dim()) +
              ", d_2=" + std::to_string(state.net2.input_dim()) + ")");
  EvaluationReport r;
  r.split = split;
  std::vector<EvalPair> fused, m1, m2;
  for (const Example& e : data.examples) {
    if (!e.labels) continue;
    if (split != "all" && e.split != split) continue;
    const Bag* b1 = e.m1 ? &*e.m1 : nullptr;
    const Bag* b2 = e.m2 ? &*e.m2 : nullptr;
    auto pair = [&](const Histogram& h) {
      return EvalPair{std::vector<double>(h.values().begin(), h.values().end()),
                      *e.labels};
    };
    fused.push_back(pair(Predict(state, b1, b2, cfg)));
    if (b1) m1.push_back(pair(PredictModality(state, 1, *b1, cfg)));
    if (b2) m2.push_back(pair(PredictModality(state, 2, *b2, cfg)));
  }
  Require(!fused.empty(), ErrorCode::kEmptyInput,
          "empty evaluation set (no labeled rows in split '" + split + "')");
  r.rows = static_cast<int>(fused.size());
  r.modality1_rows = static_cast<int>(m1.size());
  r.modality2_rows = static_cast<int>(m2.size());
  r.fused = EvaluateAll(fused);
  if (!m1.empty()) r.modality1 = EvaluateAll(m1);
  if (!m2.empty()) r.modality2 = EvaluateAll(m2);
  return r;
}

std::string ReportToJson(const EvaluationReport& r) {
  Json j;
  j["split"] = r.split;
  j["rows"] = r.rows;
  auto scope = [](const MetricReport& m, int rows) {
    Json s;
    s["rows"] = rows;
    const auto values = ReportValues(m);
    for (size_t k = 0; k < values.size(); ++k)
      s[CriterionNames()[k]] = CriterionJson(*values[k]);
    return s;
  };
  j["modality_1"] = scope(r.modality1, r.modality1_rows);
  j["modality_2"] = scope(r.modality2, r.modality2_rows);
  j["fused"] = scope(r.fused, r.rows);
  return j.dump(2) + "\n";
}

std::string ReportToCsv(const EvaluationReport& r) {
  std::string out = "scope,rows";
  for (const auto& n : CriterionNames()) out += "," + n;
  out += "\n";
  auto row = [&out](const std::string& name, const MetricReport& m, int rows) {
    out += name + "," + std::to_string(rows);
    for (const Criterion* c : ReportValues(m))
      out += "," + (c->value ? FormatDouble(*c->value) : std::string());
    out += "\n";
  };
  row("modality_1", r.modality1, r.modality1_rows);
  row("modality_2", r.modality2, r.modality2_rows);
  row("fused", r.fused, r.rows);
  return out;
}

Matrix CorrelationView(const Matrix& cost, std::string* header) {
  const Matrix neg = -cost;
  const double lo = neg.minCoeff();
  const double hi = neg.maxCoeff();
  const double span = hi - lo;
  Matrix view = span > 0.0
                    ? Matrix(((neg.array() - lo) * (2.0 / span) - 1.0).matrix())
                    : Matrix(Matrix::Ones(cost.rows(), cost.cols()));
  if (header) {
    *header = "view = 2 * (-M - a) / (b - a) - 1 with a = min(-M) = " +
              FormatDouble(lo) + ", b = max(-M) = " + FormatDouble(hi);
  }
  return view;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Multi-modal multi-instance multi-label learning with optimal "
               "transport"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config, output, data, checkpoint, split = "test", validation;
  long long seed = -1;
  int threads = -1;
  int checkpoint_every = 0;

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--config", config, "Generator config (JSON)")->required();
  gen->add_option("--out", output, "Dataset path (.jsonl or .jsonl.gz)")->required();
  gen->add_option("--seed", seed, "Override the config seed");

  CLI::App* train = app.add_subcommand("train", "Train on a dataset");
  train->add_option("--data", data, "Dataset path")->required();
  train->add_option("--config", config, "Training config (JSON)")->required();
  train->add_option("--out-dir", output, "Output directory")->required();
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--threads", threads, "Worker threads (0 = all cores)");
  train->add_option("--checkpoint-every", checkpoint_every,
                    "Also write a checkpoint every N epochs");
  train->add_option("--validation-split", validation,
                    "Log fused metrics on rows with this split tag");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();
  eval->add_option("--data", data, "Dataset path")->required();
  eval->add_option("--report", output, "Report path (.json; a .csv is written alongside)")
      ->required();
  eval->add_option("--split", split, "Split tag to evaluate, or 'all'");
  eval->add_option("--threads", threads, "Worker threads (0 = all cores)");

  CLI::App* inspect =
      app.add_subcommand("inspect-metric", "Export the learned kernel and cost");
  inspect->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();
  inspect->add_option("--out-dir", output, "Output directory")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  try {
    if (*gen) return CmdGen(config, output, OptionalSeed(seed), out);
    if (*train)
      return CmdTrain(data, config, output, OptionalSeed(seed), threads,
                      checkpoint_every, validation, out);
    if (*eval) return CmdEval(checkpoint, data, output, split, threads, out);
    if (*inspect) return CmdInspect(checkpoint, output, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace m3dn
