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

#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "m3dn/checkpoint.h"
#include "m3dn/cli.h"
#include "m3dn/config_io.h"
#include "m3dn/dataset.h"
#include "m3dn/generator.h"
#include "m3dn/ground_metric.h"

namespace m3dn {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("m3dn_cli_test_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  int Run(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return RunCli(args, out_, err_);
  }

  std::string WriteJson(const std::string& name, const Json& j) {
    const std::string p = Path(name);
    WriteFileBytes(p, j.dump(2));
    return p;
  }

  static GeneratorConfig SmallGen() {
    GeneratorConfig g;
    g.bag_count = 60;
    g.label_count = 4;
    g.d1 = 5;
    g.d2 = 6;
    g.instances_m1 = {1, 3};
    g.instances_m2 = {1, 3};
    g.seed = 2;
    return g;
  }

  static TrainingConfig SmallTrain() {
    TrainingConfig t;
    t.hidden_widths = {6};
    t.max_epochs = 2;
    t.batch_size = 8;
    return t;
  }

  // Generates a dataset and returns its path.
  std::string Gen(const GeneratorConfig& g, const std::string& name = "data.jsonl") {
    const std::string cfg = WriteJson(name + ".gen.json", GeneratorConfigToJson(g));
    EXPECT_EQ(Run({"gen", "--config", cfg, "--out", Path(name)}), kExitOk)
        << err_.str();
    return Path(name);
  }

  std::string Train(const std::string& data, const TrainingConfig& t,
                    const std::string& out_dir) {
    const std::string cfg = WriteJson(out_dir + ".train.json", TrainingConfigToJson(t));
    EXPECT_EQ(Run({"train", "--data", data, "--config", cfg, "--out-dir",
                   Path(out_dir)}),
              kExitOk)
        << err_.str();
    return Path(out_dir);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, GenWritesDatasetAndManifest) {
  const std::string data = Gen(SmallGen());
  EXPECT_TRUE(fs::exists(data));
  const Json manifest = Json::parse(ReadFileBytes(data + ".manifest.json"));
  EXPECT_EQ(manifest["command"], "gen");
  EXPECT_EQ(manifest["seed"], 2);
  for (const auto& a : manifest["artifacts"])
    EXPECT_TRUE(fs::exists(a.get<std::string>())) << a;
  EXPECT_EQ(manifest["config"]["bag_count"], 60);
  const M3Dataset d = ReadDataset(data);
  EXPECT_EQ(d.examples.size(), 60u);
}

TEST_F(CliTest, GenIsDeterministic) {
  const std::string a = ReadFileBytes(Gen(SmallGen(), "a.jsonl"));
  const std::string b = ReadFileBytes(Gen(SmallGen(), "b.jsonl"));
  EXPECT_EQ(a, b);
  const std::string cfg = WriteJson("g.json", GeneratorConfigToJson(SmallGen()));
  EXPECT_EQ(Run({"gen", "--config", cfg, "--out", Path("c.jsonl"), "--seed", "3"}),
            kExitOk);
  EXPECT_NE(ReadFileBytes(Path("c.jsonl")), a);
}

TEST_F(CliTest, GenRejectsBadFraction) {
  Json j = GeneratorConfigToJson(SmallGen());
  j["labeled_fraction"] = 1.5;
  const std::string cfg = WriteJson("bad.json", j);
  EXPECT_EQ(Run({"gen", "--config", cfg, "--out", Path("x.jsonl")}), kExitValidation);
  EXPECT_NE(err_.str().find("labeled_fraction"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(Path("x.jsonl")));
}

TEST_F(CliTest, IoAndUsageErrors) {
  EXPECT_EQ(Run({"gen", "--config", Path("missing.json"), "--out", Path("x.jsonl")}),
            kExitIo);
  const std::string cfg = WriteJson("g.json", GeneratorConfigToJson(SmallGen()));
  EXPECT_EQ(Run({"gen", "--config", cfg, "--out", Path("no/such/dir/x.jsonl")}),
            kExitIo);
  EXPECT_EQ(Run({"frobnicate"}), kExitValidation);
  EXPECT_EQ(Run({}), kExitValidation);
  EXPECT_EQ(Run({"gen", "--config", cfg}), kExitValidation);
  WriteFileBytes(Path("broken.json"), "{");
  EXPECT_EQ(Run({"gen", "--config", Path("broken.json"), "--out", Path("x.jsonl")}),
            kExitValidation);
  EXPECT_EQ(Run({"--version"}), kExitOk);
  EXPECT_NE(out_.str().find(kToolVersion), std::string::npos);
}

TEST_F(CliTest, ExitCodeTable) {
  EXPECT_EQ(ExitCodeFor(ErrorCode::kIoError), kExitIo);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kInvalidConfig), kExitValidation);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kParseError), kExitValidation);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kDimensionMismatch), kExitValidation);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kNonFiniteObjective), kExitNumerical);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kNumericalUnderflow), kExitNumerical);
}

TEST_F(CliTest, TrainZeroEpochsWritesInitialCheckpointOnly) {
  const std::string data = Gen(SmallGen());
  TrainingConfig t = SmallTrain();
  t.max_epochs = 0;
  const std::string out = Train(data, t, "run");
  const Checkpoint ckpt = ReadCheckpoint(out + "/checkpoint.json");
  EXPECT_EQ(ckpt.state.epoch, 0);
  EXPECT_TRUE(ckpt.state.objective_history.empty());
  EXPECT_EQ(ReadFileBytes(out + "/epochs.jsonl"), "");
  int checkpoints = 0;
  for (const auto& entry : fs::directory_iterator(out))
    checkpoints += entry.path().filename().string().rfind("checkpoint", 0) == 0;
  EXPECT_EQ(checkpoints, 1);
  const Json manifest = Json::parse(ReadFileBytes(out + "/manifest.json"));
  for (const auto& a : manifest["artifacts"])
    EXPECT_TRUE(fs::exists(a.get<std::string>())) << a;
  EXPECT_EQ(manifest["config"]["max_epochs"], 0);
}

TEST_F(CliTest, TrainWritesLogCsvAndPeriodicCheckpoints) {
  const std::string data = Gen(SmallGen());
  const std::string cfg = WriteJson("t.json", TrainingConfigToJson(SmallTrain()));
  ASSERT_EQ(Run({"train", "--data", data, "--config", cfg, "--out-dir", Path("run"),
                 "--checkpoint-every", "1", "--validation-split", "test",
                 "--threads", "2"}),
            kExitOk)
      << err_.str();
  std::istringstream log(ReadFileBytes(Path("run/epochs.jsonl")));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const Json rec = Json::parse(line);
    EXPECT_EQ(rec["epoch"], ++lines);
    EXPECT_TRUE(rec["objective"].is_number());
    EXPECT_TRUE(rec["validation"].contains("example_auc"));
  }
  EXPECT_EQ(lines, 2);
  for (const char* f : {"checkpoint_epoch0000.json", "checkpoint_epoch0001.json",
                        "checkpoint_epoch0002.json", "kernel.csv", "cost.csv"})
    EXPECT_TRUE(fs::exists(Path(std::string("run/") + f))) << f;
  std::vector<std::string> names;
  const Matrix m = MatrixFromCsv(ReadFileBytes(Path("run/cost.csv")), &names);
  EXPECT_NO_THROW(CostMatrix::FromMatrix(m));
  EXPECT_EQ(names.size(), 4u);
}

TEST_F(CliTest, SemiWithoutUnlabeledRowsMatchesSupervised) {
  GeneratorConfig g = SmallGen();
  g.labeled_fraction = 1.0;
  const std::string data = Gen(g);
  TrainingConfig t = SmallTrain();
  const std::string a = Train(data, t, "sup");
  t.semi_supervised = true;
  const std::string b = Train(data, t, "semi");
  for (const char* f : {"/epochs.jsonl", "/kernel.csv", "/cost.csv"})
    EXPECT_EQ(ReadFileBytes(a + f), ReadFileBytes(b + f)) << f;
}

TEST_F(CliTest, TrainNumericalFailureExitsThree) {
  const std::string data = Gen(SmallGen());
  TrainingConfig t = SmallTrain();
  t.activation = Activation::kLinear;
  t.learning_rate = 1e300;
  const std::string cfg = WriteJson("t.json", TrainingConfigToJson(t));
  EXPECT_EQ(Run({"train", "--data", data, "--config", cfg, "--out-dir", Path("run")}),
            kExitNumerical)
      << err_.str();
}

TEST_F(CliTest, EvalReportIsReproducible) {
  const std::string data = Gen(SmallGen());
  const std::string run = Train(data, SmallTrain(), "run");
  const std::string ckpt = run + "/checkpoint.json";
  ASSERT_EQ(Run({"eval", "--checkpoint", ckpt, "--data", data, "--report",
                 Path("r1.json")}),
            kExitOk)
      << err_.str();
  ASSERT_EQ(Run({"eval", "--checkpoint", ckpt, "--data", data, "--report",
                 Path("r2.json"), "--threads", "1"}),
            kExitOk);
  EXPECT_EQ(ReadFileBytes(Path("r1.json")), ReadFileBytes(Path("r2.json")));
  EXPECT_EQ(ReadFileBytes(Path("r1.csv")), ReadFileBytes(Path("r2.csv")));
  const Json report = Json::parse(ReadFileBytes(Path("r1.json")));
  for (const char* part : {"modality_1", "modality_2", "fused"})
    for (const auto& name : CriterionNames())
      EXPECT_TRUE(report[part].contains(name)) << part << " " << name;
  EXPECT_TRUE(fs::exists(Path("r1.json.manifest.json")));
}

TEST_F(CliTest, EvalErrors) {
  GeneratorConfig g = SmallGen();
  g.test_fraction = 0.0;
  const std::string data = Gen(g);
  const std::string run = Train(data, SmallTrain(), "run");
  const std::string ckpt = run + "/checkpoint.json";
  EXPECT_EQ(Run({"eval", "--checkpoint", ckpt, "--data", data, "--report",
                 Path("r.json")}),
            kExitValidation);
  EXPECT_NE(err_.str().find("empty evaluation set"), std::string::npos) << err_.str();

  GeneratorConfig wide = SmallGen();
  wide.d1 = 9;
  const std::string other = Gen(wide, "wide.jsonl");
  EXPECT_EQ(Run({"eval", "--checkpoint", ckpt, "--data", other, "--report",
                 Path("r.json")}),
            kExitValidation);
  EXPECT_EQ(Run({"eval", "--checkpoint", Path("nope.json"), "--data", data,
                 "--report", Path("r.json")}),
            kExitIo);
}

TEST_F(CliTest, InspectFixedMetricExportsReference) {
  const std::string data = Gen(SmallGen());
  TrainingConfig t = SmallTrain();
  t.fixed_metric = true;
  const std::string run = Train(data, t, "run");
  ASSERT_EQ(Run({"inspect-metric", "--checkpoint", run + "/checkpoint.json",
                 "--out-dir", Path("view")}),
            kExitOk)
      << err_.str();
  const Checkpoint ckpt = ReadCheckpoint(run + "/checkpoint.json");
  const std::string want =
      MatrixToCsv(ckpt.state.reference.entries(), ckpt.label_names);
  EXPECT_EQ(ReadFileBytes(Path("view/kernel.csv")), want);
  const Matrix m = MatrixFromCsv(ReadFileBytes(Path("view/cost.csv")));
  EXPECT_NO_THROW(CostMatrix::FromMatrix(m));
  std::string view_text = ReadFileBytes(Path("view/correlation_view.csv"));
  ASSERT_EQ(view_text.rfind("# ", 0), 0u);
  view_text = view_text.substr(view_text.find('\n') + 1);
  const Matrix view = MatrixFromCsv(view_text);
  EXPECT_NEAR(view.minCoeff(), -1.0, 1e-12);
  EXPECT_NEAR(view.maxCoeff(), 1.0, 1e-12);
  EXPECT_TRUE(fs::exists(Path("view/manifest.json")));
}

TEST(CorrelationViewTest, AffineMapOfNegatedCost) {
  Matrix m(2, 2);
  m << 0.0, 2.0, 2.0, 0.0;
  std::string header;
  const Matrix v = CorrelationView(m, &header);
  EXPECT_EQ(v(0, 0), 1.0);
  EXPECT_EQ(v(0, 1), -1.0);
  EXPECT_FALSE(header.empty());
  EXPECT_EQ(CorrelationView(Matrix::Zero(2, 2), nullptr), Matrix::Ones(2, 2));
}

// A long run on noiseless single-instance data fits its own training rows.
TEST_F(CliTest, NoiselessTrainingSetIsFit) {
  GeneratorConfig g = SmallGen();
  g.bag_count = 200;
  g.noise_level = 0.0;
  g.instances_m1 = {1, 1};
  g.instances_m2 = {1, 1};
  g.labeled_fraction = 1.0;
  g.test_fraction = 0.0;
  const std::string data = Gen(g);
  TrainingConfig t;
  t.hidden_widths = {16};
  t.max_epochs = 60;
  t.learning_rate = 0.2;
  const std::string run = Train(data, t, "run");
  ASSERT_EQ(Run({"eval", "--checkpoint", run + "/checkpoint.json", "--data", data,
                 "--report", Path("r.json"), "--split", "all"}),
            kExitOk);
  const Json report = Json::parse(ReadFileBytes(Path("r.json")));
  EXPECT_GE(report["fused"]["example_auc"].get<double>(), 0.99);
}

}  // namespace
}  // namespace m3dn
