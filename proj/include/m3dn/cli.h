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

#ifndef M3DN_CLI_H_
#define M3DN_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "m3dn/metrics.h"
#include "m3dn/status.h"
#include "m3dn/trainer.h"

namespace m3dn {

inline constexpr char kToolVersion[] = "0.1.0";

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

int ExitCodeFor(ErrorCode code);

// Parses `args` (without the program name) and runs the subcommand. Errors
// are reported on `err` and mapped to exit codes; nothing throws.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

// Six criteria for one modality and for the fused prediction.
struct EvaluationReport {
  std::string split;
  int rows = 0;
  MetricReport modality1;
  MetricReport modality2;
  MetricReport fused;
  int modality1_rows = 0;
  int modality2_rows = 0;
};

// Evaluates `state` on the labeled rows of `data` tagged `split` ("all"
// takes every labeled row). Throws kEmptyInput with "empty evaluation set"
// when no row qualifies, and kDimensionMismatch when the data does not fit
// the networks.
EvaluationReport Evaluate(const TrainingState& state, const M3Dataset& data,
                          const TrainingConfig& cfg, const std::string& split);

std::string ReportToJson(const EvaluationReport& report);
std::string ReportToCsv(const EvaluationReport& report);

// Affine map of -M onto [-1, 1]: the largest cost goes to -1 and the
// smallest to 1. Returns the view and, through `header`, a one-line
// description of the coefficients.
Matrix CorrelationView(const Matrix& cost, std::string* header);

}  // namespace m3dn

#endif  // M3DN_CLI_H_
