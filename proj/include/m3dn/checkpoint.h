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

#ifndef M3DN_CHECKPOINT_H_
#define M3DN_CHECKPOINT_H_

#include <string>
#include <vector>

#include "m3dn/trainer.h"

namespace m3dn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainingConfig config;
  std::vector<std::string> label_names;
  TrainingState state;
};

// JSON document holding the config echo, label names, both networks
// (per-layer shapes, activations and flat column-major parameters), S, S0,
// the epoch counter and the objective history. Serialization is
// deterministic, so equal states give equal bytes.
std::string SerializeCheckpoint(const Checkpoint& ckpt);

// Errors: kParseError, kSchemaVersionMismatch, kDimensionMismatch, kNotPsd.
Checkpoint ParseCheckpoint(const std::string& text);

void WriteCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint ReadCheckpoint(const std::string& path);

}  // namespace m3dn

#endif  // M3DN_CHECKPOINT_H_
