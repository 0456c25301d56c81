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

#ifndef M3DN_CONFIG_IO_H_
#define M3DN_CONFIG_IO_H_

#include <string>

#include "json.hpp"
#include "m3dn/generator.h"
#include "m3dn/trainer.h"

namespace m3dn {

using Json = nlohmann::ordered_json;

// Parsers fill defaults for absent fields and reject unknown ones. Errors
// are kInvalidConfig with a dotted field path, e.g.
// "sinkhorn.max_iter: expected an integer".
TrainingConfig TrainingConfigFromJson(const Json& j);
Json TrainingConfigToJson(const TrainingConfig& cfg);

GeneratorConfig GeneratorConfigFromJson(const Json& j);
Json GeneratorConfigToJson(const GeneratorConfig& cfg);

// Parses JSON text; kInvalidConfig with the parser position on failure.
Json ParseJsonText(const std::string& text, const std::string& what);

}  // namespace m3dn

#endif  // M3DN_CONFIG_IO_H_
