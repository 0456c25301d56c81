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

#ifndef M3DN_DATASET_H_
#define M3DN_DATASET_H_

#include <optional>
#include <string>
#include <vector>

#include "m3dn/modal_net.h"

namespace m3dn {

inline constexpr int kDatasetVersion = 1;

// One bag pair. Either bag may be missing (masked modality); `labels` is
// absent for unlabeled rows.
struct Example {
  std::string id;
  std::optional<Bag> m1;
  std::optional<Bag> m2;
  std::optional<std::vector<int>> labels;
  // Free-form split tag ("train", "test"); empty when untagged.
  std::string split;

  int bag_count() const { return (m1 ? 1 : 0) + (m2 ? 1 : 0); }
  const std::optional<Bag>& bag(int modality) const {
    return modality == 1 ? m1 : m2;
  }
};

struct M3Dataset {
  int label_count = 0;
  int d1 = 0;
  int d2 = 0;
  std::vector<std::string> label_names;
  std::vector<Example> examples;

  int labeled_count() const;
  int unlabeled_count() const;
  // Copies of the rows whose split tag equals `split`.
  M3Dataset Subset(const std::string& split) const;
  // Shares the header with `this` and holds the given rows.
  M3Dataset WithExamples(std::vector<Example> rows) const;
};

// Checks the header and every row: label_count >= 2, one name per label,
// at least one bag per row, feature dimensions, label length and 0/1
// values. Errors: kDimensionInconsistency naming the row.
void ValidateDataset(const M3Dataset& data);

// JSON-lines text: a header object then one object per row.
std::string SerializeDataset(const M3Dataset& data);
M3Dataset ParseDataset(const std::string& text);

// Files ending in ".gz" are gzip-compressed. Errors: kIoError, kParseError
// (with line number), kSchemaVersionMismatch, kDimensionInconsistency.
M3Dataset ReadDataset(const std::string& path);
void WriteDataset(const M3Dataset& data, const std::string& path);

// Raw file helpers shared with the CLI; gzip chosen by extension.
std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, const std::string& bytes);

}  // namespace m3dn

#endif  // M3DN_DATASET_H_
