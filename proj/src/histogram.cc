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

#include "m3dn/histogram.h"

#include <cmath>
#include <string>

#include "m3dn/status.h"

namespace m3dn {

Vector Histogram::AsVector() const {
  return Eigen::Map<const Vector>(values_.data(), size());
}

bool Histogram::StrictlyPositive() const {
  for (double x : values_)
    if (!(x > 0.0)) return false;
  return true;
}

Histogram MakeHistogram(std::span<const double> raw, HistogramMode mode) {
  Require(raw.size() >= 2, ErrorCode::kInvalidArgument,
          "a histogram needs at least two entries, got " +
              std::to_string(raw.size()));
  double sum = 0.0;
  for (size_t i = 0; i < raw.size(); ++i) {
    Require(std::isfinite(raw[i]), ErrorCode::kInvalidArgument,
            "non-finite entry at index " + std::to_string(i));
    Require(raw[i] >= 0.0, ErrorCode::kNegativeEntry,
            "entry " + std::to_string(i) + " is negative");
    sum += raw[i];
  }
  std::vector<double> values(raw.begin(), raw.end());
  if (mode == HistogramMode::kStrict) {
    Require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::kNotNormalized,
            "entries sum to " + std::to_string(sum));
  } else {
    Require(sum > 0.0, ErrorCode::kAllZero, "no positive entry to normalize");
    for (double& x : values) x /= sum;
  }
  return Histogram(std::move(values));
}

}  // namespace m3dn
