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

#ifndef M3DN_HISTOGRAM_H_
#define M3DN_HISTOGRAM_H_

#include <span>
#include <vector>

#include "m3dn/linalg.h"

namespace m3dn {

enum class HistogramMode {
  kStrict,     // Input must already sum to one.
  kNormalize,  // Input is divided by its sum.
};

// A probability vector on the label simplex: L >= 2 nonnegative entries
// summing to one (within 1e-9).
class Histogram {
 public:
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  Vector AsVector() const;

  bool StrictlyPositive() const;

 private:
  friend Histogram MakeHistogram(std::span<const double> raw,
                                 HistogramMode mode);
  explicit Histogram(std::vector<double> values)
      : values_(std::move(values)) {}

  std::vector<double> values_;
};

// Places `raw` on the simplex. Errors: kNegativeEntry, kAllZero (normalize
// mode without a positive entry), kNotNormalized (strict mode, |sum-1|>1e-9),
// kInvalidArgument (fewer than two entries or non-finite values).
Histogram MakeHistogram(std::span<const double> raw, HistogramMode mode);

inline Histogram MakeHistogram(const Vector& raw, HistogramMode mode) {
  return MakeHistogram(std::span<const double>(raw.data(), raw.size()), mode);
}

}  // namespace m3dn

#endif  // M3DN_HISTOGRAM_H_
